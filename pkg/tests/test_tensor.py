import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import metric_corpus, random_points
from hyperrank.errors import DegeneratePlane, NoSplit, NotTangentToLevel, OutOfDomain, SingularMetric
from hyperrank.spaces import flat, horospherical_model, stretch
from hyperrank.tensor import (
    MetricField,
    TangentPlane,
    christoffel,
    christoffel_finite_difference,
    curvature_tensor_norm_estimate,
    orthonormalize,
    riemann,
    second_fundamental_form,
    sectional_curvature,
)
from oracle import oracle

# package metric -> sympy oracle name
ORACLE_PAIRS = {"H2": "H2", "H3a2": "H3a2", "perturbed": "perturbed", "pullback": "pullback", "product": "H2xH2"}


@pytest.mark.parametrize("name", sorted(ORACLE_PAIRS))
def test_christoffel_and_riemann_match_symbolic(name):
    g = metric_corpus()[name]
    ref = oracle(ORACLE_PAIRS[name])
    for p in random_points(g, 10, seed=1):
        np.testing.assert_allclose(christoffel(g, p).gamma, ref.christoffel(p), rtol=1e-10, atol=1e-10)
        R = riemann(g, p)
        scale = max(1.0, np.abs(ref.riemann(p)).max())
        np.testing.assert_allclose(R.lowered, ref.riemann(p), rtol=0, atol=1e-9 * scale)


def test_h2_christoffel_at_origin():
    G = christoffel(horospherical_model(2), [0.0, 0.0]).gamma
    expected = np.zeros((2, 2, 2))
    expected[0, 1, 1] = 1.0
    expected[1, 0, 1] = expected[1, 1, 0] = -1.0
    np.testing.assert_allclose(G, expected, atol=1e-15)


@pytest.mark.parametrize("g", [flat(2, split=False), stretch(flat(2), 7.0)], ids=["flat", "stretched-flat"])
def test_constant_metrics_have_no_christoffels_or_curvature(g):
    for p in random_points(g, 5, seed=2):
        assert np.all(christoffel(g, p).gamma == 0)
        assert np.all(riemann(g, p).lowered == 0)


def test_h2_sectional_curvature_is_minus_one():
    R = riemann(horospherical_model(2), [0.0, 0.0])
    assert R.lowered[0, 1, 0, 1] / (R.metric[0, 0] * R.metric[1, 1]) == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize("dim,a", [(2, 1.0), (2, 2.0), (3, 1.0), (3, 2.0), (4, 0.5)])
def test_constant_curvature(dim, a):
    g = horospherical_model(dim, a=a)
    rng = np.random.default_rng(5)
    for p in random_points(g, 20, seed=dim):
        u, v = rng.standard_normal((2, dim))
        assert sectional_curvature(g, TangentPlane(p, u, v)) == pytest.approx(-a * a, abs=1e-9)


def test_degenerate_plane():
    g = horospherical_model(3)
    u = np.array([1.0, 2.0, 0.5])
    with pytest.raises(DegeneratePlane):
        sectional_curvature(g, TangentPlane(np.zeros(3), u, 2 * u))


def test_out_of_domain_and_singular():
    g = horospherical_model(2)
    with pytest.raises(OutOfDomain):
        christoffel(g, [5.0, 0.0])
    bad = MetricField(2, lambda x: [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularMetric):
        christoffel(bad, [0.0, 0.0])


@pytest.mark.parametrize("name", sorted(metric_corpus()))
def test_symmetries_on_corpus(name):
    g = metric_corpus()[name]
    for p in random_points(g, 20, seed=3):
        res = riemann(g, p).symmetry_residuals()
        assert max(res.values()) <= 1e-8, res


@pytest.mark.parametrize("name", sorted(metric_corpus()))
def test_dual_christoffel_matches_finite_differences(name):
    g = metric_corpus()[name]
    for p in random_points(g, 10, seed=4):
        fd = christoffel_finite_difference(g, p)
        np.testing.assert_allclose(christoffel(g, p).gamma, fd, rtol=0, atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(
    p=arrays(float, 3, elements=st.floats(-2.5, 2.5)),
    uv=arrays(float, (2, 3), elements=st.floats(-3, 3)),
    m=arrays(float, (2, 2), elements=st.floats(-3, 3)),
)
def test_sectional_is_basis_invariant(p, uv, m):
    g = metric_corpus()["perturbed"]
    R = riemann(g, p)
    G = R.metric
    u, v = uv
    gram = (u @ G @ u) * (v @ G @ v) - (u @ G @ v) ** 2
    if gram < 1e-3 or abs(np.linalg.det(m)) < 1e-2:
        return
    u2, v2 = m @ uv
    k1 = R.sectional(u, v)
    k2 = R.sectional(u2, v2)
    assert k2 == pytest.approx(k1, rel=1e-9, abs=1e-12)


def test_curvature_norm_estimate():
    assert curvature_tensor_norm_estimate(flat(3), np.zeros(3), 10, 0) == 0.0
    h2 = horospherical_model(2)
    assert curvature_tensor_norm_estimate(h2, [0.4, -1.0], 100, 0) == pytest.approx(1.0, abs=0.05)
    with pytest.raises(ValueError):
        curvature_tensor_norm_estimate(h2, [0.0, 0.0], 0, 0)
    # deterministic given the seed
    g = metric_corpus()["perturbed"]
    p = [0.3, 0.2, -0.1]
    assert curvature_tensor_norm_estimate(g, p, 5, 9) == curvature_tensor_norm_estimate(g, p, 5, 9)


def test_second_fundamental_form():
    h2 = horospherical_model(2)
    for t in (-1.0, 0.0, 2.0):
        B = np.array([0.0, math.exp(t)])  # unit for e^{-2t} dy²
        assert second_fundamental_form(h2, [t, 0.3], B, B) == pytest.approx(1.0, abs=1e-12)
    B = np.array([0.0, 1.0])
    assert second_fundamental_form(horospherical_model(2, a=2.0), [0.0, 0.0], B, B) == pytest.approx(2.0)
    assert second_fundamental_form(flat(2), [0.0, 0.0], B, B) == 0.0
    with pytest.raises(NotTangentToLevel):
        second_fundamental_form(h2, [0.0, 0.0], [1.0, 0.0], B)
    with pytest.raises(NoSplit):
        second_fundamental_form(flat(2, split=False), [0.0, 0.0], B, B)


def test_orthonormalize():
    G = np.diag([2.0, 0.5, 1.0])
    E = orthonormalize(G, np.eye(3))
    np.testing.assert_allclose(np.array(E) @ G @ np.array(E).T, np.eye(3), atol=1e-14)
    assert orthonormalize(G, [[1.0, 0, 0], [2.0, 0, 0]]) is None
