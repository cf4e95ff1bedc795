import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsl_corpus import CASES, H2
from hyperrank.dsl import (
    BinOp,
    Call,
    DomainError,
    DSLError,
    DSLSyntaxError,
    Neg,
    Num,
    Var,
    _Parser,
    eval_entry,
    parse_metric,
    to_source,
)
from hyperrank.dual import Dual
from hyperrank.spaces import horospherical_model
from hyperrank.tensor import christoffel


@pytest.mark.parametrize("name,source,expected", CASES, ids=[c[0] for c in CASES])
def test_parser_corpus(name, source, expected):
    if expected is None:
        spec = parse_metric(source)
        assert spec.dim == len(spec.coords)
        return
    cls, line, col = expected
    with pytest.raises(cls) as info:
        parse_metric(source)
    err = info.value
    assert (err.line, err.col) == (line, col)
    assert f"line {line}, column {col}" in str(err)
    assert "^" in err.snippet


def test_unclosed_paren_snippet_points_at_paren():
    with pytest.raises(DSLSyntaxError) as info:
        parse_metric("g[t,t]=exp(")
    lines = info.value.snippet.splitlines()
    assert lines[0].strip() == "g[t,t]=exp("
    assert lines[1].index("^") == lines[0].index("(")


def test_h2_spec_matches_direct_evaluation():
    g = parse_metric(H2).to_metric_field()
    ref = horospherical_model(2)
    rng = np.random.default_rng(0)
    for p in rng.uniform(-3, 3, size=(100, 2)):
        np.testing.assert_allclose(g.evaluate(p), ref.evaluate(p), rtol=1e-12, atol=0)
        np.testing.assert_allclose(christoffel(g, p).gamma, christoffel(ref, p).gamma, rtol=1e-12, atol=1e-14)


def test_eval_entry_values_and_duals():
    spec = parse_metric(H2)
    e = spec.entries[(1, 1)]
    assert eval_entry(e, [0.0, 0.0], spec.coords) == 1.0
    t = Dual(1.0, np.array([1.0, 0.0]))
    d = eval_entry(e, [t, Dual(0.0, np.array([0.0, 1.0]))], spec.coords)
    assert d.val == pytest.approx(math.exp(-2))
    assert d.grad[0] == pytest.approx(-2 * math.exp(-2))


def test_domain_errors_at_evaluation():
    spec = parse_metric("dim=1; coords=t; g[t,t]=1/t; box[t]=1,2")
    with pytest.raises(DomainError):
        eval_entry(spec.entries[(0, 0)], [0.0], spec.coords)
    spec = parse_metric("dim=1; coords=t; g[t,t]=log(t); box[t]=2,3")
    with pytest.raises(DomainError):
        eval_entry(spec.entries[(0, 0)], [-1.0], spec.coords)


def test_precedence_and_associativity():
    e = _Parser("2^3^2").expr()
    assert eval_entry(e, [], ()) == 2.0 ** 9
    e = _Parser("-2^2").expr()
    assert eval_entry(e, [], ()) == -4.0
    e = _Parser("8/4/2 - 1 - 1").expr()
    assert eval_entry(e, [], ()) == -1.0


@pytest.mark.parametrize("name,source", [(n, s) for n, s, e in CASES if e is None])
def test_dual_derivative_matches_central_differences(name, source):
    spec = parse_metric(source)
    g = spec.to_metric_field()
    rng = np.random.default_rng(1)
    box = np.asarray(g.box)
    for p in box[:, 0] + rng.random((5, g.dim)) * (box[:, 1] - box[:, 0]):
        _, dg = g.jet(p, order=1)
        for k in range(g.dim):
            h = 1e-6 * max(1.0, abs(p[k]))
            e = np.zeros(g.dim)
            e[k] = h
            fd = (g.evaluate(p + e) - g.evaluate(p - e)) / (2 * h)
            np.testing.assert_allclose(dg[k], fd, rtol=1e-7, atol=1e-7 * max(1.0, np.abs(fd).max()))


# ---------------------------------------------------------------- round trip

NAMES = ["t", "y", "z1"]
FUNCS = ["exp", "log", "sqrt", "sin", "cos", "sinh", "cosh"]

leaves = st.one_of(
    st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(lambda v: Num(v)),
    st.sampled_from(NAMES).map(lambda n: Var(n)),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.builds(BinOp, st.sampled_from("+-*/^"), children, children),
        st.builds(Call, st.sampled_from(FUNCS), children),
    )


expressions = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(expressions)
def test_expression_round_trip(tree):
    text = to_source(tree)
    assert _Parser(text).expr() == tree


@settings(max_examples=50, deadline=None)
@given(st.lists(expressions, min_size=3, max_size=3))
def test_metric_round_trip(exprs):
    source = "dim=3; coords=t,y,z1\n" + "\n".join(
        f"g[{a},{b}]={to_source(e)}" for (a, b), e in zip([("t", "t"), ("t", "y"), ("z1", "z1")], exprs)
    )
    spec = parse_metric(source, validate=False)
    again = parse_metric(spec.to_source(), validate=False)
    assert again == spec
    assert again.to_source() == spec.to_source()


def test_never_crashes_on_garbage():
    rng = np.random.default_rng(7)
    alphabet = list("dimcoordsg[t,y]=01.5e+-*/^()exp log;\n#$ ")
    for _ in range(300):
        text = "".join(rng.choice(alphabet, size=rng.integers(1, 40)))
        try:
            parse_metric(text)
        except DSLError as exc:
            assert exc.line >= 1 and exc.col >= 1
