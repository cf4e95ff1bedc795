"""Acceptance criteria 1-10, one test each.

Every test prints a single ``criterion N: PASS|FAIL  detail`` line (shown
even under pytest's output capture) and then asserts.  Run directly with
``python3 tests/test_acceptance.py`` for just the summary lines.
"""

import contextlib
import io
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import h2h2_embedding, horospherical_corpus, metric_corpus, random_points  # noqa: E402
from dsl_corpus import CASES  # noqa: E402
from hyperrank.bilipschitz import run_bilipschitz_experiment, upper_constant  # noqa: E402
from hyperrank.cli import main  # noqa: E402
from hyperrank.dsl import DSLError, parse_metric  # noqa: E402
from hyperrank.geodesics import closed_form_distance, distance  # noqa: E402
from hyperrank.pinch import (  # noqa: E402
    curvature_lower_bound,
    curvature_upper_bound,
    estimate_constants,
    lambda_threshold,
    rank_additivity,
    verify_stretch_pinching,
)
from hyperrank.spaces import horospherical_model, level_metric, product, pullback_diagonal  # noqa: E402
from hyperrank.tensor import christoffel, christoffel_finite_difference, riemann, sectional_curvature, TangentPlane  # noqa: E402
from oracle import pullback_exact_constants  # noqa: E402


@pytest.fixture
def say(capsys):
    def emit(line):
        with capsys.disabled():
            print("\n" + line)
    return emit


def verdict(n, ok, detail, say):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    say(line)
    assert ok, line


def test_criterion_1_tensor_engine(say):
    start = time.perf_counter()
    worst_sym, worst_fd = 0.0, 0.0
    for name, g in metric_corpus().items():
        for p in random_points(g, 100, seed=11):
            worst_sym = max(worst_sym, max(riemann(g, p).symmetry_residuals().values()))
            worst_fd = max(worst_fd, float(np.abs(christoffel(g, p).gamma - christoffel_finite_difference(g, p)).max()))
    elapsed = time.perf_counter() - start
    ok = worst_sym <= 1e-8 and worst_fd <= 1e-6 and elapsed <= 60
    verdict(1, ok, f"symmetry residual {worst_sym:.2e}, dual vs FD Christoffel {worst_fd:.2e}, "
                   f"{elapsed:.1f}s on 7 metrics x 100 points", say)


def test_criterion_2_constant_curvature(say):
    rng = np.random.default_rng(12)
    worst = 0.0
    for dim in (2, 3):
        for a in (1.0, 2.0):
            g = horospherical_model(dim, a=a)
            for p in random_points(g, 100, seed=dim * 10 + int(a)):
                u, v = rng.standard_normal((2, dim))
                worst = max(worst, abs(sectional_curvature(g, TangentPlane(p, u, v)) + a * a))
    verdict(2, worst <= 1e-6, f"max |K + a^2| = {worst:.2e} over H^2, H^3 with a in {{1, 2}}, 100 planes each",
            say)


def test_criterion_3_pullback_structure(say):
    g = metric_corpus()["pullback"]
    rng = np.random.default_rng(13)
    tt_err, off = 0.0, 0.0
    ks = []
    for p in random_points(g, 100, seed=13):
        G = g.evaluate(p)
        tt_err = max(tt_err, abs(G[0, 0] - 2.0))
        off = max(off, float(np.abs(G[0, 1:]).max()))
        v = np.r_[0.0, rng.standard_normal(2)]
        ks.append(riemann(g, p).sectional([1.0, 0.0, 0.0], v))
    structure = tt_err <= 1e-12 and off <= 1e-12
    mixed_err = max(abs(k + 1.0) for k in ks)
    exact = float(pullback_exact_constants()["K_mixed"])
    detail = (f"tt-entry error {tt_err:.1e}, t-row off-diagonal {off:.1e}; "
              f"mixed K in [{min(ks):.9f}, {max(ks):.9f}], target -1 missed by {mixed_err:.3f} "
              f"(symbolic value {exact})")
    verdict(3, structure and mixed_err <= 1e-6, detail, say)


def test_criterion_4_stretch_threshold(say):
    start = time.perf_counter()
    g = metric_corpus()["pullback"]
    k = estimate_constants(g, samples=200, seed=0).conservative()
    lam_t = lambda_threshold(k)
    root = abs(curvature_upper_bound(lam_t, k))
    rep = verify_stretch_pinching(g, 1.05 * lam_t, k, samples=2000, seed=0)
    lower = curvature_lower_bound(1.05 * lam_t, k)
    floor_ok = rep.k_min >= lower - 0.05 * abs(lower)
    elapsed = time.perf_counter() - start
    ok = root <= 1e-9 * (1 + k.C1 + k.C2) and rep.k_max < 0 and floor_ok and elapsed <= 300
    verdict(4, ok, f"lambda_threshold {lam_t:.6f} (bound residual {root:.1e}); at 1.05x: "
                   f"K in [{rep.k_min:.4f}, {rep.k_max:.4f}], lower bound {lower:.4f}, {elapsed:.1f}s",
            say)


def test_criterion_5_bilipschitz(say):
    start = time.perf_counter()
    emb = h2h2_embedding()
    rep = run_bilipschitz_experiment(emb, n_pairs=500, n_curves=100, seed=0)
    C = upper_constant(2)
    elapsed = time.perf_counter() - start
    checked = [p for p in rep.constructed_paths if p.check is not None]
    ok = (rep.errors == 0 and not rep.violations and len(rep.pairs) + rep.skipped == 500
          and len(checked) == 100
          and 1 - 1e-6 <= rep.min_ratio and rep.max_ratio <= C + 1e-6
          and rep.max_path_ratio <= C + 1e-6 and elapsed <= 600)
    verdict(5, ok, f"d_Y/d_X in [{rep.min_ratio:.6f}, {rep.max_ratio:.6f}], max path ratio "
                   f"{rep.max_path_ratio:.4f} <= {C:.8f}, segment bounds on {len(checked)} curves, "
                   f"{len(rep.violations)} violations, {elapsed:.1f}s", say)


def _pairs(g, n, seed, max_sep):
    rng = np.random.default_rng(seed)
    box = np.asarray(g.box)
    out = []
    while len(out) < n:
        p, q = box[:, 0] + rng.random((2, g.dim)) * (box[:, 1] - box[:, 0])
        d = closed_form_distance(g, p, q).value
        if 0 < d <= max_sep:
            out.append((p, q, d))
    return out


def test_criterion_6_distance_oracles(say):
    worst = 0.0
    spaces = {"H2": (horospherical_model(2), 60), "pullback": (pullback_diagonal(h2h2_embedding()), 40)}
    for g, n in spaces.values():
        for p, q, exact in _pairs(g, n, 16, 3.0):
            worst = max(worst, abs(distance(g, p, q, method="bvp").value - exact))
    X = product([horospherical_model(2), horospherical_model(2)])
    worst_prod = 0.0
    for p, q, exact in _pairs(X, 20, 17, 3.0):
        worst_prod = max(worst_prod, abs(distance(X, p, q, method="bvp").value - exact))
    ok = worst <= 1e-4 and worst_prod <= 1e-3
    verdict(6, ok, f"BVP vs closed form {worst:.2e} on 100 pairs (60 H^2, 40 pullback); "
                   f"product Pythagorean vs BVP {worst_prod:.2e} on 20 pairs", say)


def test_criterion_7_level_contraction(say):
    bad = 0
    total = 0
    for name, g in horospherical_corpus().items():
        rng = np.random.default_rng(7)
        t = g.split.t_index
        for p in random_points(g, 100, seed=7):
            q = p.copy()
            q[t] = rng.uniform(p[t], g.box[t, 1])
            v = rng.standard_normal(g.dim - 1)
            total += 1
            bad += not (v @ level_metric(g, q) @ v <= v @ level_metric(g, p) @ v)
    verdict(7, bad == 0, f"{total - bad}/{total} samples contract on {len(horospherical_corpus())} metrics",
            say)


def test_criterion_8_rank(say):
    cases = {(2, 2): 2, (2, 3, 4): 6}
    got = {dims: rank_additivity(dims) for dims in cases}
    ok = got == cases and all(v == sum(d) - len(d) for d, v in got.items())
    verdict(8, ok, f"rank {got}", say)


def test_criterion_9_reproducibility(tmp_path, say):
    cfg = tmp_path / "repro.cfg"
    cfg.write_text("seed = 5\nn_pairs = 20\nn_curves = 5\nconstant_samples = 100\n")
    same = []
    for cmd, extra in [("curvature", []), ("embed", []), ("stretch", ["--samples", "300"]), ("bilipschitz", [])]:
        outs = []
        for run in range(2):
            out = tmp_path / f"{cmd}{run}.json"
            with contextlib.redirect_stdout(io.StringIO()):
                assert main([cmd, "--config", str(cfg), "--out", str(out), *extra]) == 0
            outs.append(out.read_bytes())
        same.append(cmd if outs[0] == outs[1] else f"{cmd}(differs)")
    ok = all("differs" not in s for s in same)
    verdict(9, ok, "byte-identical reports: " + ", ".join(same), say)


def test_criterion_10_dsl_corpus(say):
    passed = 0
    for name, source, expected in CASES:
        try:
            parse_metric(source)
            passed += expected is None
        except DSLError as exc:
            passed += (expected is not None and isinstance(exc, expected[0])
                       and (exc.line, exc.col) == expected[1:] and exc.line >= 1)
        except Exception:  # any other exception is a crash
            pass
    verdict(10, passed == len(CASES) == 30, f"{passed}/{len(CASES)} parser cases as expected", say)


if __name__ == "__main__":
    import inspect
    import tempfile

    failed = 0
    tests = sorted((int(k.split("_")[2]), f) for k, f in globals().items() if k.startswith("test_criterion_"))
    for n, fn in tests:
        kwargs = {"say": print}
        if "tmp_path" in inspect.signature(fn).parameters:
            kwargs["tmp_path"] = Path(tempfile.mkdtemp())
        try:
            fn(**kwargs)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
