"""Three-segment path construction and the sampled bilipschitz experiment.

Given a curve ``c`` in the product ``X`` between two points of the
diagonal image ``j(Y)``, :func:`construct_path` builds a curve in ``Y``:

* ``v1`` climbs along the height profile of the highest factor up to the
  overall maximum height ``t0``, at the starting level coordinates,
* ``gamma`` copies the level coordinates of ``c`` at the frozen height ``t0``,
* ``v2`` descends along the same profile at the final level coordinates.

Level maps shrink with height, which is what keeps ``gamma`` short.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BoundViolated, GeometryError, NoConvergence
from .geodesics import Curve, closed_form_distance, curve_length, distance, product_geodesic_points
from .spaces import DiagonalEmbedding, HorosphericalModel, pullback_diagonal

RATIO_TOL = 1e-6
REFINE_CHANGE = 1e-3
MAX_DOUBLINGS = 4


def upper_constant(k: int) -> float:
    """``2√k + 2``; for two factors this is ``2√2 + 2``."""
    return 2.0 * math.sqrt(k) + 2.0


@dataclass
class PathDecomposition:
    v1: Curve
    gamma: Curve
    v2: Curve
    lengths: tuple
    source_curve_length: float
    b_parameter: float
    b_index: int
    t0: float
    factor: int  # index of the factor attaining the maximum height

    @property
    def total_length(self) -> float:
        return float(sum(self.lengths))

    @property
    def ratio(self) -> float:
        if self.source_curve_length == 0:
            return 0.0 if self.total_length == 0 else math.inf
        return self.total_length / self.source_curve_length

    def to_dict(self) -> dict:
        return {
            "lengths": list(self.lengths),
            "source_curve_length": self.source_curve_length,
            "b_parameter": self.b_parameter,
            "t0": self.t0,
            "factor": self.factor,
            "ratio": self.ratio,
        }


def _segment(params, points) -> Curve:
    if len(points) == 1:
        # a constant map over the whole source interval
        return Curve(np.array([params[0], params[-1]]) if params[-1] > params[0]
                     else np.array([0.0, 1.0]), np.vstack([points[0], points[0]]))
    return Curve(params, points)


def construct_path(emb: DiagonalEmbedding, c: Curve, g_y=None) -> PathDecomposition:
    """Build ``v2 * gamma * v1`` in ``Y`` from a curve ``c`` in ``X``."""
    g_y = g_y if g_y is not None else pullback_diagonal(emb)
    p = emb.project(c.start)
    q = emb.project(c.end)
    heights = np.array([emb.factor_heights(x) for x in c.points])
    levels = np.array([np.concatenate(emb.factor_levels(x)) for x in c.points])
    top = heights.max(axis=1)
    b = int(np.argmax(top))
    i0 = int(np.argmax(heights[b]))
    t0 = float(heights[b, i0])
    profile = heights[:, i0]

    n_p, n_q = p[1:], q[1:]
    params = c.params
    v1_pts = np.column_stack([profile[:b + 1], np.tile(n_p, (b + 1, 1))])
    g_pts = np.column_stack([np.full(len(c), t0), levels])
    v2_pts = np.column_stack([profile[b:], np.tile(n_q, (len(c) - b, 1))])
    v1 = _segment(params[:b + 1], v1_pts) if b > 0 else _segment(params, v1_pts[:1])
    gamma = _segment(params, g_pts)
    v2 = _segment(params[b:], v2_pts) if b < len(c) - 1 else _segment(params, v2_pts[:1])
    lengths = (curve_length(g_y, v1), curve_length(g_y, gamma), curve_length(g_y, v2))
    return PathDecomposition(
        v1=v1,
        gamma=gamma,
        v2=v2,
        lengths=lengths,
        source_curve_length=curve_length(emb.target, c) if emb.target is not None else 0.0,
        b_parameter=float(params[b]),
        b_index=b,
        t0=t0,
        factor=i0,
    )


@dataclass
class SegmentCheck:
    bounds: dict
    slack: dict
    tol: float

    def to_dict(self) -> dict:
        return asdict(self)


def segment_bounds_check(pd: PathDecomposition, k: int = 2) -> SegmentCheck:
    """Check ``L(v_m) ≤ √k·L_X(c)`` and ``L(gamma) ≤ 2·L_X(c)``; returns the slack of each."""
    L = pd.source_curve_length
    tol = 1e-6 * (1.0 + L)
    bounds = {"v1": math.sqrt(k) * L, "gamma": 2.0 * L, "v2": math.sqrt(k) * L}
    lengths = dict(zip(("v1", "gamma", "v2"), pd.lengths))
    slack = {name: bounds[name] - lengths[name] for name in bounds}
    for name in ("v1", "gamma", "v2"):
        if slack[name] < -tol:
            raise BoundViolated(name, slack[name])
    return SegmentCheck(bounds=bounds, slack=slack, tol=tol)


# ---------------------------------------------------------------- random curves


def random_point(box, rng) -> np.ndarray:
    box = np.asarray(box, dtype=float)
    return box[:, 0] + rng.random(len(box)) * (box[:, 1] - box[:, 0])


def _leg(emb: DiagonalEmbedding, x, y, nodes: int) -> np.ndarray:
    taus = np.linspace(0.0, 1.0, nodes)
    if all(isinstance(f.model, HorosphericalModel) for f in emb.factors):
        return product_geodesic_points(emb.target, x, y, taus)
    return x + np.outer(taus, y - x)


def two_leg_curve(emb: DiagonalEmbedding, p, q, waypoint, nodes: int = 33) -> Curve:
    """Piecewise geodesic ``j(p) -> waypoint -> j(q)`` in ``X`` (straight legs without closed forms)."""
    a, b = emb.map(p), emb.map(q)
    first = _leg(emb, a, waypoint, nodes)
    second = _leg(emb, waypoint, b, nodes)
    return Curve.through(np.vstack([first, second[1:]]))


def refined_path(emb, p, q, waypoint, g_y, nodes: int = 33):
    """Double the curve sampling until the constructed length settles."""
    curve = two_leg_curve(emb, p, q, waypoint, nodes)
    pd = construct_path(emb, curve, g_y)
    for _ in range(MAX_DOUBLINGS):
        nodes = 2 * nodes - 1
        curve2 = two_leg_curve(emb, p, q, waypoint, nodes)
        pd2 = construct_path(emb, curve2, g_y)
        change = abs(pd2.total_length - pd.total_length) / max(pd.total_length, 1e-300)
        curve, pd = curve2, pd2
        if change < REFINE_CHANGE:
            break
    return curve, pd


# ---------------------------------------------------------------- experiment


@dataclass
class PairRecord:
    index: int
    p: list
    q: list
    d_x: float
    d_y: float | None
    ratio: float | None
    method: str = ""
    error: str | None = None


@dataclass
class PathRecord:
    index: int
    p: list
    q: list
    waypoint: list
    d_y: float
    decomposition: dict
    check: dict | None
    error: str | None = None


@dataclass
class BilipschitzReport:
    seed: int
    bound: float
    pairs: list = field(default_factory=list)
    constructed_paths: list = field(default_factory=list)
    min_ratio: float = math.nan
    max_ratio: float = math.nan
    max_path_ratio: float = math.nan
    violations: list = field(default_factory=list)
    skipped: int = 0
    errors: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _shrunk(box, fraction):
    box = np.asarray(box, dtype=float)
    mid = box.mean(axis=1)
    half = 0.5 * (box[:, 1] - box[:, 0]) * fraction
    return np.column_stack([mid - half, mid + half])


def run_bilipschitz_experiment(emb: DiagonalEmbedding, n_pairs: int, n_curves: int, seed: int,
                               distance_method: str = "auto", tol: float = 1e-6,
                               refine_tol: float = 1e-4, curve_box_fraction: float = 2 / 3,
                               nodes: int = 33) -> BilipschitzReport:
    """Sample distance ratios ``d_Y/d_X`` and constructed-path ratios.

    Pairs are drawn uniformly in ``Y``'s box.  Curve endpoints and
    waypoints use the box shrunk by ``curve_box_fraction`` so the
    geodesic legs stay inside it.  Solver failures are recorded per item.
    """
    if emb.k < 2:
        raise ValueError("the experiment needs at least two factors")
    rng = np.random.default_rng(seed)
    g_y = pullback_diagonal(emb)
    g_x = emb.target
    C = upper_constant(emb.k)
    report = BilipschitzReport(seed=seed, bound=C)

    ratios = []
    for i in range(n_pairs):
        p = random_point(g_y.box, rng)
        q = random_point(g_y.box, rng)
        exact = closed_form_distance(g_x, emb.map(p), emb.map(q))
        d_x = exact.value if exact is not None else distance(g_x, emb.map(p), emb.map(q)).value
        if d_x == 0.0:
            report.skipped += 1
            continue
        try:
            dy = distance(g_y, p, q, tol=tol, method=distance_method, refine_tol=refine_tol)
        except (NoConvergence, GeometryError) as exc:
            report.errors += 1
            best = getattr(exc, "best", math.inf)
            report.pairs.append(PairRecord(i, p.tolist(), q.tolist(), d_x,
                                           best if math.isfinite(best) else None, None,
                                           "", f"{type(exc).__name__}: {exc}"))
            continue
        ratio = dy.value / d_x
        ratios.append(ratio)
        report.pairs.append(PairRecord(i, p.tolist(), q.tolist(), d_x, dy.value, ratio, dy.method))
        if not (1.0 - RATIO_TOL <= ratio <= C + RATIO_TOL):
            report.violations.append({"kind": "pair", "index": i, "ratio": ratio})

    path_ratios = []
    y_box = _shrunk(g_y.box, curve_box_fraction)
    x_box = _shrunk(g_x.box, curve_box_fraction)
    for i in range(n_curves):
        p = random_point(y_box, rng)
        q = random_point(y_box, rng)
        w = random_point(x_box, rng)
        try:
            d_y = distance(g_y, p, q, tol=tol, method=distance_method, refine_tol=refine_tol).value
        except (NoConvergence, GeometryError):
            d_y = math.nan
        try:
            _, pd = refined_path(emb, p, q, w, g_y, nodes)
        except GeometryError as exc:
            report.errors += 1
            report.constructed_paths.append(PathRecord(i, p.tolist(), q.tolist(), w.tolist(), d_y,
                                                       {}, None, f"{type(exc).__name__}: {exc}"))
            continue
        check = None
        try:
            check = segment_bounds_check(pd, emb.k).to_dict()
        except BoundViolated as exc:
            report.violations.append({"kind": "segment", "index": i, "segment": exc.segment,
                                      "slack": exc.slack})
        report.constructed_paths.append(
            PathRecord(i, p.tolist(), q.tolist(), w.tolist(), d_y, pd.to_dict(), check))
        if pd.source_curve_length > 0:
            path_ratios.append(pd.ratio)
            if pd.ratio > C + RATIO_TOL:
                report.violations.append({"kind": "path", "index": i, "ratio": pd.ratio})
        if math.isfinite(d_y) and pd.total_length < d_y - RATIO_TOL:
            report.violations.append({"kind": "path_below_distance", "index": i,
                                      "length": pd.total_length, "d_y": d_y})

    if ratios:
        report.min_ratio = float(min(ratios))
        report.max_ratio = float(max(ratios))
    if path_ratios:
        report.max_path_ratio = float(max(path_ratios))
    return report
