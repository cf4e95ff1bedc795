"""Sampled pinching constants, the stretch threshold and its curvature bounds.

All constants are estimates from a scrambled Halton sequence of base
points, never certified bounds.  At each base point the quadratic forms
(the second fundamental form, the level-convexity Hessian and the
curvature of planes containing the height direction) are extremised
exactly as generalised eigenvalues; quantities over general planes
are sampled.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.linalg import eigh
from scipy.stats import qmc

from .errors import DegenerateDenominator, GeometryError, InvalidDimension, NonNegativeCurvatureDetected, NoSplit
from .spaces import stretch
from .tensor import MetricField, frame_curvature_norm, christoffel_jet, random_orthonormal, riemann_from_jet, second_fundamental_matrix

SAFETY_MARGIN = 0.02


class NonConvexLevels(GeometryError):
    pass


@dataclass(frozen=True)
class PinchingConstants:
    epsilon: float  # inf II on unit level tangents
    epsilon_tilde: float  # sup II on unit level tangents
    epsilon_prime: float  # sqrt sup |II(B,B)II(C,C) - II(B,C)^2|
    C1: float  # sup |K^N| of level planes
    C2: float  # curvature tensor norm
    delta: float  # -sup K(∂t, v)
    delta_prime: float  # -inf K(∂t, v)
    Lambda: float  # sup |K|
    c1: float  # convex-level pinch, lower
    c2: float  # convex-level pinch, upper
    samples: int = 0
    seed: int = 0
    notes: dict = field(default_factory=dict, compare=False)

    def conservative(self, margin: float = SAFETY_MARGIN) -> "PinchingConstants":
        """Shrink the infima by ``margin``; suprema are kept.

        Smaller infima mean a larger stretch threshold.
        """
        s = 1.0 - margin
        return replace(self, epsilon=self.epsilon * s, delta=self.delta * s, c1=self.c1 * s)

    def to_dict(self) -> dict:
        return asdict(self)


def halton_points(box: np.ndarray, n: int, seed: int) -> np.ndarray:
    """First ``n`` points of a scrambled Halton sequence in ``box`` (prefix-stable)."""
    box = np.asarray(box, dtype=float)
    unit = qmc.Halton(d=len(box), scramble=True, seed=seed).random(n)
    return box[:, 0] + unit * (box[:, 1] - box[:, 0])


def _extremes(form: np.ndarray, metric: np.ndarray):
    w = eigh(form, metric, eigvals_only=True)
    return float(w[0]), float(w[-1])


@dataclass
class _PointStats:
    ii: tuple
    conv: tuple
    mixed: tuple
    level_kn: float
    gauss: float
    abs_k: float
    norm: float


def _point_stats(g: MetricField, p, rng, planes: int, frames: int) -> _PointStats:
    metric, dg, d2g = g.jet(p, order=2)
    R = riemann_from_jet(metric, dg, d2g)
    gamma, _ = christoffel_jet(metric, dg, d2g)
    t, r = g.split.t_index, g.split.r
    lv = g.level_indices
    gN = metric[np.ix_(lv, lv)]
    II_full = second_fundamental_matrix(g, metric, dg)
    II = II_full[np.ix_(lv, lv)]

    # level geodesic through p with unit velocity c': (f∘c)'' = √r Γ^t(c', c') for f = −√r t
    conv = math.sqrt(r) * gamma[t][np.ix_(lv, lv)]

    e_t = np.zeros(g.dim)
    e_t[t] = 1.0 / math.sqrt(r)
    # K(e_t, v) for level v: R(e_t, v, e_t, v), a quadratic form in v
    mixed_form = np.einsum("ijkl,i,k->jl", R.lowered, e_t, e_t)[np.ix_(lv, lv)]

    level_kn, gauss, abs_k = 0.0, 0.0, 0.0
    basis = np.eye(g.dim)[lv]
    for _ in range(planes):
        if len(lv) >= 2:
            B, C = random_orthonormal(metric, 2, rng, basis=basis)
            det = (B @ II_full @ B) * (C @ II_full @ C) - (B @ II_full @ C) ** 2
            k_y = R.sectional(B, C)
            level_kn = max(level_kn, abs(k_y + det))
            gauss = max(gauss, abs(det))
            abs_k = max(abs_k, abs(k_y))
        U, V = random_orthonormal(metric, 2, rng)
        abs_k = max(abs_k, abs(R.sectional(U, V)))
    mixed = _extremes(mixed_form, gN)
    abs_k = max(abs_k, abs(mixed[0]), abs(mixed[1]))
    return _PointStats(
        ii=_extremes(II, gN),
        conv=_extremes(conv, gN),
        mixed=mixed,
        level_kn=level_kn,
        gauss=gauss,
        abs_k=abs_k,
        norm=frame_curvature_norm(R, frames, rng),
    )


def estimate_constants(g: MetricField, samples: int = 200, seed: int = 0,
                       planes: int = 8, frames: int = 4) -> PinchingConstants:
    """Estimate the constants of a split metric from ``samples`` base points."""
    if g.split is None:
        raise NoSplit(f"{g.name} has no split structure")
    if samples < 100:
        raise ValueError("samples must be at least 100")
    pts = halton_points(g.box, samples, seed)
    stats = [
        _point_stats(g, p, np.random.default_rng([seed, i]), planes, frames)
        for i, p in enumerate(pts)
    ]
    ii_lo = min(s.ii[0] for s in stats)
    ii_hi = max(s.ii[1] for s in stats)
    mixed_hi = max(s.mixed[1] for s in stats)
    mixed_lo = min(s.mixed[0] for s in stats)
    if not mixed_hi < 0:
        raise NonNegativeCurvatureDetected(
            f"planes containing the height direction reach curvature {mixed_hi:.6g} >= 0"
        )
    if not ii_lo > 0:
        raise NonConvexLevels(f"second fundamental form reaches {ii_lo:.6g} <= 0")
    level_dim = g.dim - 1
    gauss = max(s.gauss for s in stats)
    eps_prime = math.sqrt(gauss) if level_dim >= 2 else ii_hi
    return PinchingConstants(
        epsilon=ii_lo,
        epsilon_tilde=ii_hi,
        epsilon_prime=eps_prime,
        C1=float(max(s.level_kn for s in stats)),
        C2=max(s.norm for s in stats),
        delta=-mixed_hi,
        delta_prime=-mixed_lo,
        Lambda=max(s.abs_k for s in stats),
        c1=min(s.conv[0] for s in stats),
        c2=max(s.conv[1] for s in stats),
        samples=samples,
        seed=seed,
        notes={
            "epsilon_prime_domain": (
                "g-orthonormal level-tangent pairs" if level_dim >= 2
                else "level dimension 1: sup of II"
            ),
            "direction_extrema": "exact per point (generalized eigenvalues)",
        },
    )


def lambda_threshold(k: PinchingConstants) -> float:
    """Positive root of :func:`curvature_upper_bound` in ``λ``."""
    m = min(k.delta, k.epsilon ** 2)
    if not m > 0:
        raise DegenerateDenominator(f"min(delta, epsilon^2) = {m!r} is not positive")
    return (k.C2 + math.sqrt(k.C2 ** 2 + k.C1 * m)) / m


def curvature_upper_bound(lam: float, k: PinchingConstants) -> float:
    return -lam * lam * min(k.delta, k.epsilon ** 2) + k.C1 + 2.0 * lam * k.C2


def curvature_lower_bound(lam: float, k: PinchingConstants) -> float:
    return -lam * lam * max(k.delta_prime, k.epsilon_prime ** 2) - k.C1 - 2.0 * lam * k.C2


def bound_tolerance(bound: float) -> float:
    return 1e-6 + 0.05 * abs(bound)


@dataclass
class StretchReport:
    lam: float
    threshold: float
    upper_bound: float
    lower_bound: float
    k_min: float
    k_max: float
    negative: bool
    violations: list
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def verify_stretch_pinching(g: MetricField, lam: float, k: PinchingConstants,
                            samples: int = 2000, seed: int = 0) -> StretchReport:
    """Sample sectional curvatures of the stretched metric against both bounds."""
    h = stretch(g, lam)
    upper = curvature_upper_bound(lam, k)
    lower = curvature_lower_bound(lam, k)
    try:
        threshold = lambda_threshold(k)
    except DegenerateDenominator:
        threshold = math.inf
    pts = halton_points(h.box, samples, seed)
    ks = np.empty(samples)
    violations = []
    for i, p in enumerate(pts):
        rng = np.random.default_rng([seed, i])
        R = riemann_from_jet(*h.jet(p, order=2))
        U, V = random_orthonormal(R.metric, 2, rng)
        K = R.sectional(U, V)
        ks[i] = K
        if K > upper + bound_tolerance(upper):
            violations.append({"index": i, "point": p.tolist(), "K": K, "bound": "upper"})
        if K < lower - bound_tolerance(lower):
            violations.append({"index": i, "point": p.tolist(), "K": K, "bound": "lower"})
    return StretchReport(
        lam=float(lam),
        threshold=threshold,
        upper_bound=upper,
        lower_bound=lower,
        k_min=float(ks.min()) if samples else math.nan,
        k_max=float(ks.max()) if samples else math.nan,
        negative=bool(samples and ks.max() < 0),
        violations=violations,
        samples=samples,
        seed=seed,
    )


def rank_additivity(dims) -> int:
    """Hyperbolic rank of a product of pinched Hadamard factors: ``Σ (dim_i − 1)``."""
    dims = list(dims)
    if not dims:
        raise InvalidDimension("need at least one factor")
    for d in dims:
        if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 2:
            raise InvalidDimension(f"factor dimension {d!r} must be an integer >= 2")
    return int(sum(d - 1 for d in dims))
