"""Metric fields on coordinate charts and their curvature.

Index conventions used throughout the package:

* ``dg[k, i, j] = ∂_k g_ij`` and ``d2g[k, l, i, j] = ∂_k ∂_l g_ij``
* ``gamma[k, i, j] = Γ^k_ij``
* ``mixed[i, j, k, l] = R^l_ijk`` with
  ``R^l_ijk = ∂_j Γ^l_ik − ∂_i Γ^l_jk + Γ^h_ik Γ^l_jh − Γ^h_jk Γ^l_ih``
* ``lowered[i, j, k, l] = R_ijkl = R^m_ijk g_ml = <R(∂_i, ∂_j)∂_k, ∂_l>``

With this ordering the sectional curvature is
``K(u, v) = R(u, v, u, v) / (|u|²|v|² − <u, v>²)`` and hyperbolic space
comes out negative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dual import Dual
from .errors import DegeneratePlane, NoSplit, NotTangentToLevel, OutOfDomain, SingularMetric

GRAM_TOL = 1e-12
SPD_TOL = 1e-10
PIVOT_TOL = 1e-10
DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class Split:
    """Product structure ``r dt² + g_N(t, y)``: coordinate ``t_index`` is the height."""

    t_index: int
    r: float


class MetricField:
    """A Riemannian metric on a coordinate box.

    ``components`` maps a sequence of coordinates (floats or :class:`Dual`)
    to a ``dim × dim`` nested sequence.  Only the upper triangle is read;
    the lower triangle is mirrored so the result is exactly symmetric.

    ``model`` optionally carries closed-form data (see
    :mod:`hyperrank.geodesics`) used to answer distance queries exactly.
    """

    def __init__(
        self,
        dim: int,
        components: Callable[[Sequence], Sequence[Sequence]],
        box=None,
        split: Split | None = None,
        name: str = "metric",
        model=None,
    ):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self.components = components
        if box is None:
            box = [(-3.0, 3.0)] * self.dim
        self.box = np.array(box, dtype=float).reshape(self.dim, 2)
        if split is not None and not 0 <= split.t_index < self.dim:
            raise ValueError("split index out of range")
        self.split = split
        self.name = name
        self.model = model

    def __repr__(self):
        return f"MetricField({self.name!r}, dim={self.dim})"

    @property
    def level_indices(self) -> list[int]:
        if self.split is None:
            raise NoSplit(f"{self.name} has no split structure")
        return [i for i in range(self.dim) if i != self.split.t_index]

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(
            np.all(p >= self.box[:, 0] - DOMAIN_SLACK) and np.all(p <= self.box[:, 1] + DOMAIN_SLACK)
        )

    def check_point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            raise ValueError(f"expected a finite point of dimension {self.dim}, got {p!r}")
        if not self.contains(p):
            raise OutOfDomain(p, self.box)
        return p

    def evaluate(self, p) -> np.ndarray:
        """Metric matrix at ``p`` (no domain check)."""
        rows = self.components([float(x) for x in p])
        n = self.dim
        g = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                g[i, j] = g[j, i] = float(rows[i][j])
        return g

    def jet(self, p, order: int = 2):
        """``(g, dg)`` or ``(g, dg, d2g)`` at ``p`` by forward-mode differentiation."""
        n = self.dim
        xs = Dual.variables(p, order=order)
        rows = self.components(xs)
        g = np.empty((n, n))
        dg = np.zeros((n, n, n))
        d2g = np.zeros((n, n, n, n)) if order >= 2 else None
        for i in range(n):
            for j in range(i, n):
                e = rows[i][j]
                if isinstance(e, Dual):
                    g[i, j] = g[j, i] = e.val
                    dg[:, i, j] = dg[:, j, i] = e.grad
                    if order >= 2:
                        d2g[:, :, i, j] = d2g[:, :, j, i] = e.hess
                else:
                    g[i, j] = g[j, i] = float(e)
        if order >= 2:
            return g, dg, d2g
        return g, dg


def inverse_metric(g: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(g)):
        raise SingularMetric("metric has non-finite entries")
    try:
        np.linalg.cholesky(g)
        return np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric(f"metric is not positive definite: {exc}") from None


@dataclass(frozen=True)
class ChristoffelAtPoint:
    gamma: np.ndarray  # gamma[k, i, j] = Γ^k_ij


def _first_kind(dg: np.ndarray) -> np.ndarray:
    # S[l, i, j] = ∂_i g_jl + ∂_j g_il − ∂_l g_ij
    return np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg


def christoffel_from_jet(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    ginv = inverse_metric(g)
    gamma = 0.5 * np.einsum("kl,lij->kij", ginv, _first_kind(dg))
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def christoffel(g: MetricField, p) -> ChristoffelAtPoint:
    p = g.check_point(p)
    metric, dg = g.jet(p, order=1)
    return ChristoffelAtPoint(christoffel_from_jet(metric, dg))


def christoffel_finite_difference(g: MetricField, p, rel_step: float = 1e-4) -> np.ndarray:
    """Christoffel symbols from central differences of ``g.evaluate``; a cross-check only.

    Central differences at ``h`` and ``h/2`` are combined by Richardson
    extrapolation, ``h = rel_step·max(1, |x_k|)``.  A single central
    difference at a smaller step hits the float64 rounding floor
    ``eps·|g|/h`` on steep warps.
    """
    p = np.asarray(p, dtype=float)
    n = g.dim
    dg = np.empty((n, n, n))
    for k in range(n):
        h = rel_step * max(1.0, abs(p[k]))
        e = np.zeros(n)
        e[k] = 1.0
        coarse = (g.evaluate(p + h * e) - g.evaluate(p - h * e)) / (2 * h)
        fine = (g.evaluate(p + 0.5 * h * e) - g.evaluate(p - 0.5 * h * e)) / h
        dg[k] = (4.0 * fine - coarse) / 3.0
    return christoffel_from_jet(g.evaluate(p), dg)


@dataclass(frozen=True)
class RiemannAtPoint:
    mixed: np.ndarray  # mixed[i, j, k, l] = R^l_ijk
    lowered: np.ndarray  # lowered[i, j, k, l] = R_ijkl
    metric: np.ndarray

    def tensor(self, a, b, c, d) -> float:
        """``<R(a, b)c, d>``."""
        return float(np.einsum("ijkl,i,j,k,l->", self.lowered, a, b, c, d))

    def inner(self, u, v) -> float:
        return float(np.asarray(u) @ self.metric @ np.asarray(v))

    def sectional(self, u, v) -> float:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        guu, gvv, guv = self.inner(u, u), self.inner(v, v), self.inner(u, v)
        gram = guu * gvv - guv * guv
        if not gram > GRAM_TOL:
            raise DegeneratePlane(f"Gram determinant {gram:.3e} is not above {GRAM_TOL}")
        return self.tensor(u, v, u, v) / gram

    def symmetry_residuals(self) -> dict[str, float]:
        """Largest violation of each algebraic identity, relative to the largest component."""
        R = self.lowered
        scale = max(float(np.max(np.abs(R))), 1e-300)
        bianchi = R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)
        return {
            "antisym_first": float(np.max(np.abs(R + R.transpose(1, 0, 2, 3)))) / scale,
            "antisym_last": float(np.max(np.abs(R + R.transpose(0, 1, 3, 2)))) / scale,
            "pair": float(np.max(np.abs(R - R.transpose(2, 3, 0, 1)))) / scale,
            "bianchi": float(np.max(np.abs(bianchi))) / scale,
        }


def christoffel_jet(g: np.ndarray, dg: np.ndarray, d2g: np.ndarray):
    """``(gamma, dgamma)`` with ``dgamma[m, k, i, j] = ∂_m Γ^k_ij``."""
    ginv = inverse_metric(g)
    S = _first_kind(dg)
    gamma = 0.5 * np.einsum("kl,lij->kij", ginv, S)
    dginv = -np.einsum("ka,mab,bl->mkl", ginv, dg, ginv)
    dgamma = 0.5 * (
        np.einsum("mkl,lij->mkij", dginv, S) + np.einsum("kl,mlij->mkij", ginv, _dfirst_kind(d2g))
    )
    return gamma, dgamma


def riemann_from_jet(g: np.ndarray, dg: np.ndarray, d2g: np.ndarray) -> RiemannAtPoint:
    gamma, dgamma = christoffel_jet(g, dg, d2g)
    mixed = (
        np.einsum("jlik->ijkl", dgamma)
        - np.einsum("iljk->ijkl", dgamma)
        + np.einsum("hik,ljh->ijkl", gamma, gamma)
        - np.einsum("hjk,lih->ijkl", gamma, gamma)
    )
    lowered = np.einsum("ijkm,ml->ijkl", mixed, g)
    return RiemannAtPoint(mixed=mixed, lowered=lowered, metric=g)


def _dfirst_kind(d2g: np.ndarray) -> np.ndarray:
    # dS[m, l, i, j] = ∂_m∂_i g_jl + ∂_m∂_j g_il − ∂_m∂_l g_ij
    return np.einsum("mijl->mlij", d2g) + np.einsum("mjil->mlij", d2g) - d2g


def riemann(g: MetricField, p) -> RiemannAtPoint:
    p = g.check_point(p)
    return riemann_from_jet(*g.jet(p, order=2))


@dataclass(frozen=True)
class TangentPlane:
    base: np.ndarray
    u: np.ndarray
    v: np.ndarray


def sectional_curvature(g: MetricField, plane: TangentPlane) -> float:
    return riemann(g, plane.base).sectional(plane.u, plane.v)


def orthonormalize(metric: np.ndarray, vectors, tol: float = PIVOT_TOL):
    """Gram–Schmidt against ``metric``; returns None when a pivot falls below ``tol``."""
    out = []
    for v in vectors:
        w = np.array(v, dtype=float)
        for _ in range(2):  # second pass for numerical orthogonality
            for e in out:
                w = w - (e @ metric @ w) * e
        norm2 = w @ metric @ w
        if not norm2 > tol:
            return None
        out.append(w / np.sqrt(norm2))
    return out


def random_orthonormal(metric: np.ndarray, count: int, rng, basis=None) -> list[np.ndarray]:
    """``count`` random g-orthonormal vectors, optionally inside ``span(basis)``.

    Draws are restarted on near-dependence.
    """
    n = metric.shape[0]
    for _ in range(100):
        if basis is None:
            raw = rng.standard_normal((count, n))
        else:
            raw = rng.standard_normal((count, len(basis))) @ np.asarray(basis)
        frame = orthonormalize(metric, raw)
        if frame is not None:
            return frame
    raise DegeneratePlane("could not draw a nondegenerate frame")


def curvature_tensor_norm_estimate(g: MetricField, p, samples: int, seed: int) -> float:
    """Sampled ``sup |<R(A1, A2)A3, A4>|`` over g-orthonormal tuples.

    Each sample draws a random g-orthonormal frame and takes every
    4-tuple of its vectors (repetition allowed).
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    R = riemann(g, p)
    return frame_curvature_norm(R, samples, np.random.default_rng(seed))


def frame_curvature_norm(R: RiemannAtPoint, samples: int, rng) -> float:
    n = R.metric.shape[0]
    best = 0.0
    for _ in range(samples):
        E = np.array(random_orthonormal(R.metric, n, rng))
        comps = np.einsum("ijkl,ai,bj,ck,dl->abcd", R.lowered, E, E, E, E, optimize=True)
        best = max(best, float(np.max(np.abs(comps))))
    return best


def second_fundamental_matrix(g: MetricField, metric: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Coordinate matrix of II on the level hypersurfaces of a split metric.

    The unit normal is ``−∂t/√r``; rows/columns of the height coordinate are zero.
    """
    if g.split is None:
        raise NoSplit(f"{g.name} has no split structure")
    t, r = g.split.t_index, g.split.r
    II = -dg[t] / (2.0 * np.sqrt(r))
    II[t, :] = 0.0
    II[:, t] = 0.0
    return II


def second_fundamental_form(g: MetricField, p, B, C) -> float:
    if g.split is None:
        raise NoSplit(f"{g.name} has no split structure")
    p = g.check_point(p)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    t = g.split.t_index
    if abs(B[t]) > 1e-12 or abs(C[t]) > 1e-12:
        raise NotTangentToLevel("vectors must have zero height component")
    metric, dg = g.jet(p, order=1)
    return float(B @ second_fundamental_matrix(g, metric, dg) @ C)
