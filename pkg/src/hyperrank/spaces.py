"""Model spaces and the constructions built from them.

Horospherical models use the chart ``r dt² + e^{-2at}(dy_1² + ... )``.
The level sets ``t = const`` are horospheres; they are convex for the
inward normal ``−∂t`` and the maps between them shrink lengths as ``t``
grows.  The unit-gradient height function is therefore ``f = −√r·t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dual import exp, sin
from .errors import EndpointsNotDiagonal, MismatchedSplit, NoSplit
from .tensor import MetricField, Split

DEFAULT_BOX = (-3.0, 3.0)


@dataclass(frozen=True)
class HorosphericalModel:
    """Closed-form data for ``r dt² + e^{-2at}|dy|²`` with height at ``t_index``.

    This is real hyperbolic space of curvature ``−a²/r``.
    """

    a: float
    r: float = 1.0
    t_index: int = 0

    @property
    def curvature(self) -> float:
        return -self.a * self.a / self.r


def _box(dim, box):
    if box is None:
        return [DEFAULT_BOX] * dim
    return box


def horospherical_model(dim: int, a: float = 1.0, box=None) -> MetricField:
    """Real hyperbolic space of curvature ``−a²`` in horospherical coordinates."""
    if dim < 2:
        raise ValueError("dim must be at least 2")
    if not a > 0:
        raise ValueError("a must be positive")
    a = float(a)

    def components(x):
        w = exp(-2.0 * a * x[0])
        rows = [[0.0] * dim for _ in range(dim)]
        rows[0][0] = 1.0
        for i in range(1, dim):
            rows[i][i] = w
        return rows

    return MetricField(
        dim,
        components,
        box=_box(dim, box),
        split=Split(0, 1.0),
        name=f"H{dim}(a={a:g})",
        model=HorosphericalModel(a),
    )


def perturbed_model(dim: int = 3, amplitude: float = 0.1, box=None) -> MetricField:
    """Horospherical chart with level block ``e^{-2t}(1 + amplitude·sin y_1)·δ``.

    Not of constant curvature; admitted to test corpora only after
    :func:`hyperrank.pinch.estimate_constants` reports pinched negative
    curvature for it.
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")

    def components(x):
        w = exp(-2.0 * x[0]) * (1.0 + amplitude * sin(x[1]))
        rows = [[0.0] * dim for _ in range(dim)]
        rows[0][0] = 1.0
        for i in range(1, dim):
            rows[i][i] = w
        return rows

    return MetricField(dim, components, box=_box(dim, box), split=Split(0, 1.0),
                       name=f"perturbed{dim}({amplitude:g})")


def flat(dim: int, box=None, split: bool = True) -> MetricField:
    def components(x):
        return [[1.0 if i == j else 0.0 for j in range(dim)] for i in range(dim)]

    return MetricField(dim, components, box=_box(dim, box),
                       split=Split(0, 1.0) if split else None, name=f"flat{dim}")


def level_metric(g: MetricField, p) -> np.ndarray:
    """The metric of the level hypersurface through ``p`` (the N-block)."""
    idx = g.level_indices
    return g.evaluate(p)[np.ix_(idx, idx)]


def stretch(g: MetricField, lam: float) -> MetricField:
    """Replace the height entry ``r`` by ``r/λ²``; the level block is untouched."""
    if g.split is None:
        raise NoSplit(f"{g.name} has no split structure")
    lam = float(lam)
    if lam == 0.0 or not np.isfinite(lam):
        raise ValueError("lambda must be finite and nonzero")
    t = g.split.t_index
    r_new = g.split.r / (lam * lam)
    base = g.components

    def components(x):
        rows = [list(row) for row in base(x)]
        rows[t][t] = r_new
        return rows

    model = g.model
    if isinstance(model, HorosphericalModel):
        model = HorosphericalModel(model.a, r_new, model.t_index)
    return MetricField(g.dim, components, box=g.box, split=Split(t, r_new),
                       name=f"stretch({g.name}, {lam:g})", model=model)


class ProductMetric(MetricField):
    """Riemannian product; coordinates are the factors' coordinates concatenated."""

    def __init__(self, factors):
        factors = list(factors)
        if len(factors) < 2:
            raise ValueError("a product needs at least two factors")
        self.factors = factors
        self.offsets = np.cumsum([0] + [f.dim for f in factors])
        dim = int(self.offsets[-1])
        box = np.vstack([f.box for f in factors])
        super().__init__(dim, self._components, box=box,
                         name=" x ".join(f.name for f in factors))

    def block(self, i) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def _components(self, x):
        n = self.dim
        rows = [[0.0] * n for _ in range(n)]
        for i, f in enumerate(self.factors):
            o = int(self.offsets[i])
            sub = f.components(list(x[o:o + f.dim]))
            for a in range(f.dim):
                for b in range(a, f.dim):
                    rows[o + a][o + b] = sub[a][b]
        return rows


def product(factors) -> ProductMetric:
    return ProductMetric(factors)


class DiagonalEmbedding:
    """The map ``(t, y_1, ..., y_k) -> (t, y_1, t, y_2, ..., t, y_k)``.

    Each factor must be split with ``r = 1``.  ``y_i`` is factor ``i``'s
    level coordinates in order; ``t`` is inserted at each factor's own
    height index.
    """

    def __init__(self, factors):
        factors = list(factors)
        if len(factors) < 1:
            raise ValueError("need at least one factor")
        for f in factors:
            if f.split is None:
                raise MismatchedSplit(f"factor {f.name} has no split structure")
            if abs(f.split.r - 1.0) > 1e-12:
                raise MismatchedSplit(f"factor {f.name} has height entry {f.split.r}, expected 1")
        self.factors = factors
        self.k = len(factors)
        self.level_dims = [f.dim - 1 for f in factors]
        self.y_offsets = np.cumsum([1] + self.level_dims)
        self.dim_y = int(self.y_offsets[-1])
        self.target = ProductMetric(factors) if self.k >= 2 else None

    @property
    def dim_x(self) -> int:
        return sum(f.dim for f in self.factors)

    def level_block(self, i) -> slice:
        """Slice of Y-coordinates holding factor ``i``'s level coordinates."""
        return slice(int(self.y_offsets[i]), int(self.y_offsets[i + 1]))

    def factor_point(self, i, t, y_block):
        f = self.factors[i]
        pt = list(y_block)
        pt.insert(f.split.t_index, t)
        return pt

    def map(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        out = []
        for i in range(self.k):
            out.extend(self.factor_point(i, p[0], p[self.level_block(i)]))
        return np.array(out)

    def factor_heights(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        off = 0
        heights = []
        for f in self.factors:
            heights.append(x[off + f.split.t_index])
            off += f.dim
        return np.array(heights)

    def factor_levels(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        off = 0
        out = []
        for f in self.factors:
            block = x[off:off + f.dim]
            out.append(np.delete(block, f.split.t_index))
            off += f.dim
        return out

    def project(self, x, tol: float = 1e-9) -> np.ndarray:
        """Inverse of :meth:`map` on the image; raises if the heights disagree."""
        heights = self.factor_heights(x)
        if np.max(heights) - np.min(heights) > tol:
            raise EndpointsNotDiagonal(f"factor heights {heights.tolist()} differ")
        return np.concatenate([[heights[0]], *self.factor_levels(x)])


def pullback_diagonal(emb: DiagonalEmbedding) -> MetricField:
    """Induced metric on ``R × N_1 × ... × N_k``: height entry ``k``, level blocks stacked."""
    factors = emb.factors
    n = emb.dim_y
    k = emb.k
    level_idx = [[j for j in range(f.dim) if j != f.split.t_index] for f in factors]

    def components(x):
        t = x[0]
        rows = [[0.0] * n for _ in range(n)]
        rows[0][0] = float(k)
        for i, f in enumerate(factors):
            o = int(emb.y_offsets[i])
            sub = f.components(emb.factor_point(i, t, x[emb.level_block(i)]))
            idx = level_idx[i]
            for a in range(len(idx)):
                for b in range(a, len(idx)):
                    rows[o + a][o + b] = sub[idx[a]][idx[b]]
        return rows

    t_lo = max(f.box[f.split.t_index, 0] for f in factors)
    t_hi = min(f.box[f.split.t_index, 1] for f in factors)
    box = [(t_lo, t_hi)]
    for f, idx in zip(factors, level_idx):
        box.extend(f.box[idx])

    model = None
    models = [f.model for f in factors]
    if all(isinstance(m, HorosphericalModel) and m.t_index == f.split.t_index
           for m, f in zip(models, factors)):
        if len({m.a for m in models}) == 1:
            # equal warp rates: the image is again a horospherical model
            model = HorosphericalModel(models[0].a, float(k), 0)
    return MetricField(n, components, box=box, split=Split(0, float(k)),
                       name=f"pullback({', '.join(f.name for f in factors)})", model=model)
