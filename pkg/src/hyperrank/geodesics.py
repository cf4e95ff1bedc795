"""Geodesics, distances and curve lengths.

Distances come from three places, in order of preference:

* closed forms for horospherical models and products of them,
* shooting: damped Newton on the initial velocity, with the Jacobian
  from the variational equations integrated alongside the geodesic,
* polyline energy minimisation as a fallback.

Numerical results are lengths of actual curves, so up to discretisation
they bound the true distance from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize

from .errors import GeometryError, LeftDomain, NoConvergence, SingularMetric, ZeroVelocity
from .spaces import HorosphericalModel, ProductMetric
from .tensor import MetricField, christoffel_from_jet, christoffel_jet

IVP_STEP = 1e-3
REFINE_NODES = 129
MAX_NEWTON = 20
COARSE_NODES = 17
ROUNDOFF = 1e-12


@dataclass
class Curve:
    """Polyline through ``points`` at strictly increasing ``params``."""

    params: np.ndarray
    points: np.ndarray
    velocities: np.ndarray | None = None

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if len(self.params) < 2 or len(self.params) != len(self.points):
            raise ValueError("a curve needs at least two samples, one per parameter")
        if np.any(np.diff(self.params) <= 0):
            raise ValueError("curve parameters must be strictly increasing")

    @classmethod
    def through(cls, points) -> "Curve":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(np.linspace(0.0, 1.0, len(points)), points)

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def __len__(self):
        return len(self.params)


@dataclass(frozen=True)
class DistanceResult:
    value: float
    method: str  # closed_form, bvp_shooting or polyline_refine
    residual: float = 0.0


def curve_length(g: MetricField, c: Curve) -> float:
    """Sum over segments of the metric length of the chord, metric taken at the midpoint."""
    for x in c.points:
        g.check_point(x)
    pts = c.points
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        d = b - a
        if not np.any(d):
            continue
        total += math.sqrt(max(float(d @ g.evaluate(0.5 * (a + b)) @ d), 0.0))
    return total


# ---------------------------------------------------------------- geodesic ODE


def _acceleration(g: MetricField, x, v):
    metric, dg = g.jet(x, order=1)
    gamma = christoffel_from_jet(metric, dg)
    return -np.einsum("kij,i,j->k", gamma, v, v)


def speed(g: MetricField, x, v) -> float:
    return math.sqrt(float(v @ g.evaluate(x) @ v))


def geodesic_ivp(g: MetricField, base, velocity, length: float, step: float = IVP_STEP) -> Curve:
    """Unit-speed geodesic from ``base`` by classical RK4.

    The returned curve is parameterised by arc length and carries the
    velocities at each sample.
    """
    x = g.check_point(base).copy()
    v = np.asarray(velocity, dtype=float)
    if length < 0:
        raise ValueError("length must be nonnegative")
    s0 = speed(g, x, v)
    if not s0 > 1e-14:
        raise ZeroVelocity("initial velocity has zero length")
    v = v / s0
    n = max(1, int(math.ceil(length / step)))
    h = length / n if length > 0 else step
    xs, vs = [x.copy()], [v.copy()]
    for _ in range(n if length > 0 else 1):
        k1x, k1v = v, _acceleration(g, x, v)
        k2x = v + 0.5 * h * k1v
        k2v = _acceleration(g, x + 0.5 * h * k1x, k2x)
        k3x = v + 0.5 * h * k2v
        k3v = _acceleration(g, x + 0.5 * h * k2x, k3x)
        k4x = v + h * k3v
        k4v = _acceleration(g, x + h * k3x, k4x)
        x = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not g.contains(x):
            raise LeftDomain(x)
        xs.append(x.copy())
        vs.append(v.copy())
    params = np.linspace(0.0, length if length > 0 else h, len(xs))
    return Curve(params, np.array(xs), np.array(vs))


# ---------------------------------------------------------------- closed forms


def distance_closed_form_hyperbolic(a: float, p, q, r: float = 1.0, t_index: int = 0) -> DistanceResult:
    """Distance in ``r dt² + e^{-2at}|dy|²``.

    With ``a' = a/√r`` the map ``(t, y) -> (a'·y, e^{a t})`` is an isometry
    onto the upper half-space scaled to curvature ``−a'²``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    ap = a / math.sqrt(r)
    tp, tq = p[t_index], q[t_index]
    dy = np.delete(q, t_index) - np.delete(p, t_index)
    # |Δx_n|² / (x_n x_n') with x_n = e^{a t}, written to avoid cancellation
    dx2 = (2.0 * math.sinh(0.5 * a * (tq - tp))) ** 2
    horiz = ap * ap * float(dy @ dy) * math.exp(-a * (tp + tq))
    z = 0.25 * (horiz + dx2)
    return DistanceResult(2.0 * math.asinh(math.sqrt(z)) / ap, "closed_form", 0.0)


def closed_form_distance(g: MetricField, p, q) -> DistanceResult | None:
    """Exact distance when ``g`` is a registered model or a product of them."""
    if isinstance(g.model, HorosphericalModel):
        m = g.model
        return distance_closed_form_hyperbolic(m.a, p, q, m.r, m.t_index)
    if isinstance(g, ProductMetric):
        parts = []
        for i, f in enumerate(g.factors):
            sl = g.block(i)
            d = closed_form_distance(f, np.asarray(p)[sl], np.asarray(q)[sl])
            if d is None:
                return None
            parts.append(d.value)
        return DistanceResult(math.sqrt(sum(d * d for d in parts)), "closed_form", 0.0)
    return None


def hyperbolic_geodesic_points(model: HorosphericalModel, p, q, taus) -> np.ndarray:
    """Points on the geodesic from ``p`` to ``q`` at arc-length fractions ``taus``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    taus = np.asarray(taus, dtype=float)
    a, ti = model.a, model.t_index
    ap = a / math.sqrt(model.r)
    yp, yq = np.delete(p, ti), np.delete(q, ti)
    Yp, Yq = ap * yp, ap * yq
    Xp, Xq = math.exp(a * p[ti]), math.exp(a * q[ti])
    D = float(np.linalg.norm(Yq - Yp))
    if D <= 1e-14 * max(Xp, Xq):
        logX = (1 - taus) * math.log(Xp) + taus * math.log(Xq)
        Y = Yp + np.outer(taus, Yq - Yp)
        X = np.exp(logX)
    else:
        e = (Yq - Yp) / D
        c = (D * D + Xq * Xq - Xp * Xp) / (2 * D)
        R = math.hypot(c, Xp)
        thp = math.atan2(Xp, -c)
        thq = math.atan2(Xq, D - c)
        sp, sq = math.log(math.tan(0.5 * thp)), math.log(math.tan(0.5 * thq))
        th = 2.0 * np.arctan(np.exp((1 - taus) * sp + taus * sq))
        u = c + R * np.cos(th)
        X = R * np.sin(th)
        Y = Yp + np.outer(u, e)
    t = np.log(X) / a
    y = Y / ap
    out = np.insert(y, ti, t, axis=1)
    # pin exact endpoints against round-off in the chart change
    if taus[0] == 0.0:
        out[0] = p
    if taus[-1] == 1.0:
        out[-1] = q
    return out


def product_geodesic_points(g: ProductMetric, p, q, taus) -> np.ndarray:
    """Geodesic of a product of horospherical models, sampled at ``taus``."""
    blocks = []
    for i, f in enumerate(g.factors):
        sl = g.block(i)
        blocks.append(hyperbolic_geodesic_points(f.model, np.asarray(p)[sl], np.asarray(q)[sl], taus))
    return np.hstack(blocks)


# ---------------------------------------------------------------- shooting


def _shoot(g: MetricField, p, v0, with_jacobian: bool):
    n = g.dim

    def rhs(_, y):
        x, v = y[:n], y[n:2 * n]
        if with_jacobian:
            gamma, dgamma = christoffel_jet(*g.jet(x, order=2))
        else:
            gamma = christoffel_from_jet(*g.jet(x, order=1))
        acc = -np.einsum("kij,i,j->k", gamma, v, v)
        if not with_jacobian:
            return np.concatenate([v, acc])
        Jx = y[2 * n:2 * n + n * n].reshape(n, n)
        Jv = y[2 * n + n * n:].reshape(n, n)
        dJv = -np.einsum("mkij,i,j,ma->ka", dgamma, v, v, Jx) - 2.0 * np.einsum("kij,i,ja->ka", gamma, v, Jv)
        return np.concatenate([v, acc, Jv.ravel(), dJv.ravel()])

    y0 = [p, v0]
    if with_jacobian:
        y0 += [np.zeros(n * n), np.eye(n).ravel()]
    try:
        sol = solve_ivp(rhs, (0.0, 1.0), np.concatenate(y0), method="DOP853", rtol=1e-11, atol=1e-12)
    except (OverflowError, FloatingPointError, ValueError) as exc:
        # wild trial velocities run the chart coordinates off to infinity
        raise GeometryError(f"geodesic integration blew up: {exc}") from None
    if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
        raise GeometryError(f"geodesic integration failed: {sol.message}")
    y = sol.y[:, -1]
    if with_jacobian:
        return y[:n], y[2 * n:2 * n + n * n].reshape(n, n)
    return y[:n], None


def _floor(q) -> float:
    """Endpoint mismatch below which more Newton steps only stir round-off."""
    return ROUNDOFF * (1.0 + float(np.linalg.norm(q)))


def _newton(g: MetricField, p, q, v, tol: float, max_iter: int):
    """Armijo-damped Newton on the initial velocity; returns ``(v, residual)``."""
    best_res, best_v = math.inf, v
    for _ in range(max_iter):
        try:
            x1, J = _shoot(g, p, v, True)
        except GeometryError:
            break
        F = x1 - q
        res = float(np.linalg.norm(F))
        if res < best_res:
            best_res, best_v = res, v
        if res < tol and res < 1e-10 * (1 + np.linalg.norm(q)) or res < _floor(q):
            break
        try:
            step = -np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            break
        alpha = 1.0
        for _ in range(12):
            try:
                x_try, _ = _shoot(g, p, v + alpha * step, False)
                if np.linalg.norm(x_try - q) <= (1 - 1e-4 * alpha) * res:
                    break
            except GeometryError:
                pass
            alpha *= 0.5
        v = v + alpha * step
    try:
        res = float(np.linalg.norm(_shoot(g, p, v, False)[0] - q))
        if res < best_res:
            best_res, best_v = res, v
    except GeometryError:
        pass
    return best_v, best_res


def _miss_bound(g: MetricField, p, q, v) -> float:
    """Length of the shot geodesic plus the chord from where it lands to ``q``."""
    try:
        x1, _ = _shoot(g, p, v, False)
        d = q - x1
        return speed(g, p, v) + math.sqrt(max(float(d @ g.evaluate(0.5 * (x1 + q)) @ d), 0.0))
    except (GeometryError, np.linalg.LinAlgError):
        return math.inf


def shooting_distance(g: MetricField, p, q, tol: float = 1e-6, max_iter: int = MAX_NEWTON) -> DistanceResult:
    """Newton shooting on the initial velocity.

    Starts from the coordinate straight line.  If that stalls, restarts
    from the first leg of a coarse polyline geodesic, then walks the
    target from ``p`` to ``q`` in stages reusing each solution.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    v, res = _newton(g, p, q, q - p, tol, max_iter)
    if not res < tol and res > _floor(q):
        try:
            X, _ = _polyline_nodes(g, p, q, COARSE_NODES, maxiter=500)
            v2, res2 = _newton(g, p, q, (X[1] - X[0]) * (COARSE_NODES - 1), tol, max_iter)
            if res2 < res:
                v, res = v2, res2
        except (GeometryError, np.linalg.LinAlgError):
            pass
    if not res < tol and res > _floor(q):
        # continuation: reach p + s(q - p) for growing s, rescaling the last solution
        w, s_prev = q - p, 1.0
        for s in (0.25, 0.5, 0.75, 1.0):
            w, r_s = _newton(g, p, p + s * (q - p), w * (s / s_prev), tol, max_iter)
            s_prev = s
        if r_s < res:
            v, res = w, r_s
    value = speed(g, p, v)
    if not res < tol:
        raise NoConvergence("shooting did not reach the endpoint", _miss_bound(g, p, q, v), res)
    return DistanceResult(value, "bvp_shooting", res)


# ---------------------------------------------------------------- polyline refinement


def _polyline_nodes(g: MetricField, p, q, nodes: int, decrease_tol: float = 1e-10, maxiter: int = 5000):
    """Nodes of the energy-minimising polyline and the optimiser result."""
    n = g.dim
    m = nodes - 1
    taus = np.linspace(0, 1, nodes)[1:-1, None]
    x0 = (p + taus * (q - p)).ravel()

    def unpack(z):
        return np.vstack([p, z.reshape(-1, n), q])

    def energy(z):
        X = unpack(z)
        D = np.diff(X, axis=0)
        E = 0.0
        grad = np.zeros_like(X)
        for s in range(m):
            G, dG = g.jet(0.5 * (X[s] + X[s + 1]), order=1)
            d = D[s]
            E += m * float(d @ G @ d)
            half = 0.5 * m * np.einsum("kij,i,j->k", dG, d, d)
            lin = 2.0 * m * (G @ d)
            grad[s] += half - lin
            grad[s + 1] += half + lin
        return E, grad[1:-1].ravel()

    try:
        res = minimize(energy, x0, jac=True, method="L-BFGS-B",
                       options={"ftol": decrease_tol, "gtol": 1e-12, "maxiter": maxiter})
    except (OverflowError, FloatingPointError) as exc:
        raise GeometryError(f"polyline energy blew up: {exc}") from None
    return unpack(res.x), res


def polyline_distance(g: MetricField, p, q, nodes: int = REFINE_NODES, tol: float = 1e-6,
                      decrease_tol: float = 1e-10) -> DistanceResult:
    """Minimise the discrete energy of a ``nodes``-point polyline from ``p`` to ``q``.

    The residual is the largest component of the energy gradient, scaled
    by the node spacing.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    try:
        X, res = _polyline_nodes(g, p, q, nodes, decrease_tol)
    except (GeometryError, SingularMetric) as exc:
        raise NoConvergence(f"polyline refinement failed: {exc}") from None
    length = 0.0
    for a, b in zip(X[:-1], X[1:]):
        d = b - a
        length += math.sqrt(max(float(d @ g.evaluate(0.5 * (a + b)) @ d), 0.0))
    residual = float(np.max(np.abs(res.jac))) / (nodes - 1) if res.jac.size else 0.0
    if not residual < tol:
        raise NoConvergence("polyline refinement stalled", length, residual)
    return DistanceResult(length, "polyline_refine", residual)


def distance(g: MetricField, p, q, tol: float = 1e-6, method: str = "auto",
             nodes: int = REFINE_NODES, refine_tol: float = 1e-4) -> DistanceResult:
    """Riemannian distance between ``p`` and ``q``.

    ``method`` is ``auto`` (closed form when available), ``bvp`` (numeric
    only) or ``closed_form``.  ``tol`` bounds the shooting endpoint
    mismatch, ``refine_tol`` the scaled energy gradient of the fallback.
    """
    p = g.check_point(p)
    q = g.check_point(q)
    if np.array_equal(p, q):
        return DistanceResult(0.0, "closed_form", 0.0)
    if method in ("auto", "closed_form"):
        exact = closed_form_distance(g, p, q)
        if exact is not None:
            return exact
        if method == "closed_form":
            raise ValueError(f"no closed form registered for {g.name}")
    elif method != "bvp":
        raise ValueError(f"unknown distance method {method!r}")
    best = NoConvergence("no solver ran")
    try:
        return shooting_distance(g, p, q, tol=tol)
    except NoConvergence as exc:
        best = exc
        if exc.residual <= _floor(q):
            # already a geodesic to working precision; tol is out of reach for any solver
            raise NoConvergence("distance solvers did not converge", exc.best, exc.residual) from None
    except (GeometryError, SingularMetric):
        pass
    try:
        return polyline_distance(g, p, q, nodes=nodes, tol=refine_tol)
    except NoConvergence as exc:
        if exc.best < best.best:
            best = exc
    raise NoConvergence("distance solvers did not converge", best.best, best.residual)
