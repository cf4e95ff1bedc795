"""Forward-mode dual numbers, truncated at first or second order.

A :class:`Dual` carries a value, a gradient with respect to ``n`` seeded
inputs, and optionally the Hessian.  With ``hess`` present it behaves like
a dual number nested inside another dual number (a hyper-dual), which is
what the curvature code needs: one evaluation of the metric yields
``g``, ``dg`` and ``d2g``.

The elementary functions at the bottom accept floats or duals, so metric
evaluators written against them are generic over the scalar type.
"""

from __future__ import annotations

import math

import numpy as np


class Dual:
    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 100  # keep numpy from broadcasting over us

    def __init__(self, val, grad, hess=None):
        self.val = float(val)
        self.grad = grad
        self.hess = hess

    @classmethod
    def variables(cls, point, order=2):
        """Seed one dual per coordinate of ``point``."""
        point = np.asarray(point, dtype=float)
        n = point.size
        eye = np.eye(n)
        out = []
        for i in range(n):
            hess = np.zeros((n, n)) if order >= 2 else None
            out.append(cls(point[i], eye[i].copy(), hess))
        return out

    # chain rule for a scalar function with derivatives f1, f2 at self.val
    def _apply(self, f0, f1, f2):
        hess = None
        if self.hess is not None:
            hess = f1 * self.hess + f2 * np.outer(self.grad, self.grad)
        return Dual(f0, f1 * self.grad, hess)

    def __repr__(self):
        return f"Dual({self.val!r}, grad={self.grad!r})"

    def __float__(self):
        return self.val

    def __neg__(self):
        return Dual(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Dual):
            hess = None
            if self.hess is not None and other.hess is not None:
                hess = self.hess + other.hess
            return Dual(self.val + other.val, self.grad + other.grad, hess)
        return Dual(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual):
            hess = None
            if self.hess is not None and other.hess is not None:
                cross = np.outer(self.grad, other.grad)
                hess = self.val * other.hess + other.val * self.hess + cross + cross.T
            return Dual(
                self.val * other.val,
                self.val * other.grad + other.val * self.grad,
                hess,
            )
        other = float(other)
        return Dual(
            self.val * other,
            self.grad * other,
            None if self.hess is None else self.hess * other,
        )

    __rmul__ = __mul__

    def reciprocal(self):
        if self.val == 0.0:
            raise ZeroDivisionError("dual division by a zero real part")
        inv = 1.0 / self.val
        return self._apply(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return self * other.reciprocal()
        if other == 0:
            raise ZeroDivisionError("dual division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Dual):
            return exp(p * log(self))
        p = float(p)
        if p == 0.0:
            return Dual(1.0, np.zeros_like(self.grad),
                        None if self.hess is None else np.zeros_like(self.hess))
        a = self.val
        if a < 0 and not p.is_integer():
            raise ValueError("negative base with non-integer exponent")
        if a == 0 and p < 2:
            raise ValueError("power not differentiable at zero")
        return self._apply(a ** p, p * a ** (p - 1), p * (p - 1) * a ** (p - 2))

    def __rpow__(self, base):
        return exp(self * math.log(base))

    def exp(self):
        e = math.exp(self.val)
        return self._apply(e, e, e)

    def log(self):
        a = self.val
        if a <= 0:
            raise ValueError("log of a nonpositive number")
        return self._apply(math.log(a), 1.0 / a, -1.0 / (a * a))

    def sqrt(self):
        a = self.val
        if a <= 0:
            raise ValueError("sqrt of a nonpositive dual")
        s = math.sqrt(a)
        return self._apply(s, 0.5 / s, -0.25 / (s * a))

    def sin(self):
        s, c = math.sin(self.val), math.cos(self.val)
        return self._apply(s, c, -s)

    def cos(self):
        s, c = math.sin(self.val), math.cos(self.val)
        return self._apply(c, -s, -c)

    def sinh(self):
        s, c = math.sinh(self.val), math.cosh(self.val)
        return self._apply(s, c, s)

    def cosh(self):
        s, c = math.sinh(self.val), math.cosh(self.val)
        return self._apply(c, s, c)


def _lift(name, real):
    def f(x):
        if isinstance(x, Dual):
            return getattr(x, name)()
        return real(x)

    f.__name__ = name
    f.__doc__ = f"{name} for floats or :class:`Dual` numbers."
    return f


exp = _lift("exp", math.exp)
log = _lift("log", math.log)
sqrt = _lift("sqrt", math.sqrt)
sin = _lift("sin", math.sin)
cos = _lift("cos", math.cos)
sinh = _lift("sinh", math.sinh)
cosh = _lift("cosh", math.cosh)

FUNCTIONS = {
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "sin": sin,
    "cos": cos,
    "sinh": sinh,
    "cosh": cosh,
}


def value(x):
    return x.val if isinstance(x, Dual) else float(x)


def derivative(f, x0):
    """First derivative of a scalar function at ``x0``."""
    y = f(Dual(x0, np.ones(1)))
    return y.grad[0] if isinstance(y, Dual) else 0.0
