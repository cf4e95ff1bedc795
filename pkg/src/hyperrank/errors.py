"""Exception hierarchy shared by all modules."""

from __future__ import annotations

import numpy as np


class GeometryError(Exception):
    """Base class for numerical geometry failures."""


class SingularMetric(GeometryError):
    pass


class OutOfDomain(GeometryError):
    def __init__(self, point, box=None):
        self.point = np.asarray(point, dtype=float)
        self.box = box
        super().__init__(f"point {self.point.tolist()} lies outside the domain box")


class DegeneratePlane(GeometryError):
    pass


class NotTangentToLevel(GeometryError):
    pass


class NoSplit(GeometryError):
    pass


class MismatchedSplit(GeometryError):
    pass


class LeftDomain(GeometryError):
    def __init__(self, exit_point):
        self.exit_point = np.asarray(exit_point, dtype=float)
        super().__init__(f"geodesic left the domain box at {self.exit_point.tolist()}")


class ZeroVelocity(GeometryError):
    pass


class NoConvergence(GeometryError):
    """Solver gave up; ``best`` is the best upper bound found so far."""

    def __init__(self, message, best=float("inf"), residual=float("inf")):
        self.best = best
        self.residual = residual
        super().__init__(f"{message} (best={best!r}, residual={residual!r})")


class NonNegativeCurvatureDetected(GeometryError):
    pass


class DegenerateDenominator(GeometryError):
    pass


class InvalidDimension(ValueError):
    pass


class EndpointsNotDiagonal(GeometryError):
    pass


class BoundViolated(GeometryError):
    def __init__(self, segment, slack):
        self.segment = segment
        self.slack = slack
        super().__init__(f"segment {segment} exceeds its length bound by {-slack:.3e}")
