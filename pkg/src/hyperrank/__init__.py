"""Numerical geometry of horospherical products and their diagonal embeddings."""

from .bilipschitz import BilipschitzReport, PathDecomposition, construct_path, run_bilipschitz_experiment, segment_bounds_check
from .dsl import MetricSpec, parse_metric
from .errors import (
    BoundViolated,
    DegenerateDenominator,
    DegeneratePlane,
    EndpointsNotDiagonal,
    GeometryError,
    InvalidDimension,
    LeftDomain,
    MismatchedSplit,
    NoConvergence,
    NonNegativeCurvatureDetected,
    NoSplit,
    NotTangentToLevel,
    OutOfDomain,
    SingularMetric,
    ZeroVelocity,
)
from .geodesics import Curve, closed_form_distance, curve_length, distance, geodesic_ivp
from .pinch import (
    PinchingConstants,
    curvature_lower_bound,
    curvature_upper_bound,
    estimate_constants,
    lambda_threshold,
    rank_additivity,
    verify_stretch_pinching,
)
from .spaces import (
    DiagonalEmbedding,
    ProductMetric,
    flat,
    horospherical_model,
    level_metric,
    perturbed_model,
    product,
    pullback_diagonal,
    stretch,
)
from .tensor import MetricField, Split, TangentPlane, christoffel, riemann, sectional_curvature

__version__ = "0.1.0"
