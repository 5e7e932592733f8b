"""Numerics for one-dimensional time-fractional diffusion with a potential:
Mittag-Leffler functions, fractional integrals and derivatives,
Sturm-Liouville eigensystems, forward solvers and an inverse-source engine."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (  # noqa: E402,F401
    AccuracyWarning,
    ConditioningWarning,
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    GrowthOverflowError,
    HypothesisViolationError,
    InvalidGridError,
    NodeLookupError,
    PreconditionError,
    ResolutionError,
    ShapeError,
    SolverError,
    TfdError,
)
from .grids import (  # noqa: E402,F401
    FractionalOrder,
    LaplaceValue,
    SpaceGrid,
    SpaceProfile,
    SpaceTimeField,
    TimeGrid,
    TimeSeries,
    central_space_derivative,
    laplace_transform,
    laplace_transform_field,
    trapezoid_integrate,
)
from .mittag_leffler import MLQuery, ml_kernel_pair, mittag_leffler  # noqa: E402,F401
