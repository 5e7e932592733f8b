"""Exception and warning classes shared across the package."""

from __future__ import annotations


class TfdError(Exception):
    """Base class for all package errors."""


class InvalidGridError(TfdError, ValueError):
    pass


class DomainError(TfdError, ValueError):
    pass


class NodeLookupError(TfdError, ValueError):
    pass


class ShapeError(TfdError, ValueError):
    pass


class PreconditionError(TfdError, ValueError):
    pass


class HypothesisViolationError(PreconditionError):
    """A hypothesis of the uniqueness theory is violated (e.g. rho(0) = 0)."""


class DegenerateInputError(TfdError, ValueError):
    pass


class ResolutionError(TfdError, ValueError):
    pass


class ConfigurationError(TfdError, ValueError):
    pass


class GrowthOverflowError(TfdError, ArithmeticError):
    pass


class SolverError(TfdError, RuntimeError):
    pass


class AccuracyWarning(UserWarning):
    """Requested accuracy could not be reached; the estimate is attached."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(message)
        self.error_estimate = error_estimate


class ConditioningWarning(UserWarning):
    pass
