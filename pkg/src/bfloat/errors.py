"""Typed errors raised across the package."""


class BfloatError(Exception):
    """Base class for all package errors."""


class DomainError(BfloatError, ValueError):
    """A point inside the obstacle region was passed where an exterior point is required."""


class InvalidStateError(BfloatError, ValueError):
    """A state violates an admissibility constraint (e.g. 1 + 2*eps*theta < 0)."""


class ObstacleTouchesBottomError(BfloatError, ValueError):
    """The water height under the obstacle drops below the configured minimum."""


class ResolutionError(BfloatError, ValueError):
    """The grid does not resolve the dispersive boundary layer."""


class HyperbolicPathError(BfloatError, ValueError):
    """A dispersive operator was called with delta == 0."""


class TraceOrderError(BfloatError, ValueError):
    """A one-sided derivative trace needs more nodes than the grid provides."""


class BlowUpError(BfloatError, ArithmeticError):
    """The solution left the region where the evolution equations make sense."""

    def __init__(self, message: str, t: float = float("nan")):
        super().__init__(message)
        self.t = t


class InsufficientHistoryError(BfloatError, ValueError):
    """A time-window diagnostic received too few states."""


class ConfigError(BfloatError, ValueError):
    """A configuration document failed validation."""
