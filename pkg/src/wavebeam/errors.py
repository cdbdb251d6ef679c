"""Exception types shared across the package."""


class WavebeamError(Exception):
    """Base class for all package errors."""


class InvalidParameter(WavebeamError, ValueError):
    """A physical or numerical parameter violates its stated invariant."""


class InvalidInput(WavebeamError, ValueError):
    """Malformed input data (grids, arrays, config documents)."""


class ConvergenceError(WavebeamError, RuntimeError):
    """An iterative solver did not converge. Carries the last residuals."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class ClassificationError(WavebeamError, RuntimeError):
    """Roots could not be assigned to branches unambiguously."""


class ConditioningError(WavebeamError, RuntimeError):
    """A linear system is numerically singular."""


class ControllabilityError(WavebeamError, RuntimeError):
    """The Gram matrix is not positive definite. Carries a conditioning report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PreconditionError(WavebeamError, ValueError):
    """An operation was called outside the regime where it is defined."""


class DivergenceError(WavebeamError, RuntimeError):
    """Time integration produced a nonfinite state."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
