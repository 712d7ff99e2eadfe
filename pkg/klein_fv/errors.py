"""Exception hierarchy shared by the library and the console front end."""

from typing import Optional


class KleinFVError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(KleinFVError, ValueError):
    """A physics precondition of an operation does not hold."""


class GridMismatchError(PreconditionError):
    """Two inputs are not sampled on the same grid."""


class SingularMatchingError(PreconditionError):
    """The step matching conditions are degenerate (p + p' = 0)."""


class NumericalError(KleinFVError, ArithmeticError):
    """The integrator produced non-finite values or broke its conservation budget."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class StabilityError(NumericalError):
    """The requested time step is above the integrator bound."""

    def __init__(self, dt: float, dt_max: float):
        super().__init__(f"Time step dt={dt:.6g} exceeds the stability bound dt_max={dt_max:.6g}.")
        self.dt = dt
        self.dt_max = dt_max


class ConfigError(KleinFVError, ValueError):
    """A scenario configuration is malformed."""
