"""Exception hierarchy shared across the package."""


class EephndError(Exception):
    """Base class for all library errors."""


class DomainError(EephndError, ValueError):
    """An argument lies outside the support or parameter space."""


class ConvergenceError(EephndError, RuntimeError):
    """An iterative routine exhausted its budget before reaching tolerance."""


class SaturationError(EephndError, ArithmeticError):
    """A quantity divides by a survival probability that underflowed to zero."""


class DivergenceError(EephndError, ArithmeticError):
    """A series was detected to be diverging."""


class DegenerateDataError(EephndError, ValueError):
    """The data carry no information about the requested fit."""


class SeparationError(EephndError, RuntimeError):
    """A regression coefficient diverged (complete or quasi-separation)."""


class BootstrapError(EephndError, RuntimeError):
    """Too many bootstrap resample fits failed."""
