"""Exception types shared across the package."""


class GibbsLabError(Exception):
    """Base class for all package errors."""


class InvalidModelError(GibbsLabError, ValueError):
    """Bad model parameters (size, locality, term data)."""


class InvalidRegionError(GibbsLabError, ValueError):
    """A region is empty or references sites outside the system."""


class InvalidParameterError(GibbsLabError, ValueError):
    """A scalar parameter is out of its admissible range."""


class NumericDomainError(GibbsLabError, ValueError):
    """Input violates a numerical precondition (e.g. not Hermitian)."""


class CapacityError(GibbsLabError, RuntimeError):
    """Requested computation exceeds a documented backend size limit."""


class StiffnessError(GibbsLabError, RuntimeError):
    """Adaptive integration failed to make progress."""


class ConfigError(GibbsLabError, ValueError):
    """A scenario configuration failed validation.

    ``keys`` lists the offending fields.
    """

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)


class QuadratureWarning(UserWarning):
    """A quadrature did not converge to its target accuracy."""
