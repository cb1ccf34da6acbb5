"""Exception types raised by the solvers.

Instability and singularity are errors rather than NaNs so that sweeps
have to branch on them explicitly.
"""


class TwomechError(Exception):
    """Base class for all package errors."""


class ValidationError(TwomechError, ValueError):
    """A parameter set or configuration violates its invariants."""


class InvalidDimensionError(ValidationError):
    pass


class NonHermitianError(ValidationError):
    pass


class InstabilityError(TwomechError):
    """The linear dynamics has a growing eigenmode, so no steady state exists."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class SingularityError(TwomechError):
    def __init__(self, message, omega=None):
        super().__init__(message)
        self.omega = omega


class DegenerateSteadyStateError(TwomechError):
    """The Liouvillian kernel is not one-dimensional."""


class UndefinedWitnessError(TwomechError):
    """The nonclassicality witness has a vanishing denominator."""
