"""Exception hierarchy.

Errors split into two families so the command line can map them onto
exit codes: invalid input (``ConfigError`` and its subclasses) and
numerical failures (``NumericalError`` and its subclasses).
"""


class AggpolError(Exception):
    """Base class for all package errors."""


class ConfigError(AggpolError, ValueError):
    """Malformed or inconsistent user input."""


class ParameterDomainError(ConfigError):
    """A physical parameter lies outside its admissible domain."""


class NumericalError(AggpolError, ArithmeticError):
    """A computation could not be carried out reliably."""


class SingularFactorError(NumericalError):
    """A denominator of the dipole response vanished."""


class NonNormalizableError(NumericalError):
    """The stationary density cannot be normalized (nu <= 1/2)."""


class MomentDivergenceError(NumericalError):
    """A requested moment of the stationary density does not exist."""


class NotPearsonIVError(NumericalError):
    """Moments do not correspond to a Pearson type IV distribution."""


class DegenerateScaleError(NumericalError):
    """A parameter inversion hit a zero or non-finite scale."""


class StiffnessError(NumericalError):
    """The adaptive integrator could not meet its tolerance."""


class UnsupportedRangeError(NumericalError):
    """Function arguments fall outside the validated evaluation range."""


class LeakageError(NumericalError):
    """A time record has not decayed enough for spectral analysis."""


class GridError(ConfigError):
    """A time grid is malformed (non-positive step, non-uniform, too short)."""


class InternalConsistencyError(NumericalError):
    """A quantity that is nonnegative by construction came out negative."""
