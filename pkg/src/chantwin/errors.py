"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`ChantwinError`.
The three families map onto the command-line exit codes.
"""


class ChantwinError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(ChantwinError, ValueError):
    """Invalid user configuration (exit code 2)."""

    exit_code = 2


class DataError(ChantwinError, ValueError):
    """Malformed or inconsistent data (exit code 3)."""

    exit_code = 3


class NumericalError(ChantwinError, ArithmeticError):
    """A computation is undefined for the given inputs (exit code 4)."""

    exit_code = 4


class DimensionMismatch(DataError):
    pass


class TooFewSnapshots(DataError):
    pass


class DuplicateLocations(DataError):
    pass


class DegeneratePeak(NumericalError):
    pass


class DegenerateVariance(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class DivergenceWarning(UserWarning):
    """A forecast uses eigenvalues outside the unit circle."""
