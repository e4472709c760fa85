"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: configuration problems exit 2,
I/O and data-format problems exit 3, numerical failures exit 4.
"""


class BathspecError(Exception):
    """Base class for all package-specific errors."""


class DomainError(BathspecError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class UnphysicalParameterError(BathspecError, ValueError):
    """Parameters describe a model outside its physical validity range."""


class ConfigError(BathspecError, ValueError):
    """A run configuration is malformed, incomplete, or inconsistent."""


class DataError(BathspecError, ValueError):
    """Input data violates a format or sanity contract (exit code 3)."""


class NumericalError(BathspecError, RuntimeError):
    """A numerical routine failed to reach its accuracy target.

    ``achieved_error`` carries the best error estimate available at the point
    of failure so callers can report how far off the result was.
    """

    def __init__(self, message, achieved_error=None):
        super().__init__(message)
        self.achieved_error = achieved_error


class SingularityError(NumericalError):
    """Evaluation requested at (or numerically on top of) a pole."""


class DegenerateDataError(DataError):
    """Input data carries no usable signal for the requested estimate."""
