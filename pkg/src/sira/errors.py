"""Exception hierarchy shared across the package.

Every error raised on purpose derives from SiraError so callers can
distinguish contract violations from genuine bugs. The CLI maps these
onto process exit codes.
"""


class SiraError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SiraError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(SiraError, ValueError):
    """A configuration object or run specification is invalid."""


class NumericalError(SiraError, ArithmeticError):
    """A numerical routine failed to reach its accuracy target."""
