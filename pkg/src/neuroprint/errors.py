"""Exception hierarchy shared across the package.

The CLI maps DataError to exit code 1 and ConfigError to exit code 2;
everything else is a plain bug and propagates.
"""


class NeuroprintError(Exception):
    """Base class for errors raised by this package."""


class DataError(NeuroprintError):
    """Malformed, inconsistent or missing data (files, arrays, labels)."""


class ConfigError(NeuroprintError):
    """Invalid configuration or parameter values."""
