"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 1,
numerical failures with 2, and I/O problems with 3.
"""


class LitfitError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(LitfitError):
    """A parameter is outside its mathematical domain (e.g. sigma <= 0)."""


class ConfigError(LitfitError):
    """A configuration file or combination of options is invalid."""


class DataError(LitfitError):
    """Sampled data is unusable, e.g. a non-finite function value."""


class NumericalError(LitfitError):
    """A numerical routine (SVD, Newton iteration) failed irrecoverably."""


class MemoryGuardError(NumericalError):
    """A requested dense solve exceeds the configured size cap."""
