class SmdError(Exception):
    """Base class for library errors."""


class ConfigurationError(SmdError, ValueError):
    """Invalid configuration; ``path`` names the offending field when known."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SingularGram(SmdError):
    """The (regularized) Gram matrix cannot be factorized."""


class DriverSingularity(SmdError):
    """The moment driver was evaluated on (or beyond) its singular set."""


class UnsupportedDimension(SmdError, ValueError):
    pass


class NumericOverflow(SmdError):
    """A particle update produced a non-finite value."""
