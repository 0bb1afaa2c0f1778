"""Exception hierarchy shared across the package."""


class InsightRankError(Exception):
    """Base class for all package errors."""


class DataError(InsightRankError):
    """Malformed or inconsistent input data (bad file, invariant violation)."""


class ParseError(DataError):
    """A file could not be parsed; message carries the location when known."""


class ShapeError(InsightRankError):
    """Tensor shape mismatch in the numeric kernel."""


class ConfigError(InsightRankError):
    """Invalid configuration value."""
