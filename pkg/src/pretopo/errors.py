"""Exception types shared across the package."""


class PretopoError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PretopoError):
    """Invalid configuration: bad thresholds, missing features, mismatched inputs."""


class DataError(PretopoError):
    """Input data violates a contract (ordering, ranges, coverage)."""


class ParseError(PretopoError):
    """A file could not be parsed. Carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateSeriesError(DataError):
    """A series has zero variance and carries no linear signal.

    ``item`` is the index (or site id) of the offending series when known.
    """

    def __init__(self, message, item=None):
        if item is not None:
            message = f"{message} (item {item})"
        super().__init__(message)
        self.item = item


class UnsupportedSpaceError(PretopoError):
    """The operation requires a property (e.g. isotony) the space does not have."""
