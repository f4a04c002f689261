"""Exception hierarchy shared across the package."""


class MergebenchError(Exception):
    """Base class for all package errors."""


class InvalidArgument(MergebenchError, ValueError):
    """A caller violated a documented precondition."""


class UndefinedMetric(MergebenchError, ValueError):
    """A metric is mathematically undefined for the given input."""


class GenerationFailure(MergebenchError, RuntimeError):
    """Source-model generation exhausted its retry budget."""


class ParseError(MergebenchError, ValueError):
    """A serialized document could not be parsed.

    ``location`` carries a human-readable position (line/column or path).
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location:
            message = f"{message} (at {location})"
        super().__init__(message)


class UnsupportedVersion(MergebenchError, ValueError):
    """A serialized document declares a format version we cannot read."""
