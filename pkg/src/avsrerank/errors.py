"""Exception hierarchy shared across the toolkit.

Everything data-related derives from :class:`DataError` so the CLI can map
it to a single exit code; programming errors (bad arguments to library
functions) raise plain ``ValueError``/``KeyError`` as usual.
"""


class DataError(Exception):
    """Base class for malformed or inconsistent input data."""


class ParseError(DataError):
    """A line of an input file could not be parsed.

    Carries the 1-based line number when raised by the file parsers.
    """

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ValidationError(DataError):
    """Structurally parseable input that violates an invariant."""


class StoreFormatError(DataError):
    """Binary embedding store is corrupt, truncated, or not a store."""


class ConfigError(DataError):
    """A configuration value is outside its legal domain."""


class EvaluationError(DataError):
    """A metric is undefined for the given run/qrels combination."""
