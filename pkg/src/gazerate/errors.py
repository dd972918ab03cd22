"""Exception hierarchy shared by all modules."""


class GazeRateError(Exception):
    """Base class for every error raised by this package."""


class ParseError(GazeRateError, ValueError):
    """Malformed input text. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, source=None):
        self.message = message
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class FormatError(ParseError):
    """Binary or text resource file does not follow its declared format."""


class SchemaError(ParseError):
    """Tabular input has missing or unexpected columns."""


class ValidationError(GazeRateError, ValueError):
    """Input parsed, but violates a domain invariant."""


class DomainError(GazeRateError, ValueError):
    """Arguments outside the domain of a computation."""


class TrainingError(GazeRateError, RuntimeError):
    """Training diverged (non-finite loss)."""

    def __init__(self, message, epoch=None, batch=None):
        self.epoch = epoch
        self.batch = batch
        super().__init__(message)
