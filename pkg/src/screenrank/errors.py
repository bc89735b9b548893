"""Shared exception types."""


class ScreenRankError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ScreenRankError):
    """Malformed input text; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DataError(ScreenRankError):
    """Structurally valid input that violates a dataset invariant."""


class AnalysisError(ScreenRankError):
    """Invalid statistical comparison request."""


class ConfigError(ScreenRankError):
    """Bad pipeline configuration or unusable paths (a usage error, exit 2)."""
