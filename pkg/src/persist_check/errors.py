"""Exception hierarchy shared by every persist-check module."""

from typing import Optional


class PersistCheckError(Exception):
    """Base class for all errors raised by persist-check."""


class ConfigurationError(PersistCheckError):
    """A program, state or option is inconsistent with its declarations."""


class EvaluationError(PersistCheckError):
    """An expression or assertion refers to a symbol with no value."""


class LitmusParseError(PersistCheckError):
    """A litmus file could not be parsed.

    Args:
        message: What went wrong
        line: 1-based line number, if known
        column: 1-based column number, if known
    """

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(self._format())

    def _format(self) -> str:
        if self.line is None:
            return self.message
        if self.column is None:
            return f"line {self.line}: {self.message}"
        return f"line {self.line}, column {self.column}: {self.message}"
