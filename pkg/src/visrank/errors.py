"""Exception hierarchy shared by every visrank module."""

from __future__ import annotations


class VisrankError(Exception):
    """Base class. ``line`` is the 1-based input line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.message = message
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ParseError(VisrankError, ValueError):
    """Input could not be parsed into the expected record shape."""


class ValidationError(VisrankError, ValueError):
    """Input parsed but violates a value-level invariant."""


class DomainError(VisrankError, ValueError):
    """Numeric argument outside the domain of a formula."""


class ConfigError(VisrankError):
    """A run was configured inconsistently (e.g. a required model is missing)."""
