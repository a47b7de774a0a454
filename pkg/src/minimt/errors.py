"""Shared exception types. The CLI maps MiniMTError to a data-error exit code."""


class MiniMTError(Exception):
    """Base class for data and model errors raised by minimt."""


class EmptySentenceError(MiniMTError):
    """Raised when a sentence has no tokens (empty or whitespace-only line)."""


class AllFilteredError(MiniMTError):
    """Raised when a cleaning step removes every sentence pair."""
