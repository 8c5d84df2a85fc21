"""Shared exception types."""

from .graphs import GraphError

__all__ = [
    "GraphError",
    "NotStableError",
    "NotRecurrentError",
    "NotMinimalError",
    "BudgetExceededError",
    "FileFormatError",
]


class NotStableError(ValueError):
    """A sandpile was required to be stable but is not."""


class NotRecurrentError(ValueError):
    """A sandpile was required to be recurrent but is not."""


class NotMinimalError(ValueError):
    """A configuration was required to be (generalized) minimal but is not."""


class BudgetExceededError(RuntimeError):
    """A brute-force enumeration would exceed its configured budget."""


class FileFormatError(ValueError):
    """A graph/sandpile/tree file failed validation."""
