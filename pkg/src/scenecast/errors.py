"""Shared exception types.

Everything configuration-shaped raises InvalidParameterError so callers can
distinguish "you built this wrong" from genuine runtime failures.
"""


class InvalidParameterError(ValueError):
    """A constructor or function argument is outside its documented domain."""


class InvalidActionError(ValueError):
    """An allocation action does not fit the scenario (bad index or station id)."""


class InvalidStateError(RuntimeError):
    """An object was used out of order, e.g. stepping a finished episode."""


class NumericError(ArithmeticError):
    """A numeric routine produced or received non-finite values."""


class EnumerationCapError(RuntimeError):
    """An exhaustive search would exceed its node budget; refused up front."""
