"""Shared exception types.

InputError marks bad caller input (CLI exit code 2); ConsistencyError marks a
violated internal invariant and always indicates a bug, never bad input.
"""


class InputError(ValueError):
    """Raised when caller-supplied data violates a documented precondition."""


class ConsistencyError(RuntimeError):
    """Raised when an internal cross-check fails; indicates a bug."""
