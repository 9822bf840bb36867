"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
NumericError -> 3.
"""


class DupqError(Exception):
    """Base class for all toolkit errors."""


class UsageError(DupqError):
    """Bad invocation: unknown config keys, incompatible model/feature pairing."""


class DataError(DupqError):
    """Unreadable, malformed, or inconsistent input data."""


class NumericError(DupqError):
    """Non-finite values or infeasible numerical state during training."""
