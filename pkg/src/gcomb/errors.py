"""Exception hierarchy shared across the package.

The service and CLI map these onto HTTP error codes and process exit
codes (usage -> 2, data -> 3, numeric -> 4), so new error types should
subclass one of the three categories below.
"""


class GcombError(Exception):
    """Base class for all package errors."""


class UsageError(GcombError):
    """Invalid parameters or an operation invoked outside its contract."""


class DataError(GcombError):
    """Malformed or missing input data (files, graphs, model files)."""


class ParseError(DataError):
    """A file could not be parsed; message carries the line number."""


class NumericError(GcombError):
    """Training diverged or produced non-finite values."""
