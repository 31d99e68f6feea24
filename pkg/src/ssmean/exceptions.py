"""Semantic exception hierarchy.

Every error raised deliberately by this package derives from SsmeanError so
that callers (notably the CLI) can separate user/data/config problems from
genuine bugs.
"""


class SsmeanError(Exception):
    """Base class for all errors raised by ssmean."""


class DataError(SsmeanError):
    """Invalid data values: empty samples, non-finite entries, bad outcomes."""


class DimensionError(SsmeanError):
    """Mismatched vector lengths or matrix shapes."""


class ConfigError(SsmeanError):
    """Invalid configuration: bad alpha, unknown method, unsorted edges, ..."""


class MisuseError(SsmeanError):
    """API misuse, e.g. applying a calibrator to a design it was not fit on."""


class ConvergenceError(SsmeanError):
    """An iterative solver failed to converge; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
