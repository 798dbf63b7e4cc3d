"""Exception taxonomy shared by the library and the CLI.

The CLI maps these onto distinct process exit codes so scripted callers can
tell validation problems from data corruption, solver failures and I/O.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_CONVERGENCE = 4
EXIT_IO = 5


class UsageError(ValueError):
    """Invalid argument, flag or configuration value."""


class DataFormatError(Exception):
    """A file's content does not match its declared format."""


class ConsistencyError(DataFormatError):
    """Two artifacts that must agree (counts, dimensions) do not."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its step budget before reaching tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class DataIOError(OSError):
    """A file could not be read completely (missing, empty, truncated)."""


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code documented in the README."""
    if isinstance(exc, ConvergenceError):
        return EXIT_CONVERGENCE
    if isinstance(exc, DataFormatError):
        return EXIT_FORMAT
    if isinstance(exc, (UsageError, ValueError)):
        return EXIT_USAGE
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc
