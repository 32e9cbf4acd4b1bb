"""Exception hierarchy shared by the services and the CLI."""
from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from app.services.iteration_engine import IterationTrace

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MAX_ITERS = 2
EXIT_CYCLE = 3
EXIT_VIOLATION = 4


class KfixError(Exception):
    """Base class for all errors raised by kfix."""

    exit_code = EXIT_USAGE


class UsageError(KfixError, ValueError):
    """Bad arguments, dimension mismatch or malformed input."""


class DomainError(UsageError):
    """Argument outside the domain of a function."""


class NumericOverflowError(KfixError, ArithmeticError):
    """An iteration produced a non-finite value.

    The partial trace before the offending iterate is kept on
    the exception so callers can still write it out.
    """

    exit_code = EXIT_MAX_ITERS

    def __init__(self, message: str, trace: Optional["IterationTrace"] = None):
        super().__init__(message)
        self.trace = trace
