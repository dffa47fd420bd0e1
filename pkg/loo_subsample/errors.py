"""Exception types and process exit codes."""

from enum import IntEnum


class ExitCode(IntEnum):
    """Process exit codes used by the command-line interface."""
    SUCCESS = 0
    INPUT = 2
    NUMERICAL = 3
    INVARIANT = 4


class LooSubsampleError(Exception):
    """Base class for all errors raised by loo_subsample."""
    exit_code = ExitCode.INVARIANT


class InputValidationError(LooSubsampleError, ValueError):
    """Inputs are malformed, inconsistent or out of range."""
    exit_code = ExitCode.INPUT


class NumericalDegeneracyError(LooSubsampleError, ArithmeticError):
    """A computation is undefined or failed to converge for the given inputs."""
    exit_code = ExitCode.NUMERICAL


class InvariantViolationError(LooSubsampleError, RuntimeError):
    """An internal self-check failed."""
    exit_code = ExitCode.INVARIANT
