"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class NpsaError(Exception):
    exit_code = 1


class InvalidInputError(NpsaError, ValueError):
    """Malformed parameters, mismatched shapes, unknown config keys."""

    exit_code = 2


class DegenerateDataError(NpsaError, ArithmeticError):
    """Data carries no usable quadrature pair (or a solve is singular)."""

    exit_code = 3


class ConvergenceError(DegenerateDataError):
    def __init__(self, message, sweeps=None):
        super().__init__(message)
        self.sweeps = sweeps


class StackFormatError(NpsaError, IOError):
    """Unreadable, truncated or CRC-failing stack file."""

    exit_code = 4
