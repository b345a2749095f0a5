"""Exception hierarchy.

Each category carries the process exit code used by the command line.
"""


class MhwError(Exception):
    exit_code = 1


class ConfigError(MhwError):
    exit_code = 2


class InputError(MhwError):
    """Missing or malformed market-data file."""

    exit_code = 3


class ScheduleError(MhwError, ValueError):
    exit_code = 4


class DomainError(MhwError, ValueError):
    """Date or time outside the domain of a curve or volatility function."""

    exit_code = 4


class BootstrapError(MhwError):
    exit_code = 5


class RootError(MhwError):
    """No sign change of the exercise-boundary function could be bracketed."""

    exit_code = 6


class InversionError(MhwError):
    exit_code = 6


class CalibrationError(MhwError):
    exit_code = 7
