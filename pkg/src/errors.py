# errors.py
"""
Exception hierarchy for the spacing toolkit.

Every exception carries the process exit code the CLI reports for it.
"""

from src.constants import EXIT_ARGUMENT, EXIT_DATA, EXIT_NUMERICAL


class SpacingToolkitError(Exception):
    """Base class for all toolkit failures"""
    exit_code = 1


class ArgumentError(SpacingToolkitError, ValueError):
    exit_code = EXIT_ARGUMENT


class DomainError(ArgumentError):
    """A point or parameter lies outside the domain an object was built for"""

    def __init__(self, message, interval=None):
        if interval is not None:
            message = f"{message} (valid interval [{interval[0]!r}, {interval[1]!r}])"
        super().__init__(message)
        self.interval = interval


class InsufficientDataError(ArgumentError):
    pass


class PreconditionError(ArgumentError):
    pass


class DataError(SpacingToolkitError):
    exit_code = EXIT_DATA


class ParseError(DataError):
    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class NumericalFailure(SpacingToolkitError, ArithmeticError):
    exit_code = EXIT_NUMERICAL


class DegeneracyError(NumericalFailure):
    """Leading coefficient of a series recurrence is not invertible"""

    def __init__(self, message, order=None, location=None):
        details = []
        if order is not None:
            details.append(f"order {order}")
        if location is not None:
            details.append(f"t={location!r}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)
        self.order = order
        self.location = location


class ContinuationError(NumericalFailure):
    def __init__(self, message, location=None):
        if location is not None:
            message = f"{message} at t={location!r}"
        super().__init__(message)
        self.location = location


class ValidationError(NumericalFailure):
    pass
