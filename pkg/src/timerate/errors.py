"""Exception types shared across the package."""


class TimeRateError(Exception):
    """Base class for all package errors."""


class ValidationError(TimeRateError):
    """A problem, time-constraint set or spec file violates an invariant."""

    def __init__(self, message, issues=None):
        super().__init__(message)
        self.issues = list(issues or [message])


class SpecParseError(ValidationError):
    """Malformed network-spec file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedPhaseStructure(TimeRateError):
    """No shipped capacity oracle covers the demand pattern of a phase problem."""


class UnsupportedChannel(TimeRateError):
    """Channel is outside the class a routine can handle."""


class ResourceCapExceeded(TimeRateError):
    """A combinatorial construction or grid would exceed its configured cap."""


class RateBudgetError(TimeRateError):
    """Requested rates do not fit the symbol budget of a phase."""


class ConstructionError(TimeRateError):
    """An internal consistency check on a constructed object failed."""
