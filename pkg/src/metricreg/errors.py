"""Exception types raised across the package."""


class MetricRegError(Exception):
    """Base class for all package errors."""


class NumericalFailure(MetricRegError):
    pass


class NotPositiveDefinite(MetricRegError):
    pass


class DimensionError(MetricRegError, ValueError):
    pass


class DomainError(MetricRegError, ValueError):
    pass


class EmptyStore(MetricRegError):
    pass


class InvalidExample(MetricRegError, ValueError):
    """A labeled example is NaN, outside the unit ball, or has a label outside [0, 1]."""

    def __init__(self, message, round_index=None, phase=None):
        super().__init__(message)
        self.round_index = round_index
        self.phase = phase


class SpecError(MetricRegError, ValueError):
    pass


class AlignmentError(MetricRegError, ValueError):
    pass
