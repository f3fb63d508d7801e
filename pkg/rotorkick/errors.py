from typing import Optional


class RotorKickError(Exception):
    """Base exception class for rotorkick errors."""
    pass

class ValidationError(RotorKickError):
    """Errors related to invalid inputs or broken preconditions"""
    def __init__(self, message):
        super().__init__(message)

class ConfigError(ValidationError):
    """Errors raised while reading a scenario or config file.

    Attributes:
        key: The configuration key the error refers to, when there is one.
    """
    def __init__(self, message: str, key: Optional[str] = None) -> None:
        super().__init__(message)
        self.key: Optional[str] = key

class DimensionMismatchError(ValidationError):
    """A state and an operator (or two operators) live in different bases"""
    def __init__(self, message):
        super().__init__(message)

class NotNormalizedError(ValidationError):
    """A state vector whose norm deviates from one"""
    def __init__(self, message):
        super().__init__(message)

class NotAtExtremumError(ValidationError):
    """The slope formulas were asked about a state that is not at a free-evolution extremum"""
    def __init__(self, message):
        super().__init__(message)

class StationaryTargetError(ValidationError):
    """The observable does not change while the target evolves freely"""
    def __init__(self, message):
        super().__init__(message)

class NumericalError(RotorKickError):
    """Errors raised when a numerical procedure cannot produce a trustworthy result"""
    def __init__(self, message):
        super().__init__(message)

class DegenerateSpectrumError(NumericalError):
    """The extremal eigenvalue of an observable is degenerate"""
    def __init__(self, message):
        super().__init__(message)

class EstimateUndefinedError(NumericalError):
    """An analytic inter-pulse estimate has a vanishing denominator"""
    def __init__(self, message):
        super().__init__(message)

class RankInstabilityError(NumericalError):
    """A numerical rank changes when its tolerance is scaled by ten"""
    def __init__(self, message):
        super().__init__(message)

class MonotonicityError(NumericalError):
    """Efficiency or duration in a scan does not move in the expected direction"""
    def __init__(self, message):
        super().__init__(message)

class FilesystemError(RotorKickError):
    """Errors related to file system operations"""
    def __init__(self, message):
        super().__init__(message)

class FixedPointSignal(RotorKickError):
    """Raised when a search signal offers no maximum to move to.

    This marks a fixed point of the kick strategy (a stationary signal, or a
    state that already coincides with the target) rather than a failure.

    Attributes:
        value: The value of the signal at the current state.
    """
    def __init__(self, message: str, value: Optional[float] = None) -> None:
        super().__init__(message)
        self.value: Optional[float] = value
