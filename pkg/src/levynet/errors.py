"""Exception types raised across the package."""


class LevyNetError(Exception):
    """Base class for package errors."""


class MomentDiverges(LevyNetError):
    pass


class NotSimulable(LevyNetError):
    pass


class SectorViolation(LevyNetError):
    pass


class DampingFailure(LevyNetError):
    pass


class DimensionMismatch(LevyNetError):
    pass


class LayerMismatch(LevyNetError):
    pass


class OutputDimMismatch(LevyNetError):
    pass


class ParseError(LevyNetError):
    """Malformed network document; `location` points at the offending entry."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class AttemptsExhausted(LevyNetError):
    def __init__(self, message: str, best_error: float, best=None):
        self.best_error = best_error
        self.best = best
        super().__init__(message)


class DimensionTooLarge(LevyNetError):
    pass


class RhoTooSmall(LevyNetError):
    pass


class Diverges(LevyNetError):
    pass


class SingularFit(LevyNetError):
    pass


class ConfigError(LevyNetError):
    def __init__(self, message: str, key_path: str = ""):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)
