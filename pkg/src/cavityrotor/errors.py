"""Exception hierarchy shared by the package."""


class RotorError(Exception):
    """Base class for all errors raised by cavityrotor."""


class ParameterError(RotorError, ValueError):
    """Invalid physical or numerical parameter."""


class CalibrationError(RotorError):
    """Calibration target cannot be reached with the given settings."""

    def __init__(self, message, attainable=None):
        super().__init__(message)
        self.attainable = attainable


class ConvergenceError(RotorError):
    """An iterative or dense solver failed to converge."""


class LocalizationError(RotorError):
    """A state is too delocalized for a line-variable analysis."""


class PhotonFloorError(RotorError):
    """Mean cavity photon number too small for a well-conditioned g2."""


class ConfigError(RotorError):
    """Malformed or inconsistent run configuration."""
