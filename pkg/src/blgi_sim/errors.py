"""Exception hierarchy.

Every exception carries a short machine-readable ``category`` used by the
CLI when reporting failures.
"""


class BlgiError(Exception):
    category = "error"


class InvalidArgumentError(BlgiError, ValueError):
    category = "invalid-argument"


class ConfigError(BlgiError, ValueError):
    category = "config"


class CalibrationError(BlgiError, ValueError):
    category = "calibration"


class SingularCalibrationError(CalibrationError):
    """Calibration requested at zero measurement strength."""


class DegenerateCalibrationError(CalibrationError):
    """Measured |0>-state trace is not positive, so it cannot be normalized."""
