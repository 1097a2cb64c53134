"""Exception types raised across the package."""


class InvalidTruncationError(ValueError):
    """Photon truncation outside the supported range."""


class OutOfWindowError(ValueError):
    """A time argument falls outside the window of the requested gate step."""


class InvalidStepError(ValueError):
    """Gate step index not in {1, 2, 3}."""


class UnsupportedConfigurationError(ValueError):
    """Parameters outside the regime a reduced model was derived for."""


class LabelParseError(ValueError):
    """A ket label could not be parsed or is not part of the basis."""


class IntegratorAccuracyError(RuntimeError):
    """Norm or trace drift exceeded the integrator tolerance."""


class SweepError(RuntimeError):
    """A sweep cell failed; partial results are discarded."""
