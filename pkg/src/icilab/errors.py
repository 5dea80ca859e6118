"""Exception hierarchy shared by every icilab module."""


class IcilabError(Exception):
    """Base class for all icilab errors."""


class ConfigurationError(IcilabError, ValueError):
    """A configuration value is out of range or inconsistent."""


class InputShapeError(IcilabError, ValueError):
    """An array argument has the wrong length or shape."""


class DegenerateDivisionError(IcilabError, ZeroDivisionError):
    """A differential ratio hit a zero (or numerically vanishing) denominator."""


class FramingError(IcilabError, ValueError):
    """A received sample stream does not match the expected frame layout."""


class EstimatorDivergenceError(IcilabError, RuntimeError):
    """The fiducial-offset estimator blew up; ``trace`` holds the MSE history."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = list(trace)
