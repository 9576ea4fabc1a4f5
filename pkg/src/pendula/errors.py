"""Exception hierarchy shared by all modules."""


class PendulaError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PendulaError, ValueError):
    """Invalid or inconsistent configuration (bad key, unit, or value)."""


class NoCrossingError(ConfigError):
    """The drive never reaches the avoided crossing (A < |eps0|)."""


class SingularityError(PendulaError, ArithmeticError):
    """A denominator or a magnet separation vanishes (mechanical instability)."""


class DivergenceError(PendulaError, ArithmeticError):
    """Numerical integration produced a non-finite state.

    Parameters
    ----------
    message : str
    time : float, optional
        Simulation time at which the non-finite value appeared.
    """

    def __init__(self, message, time=None):
        if time is not None:
            message = f"{message} (t = {time!r} s)"
        super().__init__(message)
        self.time = time


class ResolutionError(PendulaError, ValueError):
    """A filter or window is too narrow for the sampling grid."""


class DegenerateSignalError(PendulaError, ValueError):
    """A signal is identically zero where a normalization is required."""
