"""Exception hierarchy shared by the library and the command-line harness."""


class WaveBCDError(Exception):
    """Base class for all errors raised by :mod:`wavebcd`."""

    exit_code = 1


class ConfigurationError(WaveBCDError, ValueError):
    """Invalid parameter value (family, order, sigma, step factor, ...)."""


class DimensionError(WaveBCDError, ValueError):
    """Array shapes or block layouts do not agree."""


class CapacityError(WaveBCDError, ValueError):
    """Requested dense construction would be too large."""


class DataError(WaveBCDError, ValueError):
    """Malformed or incomplete input data (scores, traces, bench folders)."""

    exit_code = 2


class NumericalError(WaveBCDError, ArithmeticError):
    """An iterative numerical routine did not converge."""

    exit_code = 3

    def __init__(self, message, last_estimate=None):
        super().__init__(message)
        self.last_estimate = last_estimate


class ConvergenceSignal(Exception):
    """Raised by greedy selection rules when every block update is zero.

    Not an error: the current iterate is a fixed point of the
    proximal-gradient map and the caller should stop.
    """
