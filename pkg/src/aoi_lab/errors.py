"""Exception hierarchy.

Every domain error carries a message naming the violated precondition so the
CLI can print it verbatim without a traceback.
"""


class AoIError(Exception):
    """Base class for all domain errors raised by aoi_lab."""


class ParameterError(AoIError, ValueError):
    """A distribution or queue parameter is outside its valid range."""


class StabilityError(AoIError):
    """A single-server FCFS queue was evaluated with lambda >= mu."""


class InfiniteMomentError(AoIError):
    """A formula needs a second moment that is infinite."""


class QuadratureError(AoIError, ArithmeticError):
    """Numerical integration failed to reach its tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved abs error {achieved:.3g})")
        self.achieved = achieved


class BracketError(AoIError, ArithmeticError):
    """The fixed-point bracket does not straddle a root."""


class UnsupportedError(AoIError):
    """No closed form or semi-numeric method covers the requested queue."""


class ConfigError(AoIError):
    """A simulation or CLI configuration is inconsistent."""
