"""Exception hierarchy shared by all modules.

``ConfigError`` subclasses map to CLI exit code 2, ``NumericalError``
subclasses to exit code 3.
"""


class EneError(Exception):
    pass


class ConfigError(EneError, ValueError):
    pass


class NumericalError(EneError, RuntimeError):
    pass


# geometry
class InvalidGeometry(ConfigError):
    pass


class ResolutionTooCoarse(ConfigError):
    pass


# fieldsolver
class NoConvergence(NumericalError):
    def __init__(self, iterations, residual, message=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            message or f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )


class HeightUnresolvable(ConfigError):
    pass


class EmptyRegion(NumericalError):
    pass


# resonator
class InvalidCapacitance(NumericalError):
    pass


# morphology
class ParseError(ConfigError):
    pass


class TooFewSamples(ConfigError):
    pass


class DomainTooShort(ConfigError):
    pass


# trapstates
class GridTooCoarse(NumericalError):
    pass


class NoBoundState(NumericalError):
    pass


class NotEnoughBoundStates(NumericalError):
    pass


# spectroscopy
class FitDiverged(NumericalError):
    pass


class InsufficientSpan(ConfigError):
    pass


class NoCrossingInRange(NumericalError):
    pass


class SweepPointError(NumericalError):
    """A solver failure annotated with the sweep point that raised it."""

    def __init__(self, point, cause):
        self.point = point
        self.cause = cause
        super().__init__(f"sweep point {point}: {cause}")
