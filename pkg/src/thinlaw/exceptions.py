"""Exception hierarchy shared by every thinlaw module."""


class ThinlawError(Exception):
    """Base class for all library errors."""


class InvalidParams(ThinlawError, ValueError):
    """A parameter lies outside the domain of the requested operation."""


class InvalidDistribution(InvalidParams):
    """Stored probabilities violate nonnegativity or normalization."""


class InvalidSequence(ThinlawError, ValueError):
    """A renewal / Kaluza input sequence is not admissible."""


class DegenerateConditioning(ThinlawError, ArithmeticError):
    """P(D >= m) is too small for conditioning to be meaningful."""

    def __init__(self, message, *, m=None, mass=None, p=None):
        super().__init__(message)
        self.m = m
        self.mass = mass
        self.p = p


class RatioUndefined(ThinlawError, ZeroDivisionError):
    """A point-probability ratio has a zero denominator."""


class TailUnsampleable(ThinlawError):
    """Sampling needs tail mass that has no analytic continuation."""


class AcceptanceTooLow(ThinlawError):
    """Too few Monte-Carlo draws survived conditioning."""
