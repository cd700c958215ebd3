"""Exception types raised across the package."""


class EffectHistoryError(Exception):
    """Base class for every error raised by :mod:`effhist`."""


class ValidationError(EffectHistoryError, ValueError):
    """Input does not satisfy a precondition (not an effect, bad support, ...)."""


class NumericalError(EffectHistoryError, ArithmeticError):
    """A computation could not be carried out (no convergence, undefined quantity)."""
