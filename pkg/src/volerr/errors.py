"""Exception types shared across the package."""


class VolerrError(Exception):
    """Base class for all volerr errors."""


class InvalidInputError(VolerrError, ValueError):
    """An argument is malformed: wrong sign, non-finite, inconsistent shape."""


class DomainError(VolerrError, ValueError):
    """Inputs are well-formed but outside the mathematical domain of the
    operation (e.g. an option price outside the no-arbitrage band, or a
    non-positive volatility encountered during simulation)."""


class RootBracketError(VolerrError, ArithmeticError):
    """A root finder exhausted its bracket without finding a sign change."""


class InsufficientGridError(VolerrError, ValueError):
    """A grid is too coarse or too incomplete for the requested diagnostic."""


class BumpResolutionError(VolerrError, ArithmeticError):
    """A finite-difference bump is too small relative to floating-point
    noise; the caller should retry with a larger bump."""
