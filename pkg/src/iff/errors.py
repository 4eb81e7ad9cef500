"""Exception types shared across the package."""


class IFFError(Exception):
    """Base class for package-specific failures."""


class InsufficientMeasurementsError(IFFError, ValueError):
    """Fewer illumination patterns than sources (T < n)."""


class InsufficientSamplesError(IFFError, ValueError):
    """Not enough frequency samples left to form the requested Hankel matrix."""


class FilterTooLongError(IFFError, ValueError):
    """Annihilating filter degree exceeds the available row length."""


class DegenerateCombinationError(IFFError, ArithmeticError):
    """A Hankel combination collapsed to (numerically) zero, where the
    focusing objective is undefined."""
