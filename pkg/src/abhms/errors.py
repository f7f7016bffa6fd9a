"""Exception hierarchy shared by all modules.

The CLI maps ``ValidationError`` to exit code 2 and ``BoxTooLarge`` to exit code 3.
"""

from __future__ import annotations


class AbhmsError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(AbhmsError, ValueError):
    """Input rejected before any computation happened."""


class NotSymmetric(ValidationError):
    pass


class NotPositiveDefinite(ValidationError):
    pass


class NotSymplectic(ValidationError):
    pass


class NotUnimodular(ValidationError):
    pass


class GenusMismatch(ValidationError):
    pass


class ModulusMismatch(ValidationError):
    pass


class LevelNotPositive(ValidationError):
    pass


class LevelOrderViolation(ValidationError):
    pass


class EqualSlopes(ValidationError):
    pass


class RepeatedSlopes(ValidationError):
    pass


class VerticalSlope(ValidationError):
    pass


class SlopeOrderViolation(ValidationError):
    pass


class InvalidSlopeTriple(ValidationError):
    pass


class SingularDenominator(AbhmsError, ArithmeticError):
    """Cτ+D is too ill-conditioned to invert reliably."""


class BoxTooLarge(AbhmsError):
    """The lattice box needed for the requested tolerance exceeds the term cap."""
