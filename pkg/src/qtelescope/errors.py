"""Exception hierarchy shared across the package."""

from .exactalg import DivisionByZero, EvalPole


class QTelescopeError(Exception):
    pass


class NotSimilar(QTelescopeError):
    """Two terms whose quotient is not a rational function of q**k."""


class NotSymmetrizable(QTelescopeError):
    pass


class NotReconstructible(QTelescopeError):
    pass


class NotFactorable(NotReconstructible):
    """A ratio has a factor that is not linear in x."""


class InvalidSubstitution(QTelescopeError):
    pass


class UnsupportedNegativeK(QTelescopeError):
    pass


class DispersionUndetermined(QTelescopeError):
    pass


class NotSummable(QTelescopeError):
    """The q-Gosper algorithm proved that no antidifference exists."""

    def __init__(self, message: str, diagnostic: str = ""):
        super().__init__(message)
        self.diagnostic = diagnostic


class MultiplierNotFinite(QTelescopeError):
    pass


class ZeroH(QTelescopeError):
    pass


class PairValidationError(QTelescopeError):
    pass


class ConvergenceViolation(QTelescopeError):
    pass


class DuplicateName(QTelescopeError):
    pass


class Cancelled(QTelescopeError):
    pass


__all__ = [
    "DivisionByZero",
    "EvalPole",
    "QTelescopeError",
    "NotSimilar",
    "NotSymmetrizable",
    "NotReconstructible",
    "NotFactorable",
    "InvalidSubstitution",
    "UnsupportedNegativeK",
    "DispersionUndetermined",
    "NotSummable",
    "MultiplierNotFinite",
    "ZeroH",
    "PairValidationError",
    "ConvergenceViolation",
    "DuplicateName",
    "Cancelled",
]
