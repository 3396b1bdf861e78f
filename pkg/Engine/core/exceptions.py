"""
Exception hierarchy for the bounds engine.
"""

from typing import Optional


class BoundsError(Exception):
    """Base class for every error raised by the engine."""


class DomainError(BoundsError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class SingularityError(DomainError):
    """Evaluation requested at a singular point (e.g. w_hat at p = 0)."""


class NonIntegrableError(BoundsError):
    """The potential (or a weighted version of it) is not integrable."""


class InfiniteScatteringLengthError(BoundsError):
    """The potential is not integrable at infinity, so a is infinite."""


class ToleranceError(BoundsError, RuntimeError):
    """A solver or quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: Optional[float] = None, requested: Optional[float] = None):
        super().__init__(message)
        self.achieved = achieved
        self.requested = requested


class RegimeError(BoundsError):
    """Parameters lie outside the regime where a bound is certified."""

    def __init__(self, message: str, factor: Optional[str] = None):
        super().__init__(message)
        self.factor = factor


class DensityTooHighError(RegimeError):
    """Density so large that the trial-state normalisation breaks down."""


class GeometryError(BoundsError):
    """Length scales violate a geometric precondition (e.g. R >= L/2)."""


class TempleGapError(BoundsError):
    """The Temple gap G(N, L) is not positive."""


class InfeasibleError(BoundsError):
    """Constraints cannot be satisfied."""


class HypothesisError(BoundsError):
    """A lemma hypothesis on the inputs is violated."""


class DivergentMomentError(BoundsError):
    """Requested momentum moment of w_hat diverges."""


class FockSizeError(BoundsError):
    """Truncated Fock basis exceeds the configured budget."""


class ModeError(BoundsError):
    """Mode label not present in the mode set."""


class ExtrapolationError(BoundsError):
    """Evaluation point lies outside the tabulated grid."""


class ReportError(BoundsError):
    """Report emission precondition violated."""
