"""Exception hierarchy shared across the library."""


class TransientLabError(Exception):
    """Base class for all library-specific errors."""


class OutOfSupport(TransientLabError):
    """Evaluation requested outside a sampled signal's grid."""


class QuadratureFailure(TransientLabError):
    """A quadrature node evaluated to a non-finite value."""


class SignalVanished(TransientLabError):
    """Too few tail samples above the magnitude floor to fit anything."""


class NonDecaying(TransientLabError):
    """The fitted tail slope is non-negative; the signal does not decay."""


class Diverging(TransientLabError):
    """The reweighted tail grows, indicating an overestimated decay rate."""


class RateCollision(TransientLabError):
    """A newly estimated rate duplicates one already extracted."""


class RankDeficient(TransientLabError):
    """The linear-prediction system has no usable rank."""


class GammaPole(TransientLabError):
    """A gamma-function argument hit a non-positive integer."""
