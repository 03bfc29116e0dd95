"""Exception hierarchy shared by all modules."""


class MagbillError(Exception):
    """Base class for every error raised by this package."""


class InvalidStateError(MagbillError):
    """A point or tangent vector violates the model constraints."""


class OutOfChartError(MagbillError):
    """A point lies outside the geodesic polar chart of a frame."""


class ConvexityError(MagbillError):
    """A boundary profile is not strictly convex."""


class ResolutionError(MagbillError):
    """A table build failed its internal consistency checks."""


class AssumptionError(MagbillError):
    """The field strength is not below the minimal boundary curvature."""


class ChordSearchError(MagbillError):
    """Root bracketing for the next boundary hit failed."""


class StepSizeError(MagbillError):
    """A finite-difference neighbourhood leaves the phase cylinder."""


class DomainError(MagbillError, ValueError):
    """An analytic formula was evaluated outside its domain."""


class ConfigError(MagbillError):
    """A run configuration could not be parsed or validated."""
