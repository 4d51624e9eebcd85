"""Exception taxonomy shared by all hessianlab modules."""


class HessianLabError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParams(HessianLabError):
    """A constructor or operation received malformed parameters."""


class ConfigError(HessianLabError):
    """A run configuration file could not be parsed or validated."""


class PointOutsideDomain(HessianLabError):
    """An evaluation point lies outside the (open) domain of a field."""


class InsufficientMargin(PointOutsideDomain):
    """A grid evaluation point is too close to the grid edge for the stencil."""


class OrderUnsupported(HessianLabError):
    """A jet order was requested that the representation cannot provide."""


class InsufficientJetOrder(HessianLabError):
    """An operation needs higher derivatives than the supplied jet carries."""


class HessianNotPositiveDefinite(HessianLabError):
    """The Hessian at an evaluation point failed the positivity check."""


class UncertifiedWeights(HessianLabError):
    """An operation requiring certified weight data got a field without it."""


class RefinedFormMismatch(HessianLabError):
    """Refined and general forms of a curvature quantity disagreed on a
    field whose weights are certified; indicates a bad certification."""


class NonConvexIterate(HessianLabError):
    """The damped Newton iteration could not restore a convex iterate."""


class MaxIterationsExceeded(HessianLabError):
    """The nonlinear solve did not meet tolerance within the iteration cap."""


class SingularLinearSystem(HessianLabError):
    """A linearized system was singular or produced non-finite values."""


class DegenerateSampleSet(HessianLabError):
    """A least-squares fit received samples that do not determine the model."""


class GeodesicIntegrationFailure(HessianLabError):
    """A geodesic integration step produced non-finite or unusable state."""


class InvalidRange(HessianLabError):
    """A scan or cutoff received an empty or ill-ordered parameter range."""
