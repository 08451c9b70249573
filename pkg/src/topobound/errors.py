"""Exception types raised across topobound."""


class TopoboundError(Exception):
    """Base class for all library errors."""


class ConfigError(TopoboundError):
    pass


class NonRegularPoint(TopoboundError):
    """Jacobian of the defining polynomials drops rank at a sample."""


class EmptyVariety(TopoboundError):
    """Projection onto an implicit variety produced no samples."""


class EvaluationError(TopoboundError):
    pass


class CodimensionTooLarge(TopoboundError):
    """sigma_k requested for a map with more components than the manifold dimension."""


class SingularMap(TopoboundError):
    """Discriminant distance is zero to working precision."""


class SingularFamily(SingularMap):
    pass


class UnresolvedTopology(TopoboundError):
    """Betti numbers changed between resolution N and 2N."""

    def __init__(self, msg, coarse=None, fine=None):
        super().__init__(msg)
        self.coarse = coarse
        self.fine = fine


class MissingEntry(TopoboundError, KeyError):
    pass


class EmptySuite(TopoboundError):
    pass


class DeltaTooLarge(TopoboundError):
    pass


class RankDeficientBasis(TopoboundError):
    """Only raised when a fit is requested with strict=True."""


class ApproximationTooCoarse(TopoboundError):
    pass


class DegenerateMinor(TopoboundError):
    pass


class BoxTooSmall(TopoboundError):
    pass
