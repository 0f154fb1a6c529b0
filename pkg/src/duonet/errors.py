"""Exception hierarchy."""


class DuonetError(Exception):
    """Base class for all library errors."""


class ConfigError(DuonetError, ValueError):
    """Invalid solver or CLI configuration."""


class DisconnectedGraph(DuonetError):
    pass


class InvalidEdge(DuonetError, ValueError):
    pass


class DimensionMismatch(DuonetError, ValueError):
    pass


class NoStochasticSupport(DuonetError):
    """An oracle without a sampler was handed to a stochastic routine."""


class NonFiniteIterate(DuonetError, FloatingPointError):
    """A solver iterate became inf/nan; usually L_psi is too small."""


class BatchOverflow(DuonetError):
    """Requested batch size exceeds the configured cap."""


class NotASimplex(DuonetError, ValueError):
    pass


class NonSquareCost(DuonetError, ValueError):
    pass


class TooFewSamples(DuonetError, ValueError):
    pass
