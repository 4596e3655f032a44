"""Exception hierarchy for ggmstruct."""


class GGMError(Exception):
    """Base class for all errors raised by ggmstruct."""


class InvalidSpec(GGMError, ValueError):
    """A model family specification violates its parameter constraints."""


class NotPositiveDefinite(GGMError, ValueError):
    """An assembled precision matrix failed the positive-definiteness check."""


class EmptyGraph(GGMError, ValueError):
    """An operation requiring at least one edge received an empty graph."""


class SingularConditioningSet(GGMError, ValueError):
    """The covariance block of a conditioning set is not invertible."""


class FactorizationFailure(GGMError, ValueError):
    """The covariance matrix could not be factorized for sampling."""


class InsufficientSamples(GGMError, ValueError):
    """Too few samples for the requested estimator."""


class SingularSubmatrix(GGMError, ValueError):
    """A covariance submatrix used in a regression is numerically singular."""


class BoundsTooTight(GGMError, RuntimeError):
    """Branch-and-bound coefficient bounds clipped the true optimum."""


class NoPassingSet(GGMError, RuntimeError):
    """No candidate neighborhood passed the support test for a vertex."""

    def __init__(self, vertex, message=None):
        self.vertex = vertex
        super().__init__(message or f"no candidate neighborhood passed for vertex {vertex}")


class DomainError(GGMError, ValueError):
    """Parameters fall outside the domain where a bound is defined."""


class InvalidConfig(GGMError, ValueError):
    """An experiment configuration is malformed."""
