"""Exception hierarchy for dpdcount."""


class DpdcountError(Exception):
    """Base class for all library errors."""


class DomainError(DpdcountError):
    """A mean, count or natural parameter lies outside the family's domain."""


class TruncationError(DpdcountError):
    """The support cap was reached before the tail-mass bound was met."""


class InfeasibleParams(DpdcountError):
    """Parameter vector violates the feasible box."""


class NonConvergence(DpdcountError):
    """Optimizer hit its iteration cap without meeting the tolerances."""


class SingularInformation(DpdcountError):
    """The estimated curvature matrix is numerically singular."""


class GridEmpty(DpdcountError):
    """Knot grid is empty (degenerate data)."""


class TuneError(DpdcountError):
    """Tuning sweep cannot produce a pilot estimate."""


class ScenarioUnstable(DpdcountError):
    """Too many Monte Carlo replications failed to fit."""


class ExplosionError(DpdcountError):
    """Simulated mean recursion diverged."""


class DegenerateSample(DpdcountError):
    """Sample too small for the requested statistic."""


class ParseError(DpdcountError):
    """Malformed dataset file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NegativeCount(ParseError):
    """A count column contains a negative value."""


class NonFiniteCovariate(ParseError):
    """A covariate column contains a non-finite value."""
