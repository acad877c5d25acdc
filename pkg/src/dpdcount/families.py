"""One-parameter exponential-family conditional distributions.

Poisson, negative binomial with known dispersion, and Bernoulli, all
parameterized by their conditional mean.  Each family exposes the
natural-parameter maps (mean <-> natural parameter, conditional variance
and its derivative) together with the truncated power sums that the
divergence objective needs.  Infinite sums over the support are truncated
where the remaining pmf tail mass drops below ``tail_mass``; because the
powered pmf is dominated by the pmf itself, the same truncation point is
valid for every power sum.
"""

import math

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, TruncationError

DEFAULT_TAIL_MASS = 1e-12
DEFAULT_CAP = 100_000


class Family:
    """Base class for a mean-parameterized discrete exponential family.

    Parameters
    ----------
    tail_mass : float
        Pmf mass allowed beyond the truncated support, in (0, 1e-6].
    cap : int
        Hard upper bound on the truncated support, at least 1000.
    """

    code = -1  # integer tag used by the compiled kernels
    name = "family"
    r = 0.0    # dispersion slot, only meaningful for the negative binomial

    def __init__(self, tail_mass=DEFAULT_TAIL_MASS, cap=DEFAULT_CAP):
        if not (0.0 < tail_mass <= 1e-6):
            raise ValueError(f"tail_mass must be in (0, 1e-6], got {tail_mass}")
        if cap < 1000:
            raise ValueError(f"cap must be >= 1000, got {cap}")
        self.tail_mass = float(tail_mass)
        self.cap = int(cap)

    def __repr__(self):
        return f"{self.__class__.__name__}(tail_mass={self.tail_mass}, cap={self.cap})"

    # -- mean domain ---------------------------------------------------

    def mean_domain(self):
        """Open interval of admissible conditional means."""
        raise NotImplementedError

    def check_mean(self, lam):
        lo, hi = self.mean_domain()
        arr = np.asarray(lam, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr <= lo) or np.any(arr >= hi):
            raise DomainError(
                f"mean outside {self.name} domain ({lo}, {hi}): {lam!r}"
            )

    def check_count(self, y):
        arr = np.asarray(y)
        if np.any(arr < 0) or not np.all(np.equal(np.mod(arr, 1), 0)):
            raise DomainError(f"counts must be nonnegative integers: {y!r}")

    # -- natural-parameter maps ----------------------------------------

    def natural(self, lam):
        """Natural parameter as a function of the mean (inverse mean map)."""
        raise NotImplementedError

    def mean(self, eta):
        """Mean as a function of the natural parameter."""
        raise NotImplementedError

    def variance(self, eta):
        """Conditional variance (derivative of the mean map)."""
        raise NotImplementedError

    def dvariance(self, eta):
        """Derivative of the conditional variance in the natural parameter."""
        raise NotImplementedError

    def var_at_mean(self, lam):
        """Conditional variance evaluated at mean ``lam``."""
        return self.variance(self.natural(lam))

    def curvature_ratio(self, lam):
        """dvariance / variance**3 at mean ``lam``.

        This is the quantity whose boundedness the estimation theory
        requires; it also enters the analytic derivative of the score
        factor.
        """
        eta = self.natural(lam)
        v = self.variance(eta)
        return self.dvariance(eta) / v**3

    # -- pmf -----------------------------------------------------------

    def log_pmf(self, y, lam):
        """Log pmf at count ``y`` under mean ``lam``."""
        self.check_mean(lam)
        self.check_count(y)
        return self._log_pmf_unchecked(np.asarray(y, dtype=float), np.asarray(lam, dtype=float))

    def _log_pmf_unchecked(self, y, lam):
        raise NotImplementedError

    def sample(self, rng, lam):
        """Draw one variate per entry of ``lam``."""
        raise NotImplementedError

    # -- truncated support and power sums --------------------------------

    def _grid_pmf(self, lam):
        """Pmf over ``0..y_max`` for scalar ``lam``.

        ``y_max`` is the smallest count whose upper-tail mass is below
        ``tail_mass``; raises TruncationError if ``cap`` is reached first.
        """
        self.check_mean(lam)
        lam = float(lam)
        if lam > self.cap:
            raise TruncationError(
                f"mean {lam} exceeds the truncation cap {self.cap}"
            )
        var = self.var_at_mean(lam)
        hi = int(min(self.cap, math.ceil(lam + 12.0 * math.sqrt(var) + 50.0)))
        while True:
            grid = np.arange(hi + 1, dtype=float)
            pmf = np.exp(self._log_pmf_unchecked(grid, lam))
            cdf = np.cumsum(pmf)
            idx = int(np.searchsorted(cdf, 1.0 - self.tail_mass, side="right"))
            if idx <= hi:
                return pmf[: idx + 1], idx
            if hi >= self.cap:
                raise TruncationError(
                    f"support cap {self.cap} reached before tail mass "
                    f"{self.tail_mass} at mean {lam}"
                )
            hi = min(self.cap, 2 * hi + 50)

    def truncated_support(self, lam):
        """Largest count kept in the truncated support at mean ``lam``."""
        _, ymax = self._grid_pmf(lam)
        return ymax

    def power_sum(self, lam, alpha):
        """Sum of pmf**(1+alpha) over the truncated support."""
        if alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {alpha}")
        pmf, _ = self._grid_pmf(lam)
        return float(np.sum(pmf ** (1.0 + alpha)))

    def weighted_moment_sum(self, lam, alpha):
        """Sum of (y - lam) * pmf**(1+alpha) over the truncated support."""
        if alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {alpha}")
        pmf, ymax = self._grid_pmf(lam)
        dev = np.arange(ymax + 1, dtype=float) - float(lam)
        return float(np.sum(dev * pmf ** (1.0 + alpha)))

    def power_moment_sums(self, lam, alpha):
        """Zeroth, first and second centered moments of pmf**(1+alpha).

        Returns (S, W, Q) with S = sum g^(1+a), W = sum (y-lam) g^(1+a),
        Q = sum (y-lam)^2 g^(1+a), all over the truncated support.
        """
        if alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {alpha}")
        pmf, ymax = self._grid_pmf(lam)
        dev = np.arange(ymax + 1, dtype=float) - float(lam)
        gp = pmf ** (1.0 + alpha)
        return float(np.sum(gp)), float(np.sum(dev * gp)), float(np.sum(dev * dev * gp))

    def quantile(self, lam, q):
        """Smallest count whose cdf reaches ``q``."""
        pmf, ymax = self._grid_pmf(lam)
        cdf = np.cumsum(pmf)
        idx = int(np.searchsorted(cdf, q, side="left"))
        return min(idx, ymax)


class Poisson(Family):
    code = 0
    name = "poisson"

    def mean_domain(self):
        return (0.0, math.inf)

    def natural(self, lam):
        self.check_mean(lam)
        return np.log(lam)

    def mean(self, eta):
        return np.exp(eta)

    def variance(self, eta):
        return np.exp(eta)

    def dvariance(self, eta):
        return np.exp(eta)

    def _log_pmf_unchecked(self, y, lam):
        return y * np.log(lam) - lam - gammaln(y + 1.0)

    def sample(self, rng, lam):
        return rng.poisson(lam)


class NegBinomial(Family):
    """Negative binomial with known dispersion ``r``.

    The mean is r(1-p)/p, so the success probability at mean ``lam`` is
    p = r/(r+lam); ``r`` is a fixed model input, never estimated.
    """

    code = 1
    name = "negbinomial"

    def __init__(self, r, tail_mass=DEFAULT_TAIL_MASS, cap=DEFAULT_CAP):
        super().__init__(tail_mass=tail_mass, cap=cap)
        if not (r > 0 and math.isfinite(r)):
            raise ValueError(f"dispersion r must be positive, got {r}")
        self.r = float(r)

    def __repr__(self):
        return f"NegBinomial(r={self.r}, tail_mass={self.tail_mass}, cap={self.cap})"

    def mean_domain(self):
        return (0.0, math.inf)

    def natural(self, lam):
        self.check_mean(lam)
        lam = np.asarray(lam, dtype=float)
        return np.log(lam) - np.log(self.r + lam)

    def mean(self, eta):
        eta = np.asarray(eta, dtype=float)
        if np.any(eta >= 0):
            raise DomainError(f"negative-binomial natural parameter must be < 0: {eta!r}")
        u = np.exp(eta)
        return self.r * u / (1.0 - u)

    def variance(self, eta):
        b = self.mean(eta)
        return b * (1.0 + b / self.r)

    def dvariance(self, eta):
        b = self.mean(eta)
        return b * (1.0 + b / self.r) * (1.0 + 2.0 * b / self.r)

    def _log_pmf_unchecked(self, y, lam):
        r = self.r
        log_p = np.log(r) - np.log(r + lam)
        log_1mp = np.log(lam) - np.log(r + lam)
        return gammaln(y + r) - gammaln(r) - gammaln(y + 1.0) + r * log_p + y * log_1mp

    def sample(self, rng, lam):
        p = self.r / (self.r + lam)
        return rng.negative_binomial(self.r, p)


class Bernoulli(Family):
    code = 2
    name = "bernoulli"

    def mean_domain(self):
        return (0.0, 1.0)

    def check_count(self, y):
        arr = np.asarray(y)
        if not np.all(np.isin(arr, (0, 1))):
            raise DomainError(f"Bernoulli counts must lie in {{0, 1}}: {y!r}")

    def natural(self, lam):
        self.check_mean(lam)
        lam = np.asarray(lam, dtype=float)
        return np.log(lam) - np.log1p(-lam)

    def mean(self, eta):
        eta = np.asarray(eta, dtype=float)
        return 1.0 / (1.0 + np.exp(-eta))

    def variance(self, eta):
        b = self.mean(eta)
        return b * (1.0 - b)

    def dvariance(self, eta):
        b = self.mean(eta)
        return b * (1.0 - b) * (1.0 - 2.0 * b)

    def _log_pmf_unchecked(self, y, lam):
        return np.where(y == 1, np.log(lam), np.log1p(-lam))

    def sample(self, rng, lam):
        return (rng.random(size=np.shape(lam) or None) < lam).astype(np.int64)

    def _grid_pmf(self, lam):
        self.check_mean(lam)
        lam = float(lam)
        return np.array([1.0 - lam, lam]), 1


def family_from_spec(kind, r=None, tail_mass=DEFAULT_TAIL_MASS, cap=DEFAULT_CAP):
    """Build a family from its string tag; used by the CLI and JSON configs."""
    kind = kind.lower()
    if kind == "poisson":
        return Poisson(tail_mass=tail_mass, cap=cap)
    if kind in ("negbinomial", "nb"):
        if r is None:
            raise ValueError("negative binomial requires the dispersion r")
        return NegBinomial(r, tail_mass=tail_mass, cap=cap)
    if kind == "bernoulli":
        return Bernoulli(tail_mass=tail_mass, cap=cap)
    raise ValueError(f"unknown family kind: {kind}")
