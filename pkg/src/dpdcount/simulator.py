"""Simulators for count series with covariate drivers and outliers.

Covariates come from an ARCH(1) driver, independent AR(1) drivers, or
are absent.  The count recursion runs exactly (full history, no
truncation) from a stationary-mean start, and a burn-in prefix is
discarded.  Contamination adds an independent Bernoulli-gated count
outlier to each observation, leaving covariates untouched.  Everything
is deterministic given the seeds; replication substreams are derived
from (seed, replication) tuples.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset
from .errors import ExplosionError, InfeasibleParams
from .meanmodel import LinearIngarchX, OneKnot, apply_transforms, knot_term

EXPLOSION_LIMIT = 1e9


@dataclass(frozen=True)
class Arch1Driver:
    """X_t = sigma_t Z_t with sigma_t^2 = omega0 + omega1 X_{t-1}^2."""

    omega0: float
    omega1: float = 0.0

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if not (0.0 <= self.omega1 < 1.0):
            raise ValueError("omega1 must lie in [0, 1) for stationarity")

    d_x = 1

    def path(self, rng, total):
        z = rng.standard_normal(total)
        x = np.empty(total)
        prev = math.sqrt(self.omega0 / (1.0 - self.omega1)) * rng.standard_normal()
        for t in range(total):
            sig = math.sqrt(self.omega0 + self.omega1 * prev * prev)
            prev = sig * z[t]
            x[t] = prev
        return x[:, None]


@dataclass(frozen=True)
class Ar1Driver:
    """Independent AR(1) columns with Gaussian innovations."""

    phis: tuple
    sd: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "phis", tuple(float(p) for p in self.phis))
        if not self.phis or not all(0.0 < p < 1.0 for p in self.phis):
            raise ValueError("each AR coefficient must lie in (0, 1)")
        if self.sd <= 0:
            raise ValueError("innovation sd must be positive")

    @property
    def d_x(self):
        return len(self.phis)

    def path(self, rng, total):
        cols = []
        for phi in self.phis:
            eps = self.sd * rng.standard_normal(total)
            x = np.empty(total)
            prev = self.sd / math.sqrt(1.0 - phi * phi) * rng.standard_normal()
            for t in range(total):
                prev = phi * prev + eps[t]
                x[t] = prev
            cols.append(x)
        return np.column_stack(cols)


def drive_arch1(n, omega0, omega1, seed, burn_in=500):
    """Standalone ARCH(1) covariate column of length n."""
    drv = Arch1Driver(omega0, omega1)
    rng = np.random.default_rng(seed)
    return drv.path(rng, n + burn_in)[burn_in:, 0]


def drive_ar1(n, phi, sd, seed, burn_in=500):
    """Standalone AR(1) covariate column of length n."""
    drv = Ar1Driver((phi,), sd)
    rng = np.random.default_rng(seed)
    return drv.path(rng, n + burn_in)[burn_in:, 0]


@dataclass
class SimSpec:
    """Generating configuration: model + family + true parameters."""

    model: object
    family: object
    theta: np.ndarray
    driver: object = None
    n: int = 1000
    burn_in: int = 500
    seed: object = 0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.burn_in < 100:
            raise ValueError("burn_in must be at least 100")
        d_x = self.driver.d_x if self.driver is not None else 0
        if d_x != self.model.d_x:
            raise ValueError(
                f"driver provides {d_x} covariates, model expects {self.model.d_x}"
            )
        self.validate_theta()

    def validate_theta(self):
        th = self.theta
        if th.shape != (self.model.dim,):
            raise InfeasibleParams(
                f"theta has {th.size} entries, model needs {self.model.dim}"
            )
        if th[0] <= 0:
            raise InfeasibleParams("intercept must be positive")
        if np.any(th < 0):
            raise InfeasibleParams("all coefficients must be nonnegative")
        s = float(np.sum(th[list(self.model.stationarity_idx)]))
        if s >= 1.0:
            raise InfeasibleParams(
                f"lag coefficients sum to {s:.3f} >= 1; the mean recursion "
                "would not be stationary"
            )


def simulate(spec):
    """Generate a dataset; the true mean path rides along as ``lam``."""
    model = spec.model
    th = spec.theta
    total = spec.n + spec.burn_in
    ss = np.random.SeedSequence(spec.seed)
    rng_x, rng_y = [np.random.default_rng(c) for c in ss.spawn(2)]

    if spec.driver is not None:
        x_raw = spec.driver.path(rng_x, total)
        x_tr = apply_transforms(x_raw, model.transforms)
    else:
        x_raw = np.zeros((total, 0))
        x_tr = x_raw

    one_knot = isinstance(model, OneKnot)
    q = 1 if one_knot else model.q
    p = 1 if one_knot else model.p
    a_lags = th[1:1 + q]
    b_lags = th[1 + q:1 + q + p]
    gammas = th[1 + q + p:]

    s = float(np.sum(th[list(model.stationarity_idx)]))
    lam0 = th[0] / (1.0 - s)

    y = np.zeros(total, dtype=np.int64)
    lam = np.empty(total)
    lam_hist = [lam0] * p
    y_hist = [0.0] * q

    for t in range(total):
        lt = th[0]
        for k in range(q):
            lt += a_lags[k] * y_hist[k]
        for j in range(p):
            lt += b_lags[j] * lam_hist[j]
        if one_knot and t >= 1:
            lt += th[3] * float(knot_term(int(y[t - 1]), model.knot))
        elif gammas.size and t >= 1:
            lt += float(gammas @ x_tr[t - 1])
        if not np.isfinite(lt) or lt > EXPLOSION_LIMIT:
            raise ExplosionError(
                f"simulated mean exceeded {EXPLOSION_LIMIT:g} at step {t}"
            )
        lam[t] = lt
        y[t] = spec.family.sample(rng_y, lt)
        if q:
            y_hist = [float(y[t])] + y_hist[:-1]
        if p:
            lam_hist = [lt] + lam_hist[:-1]

    keep = slice(spec.burn_in, total)
    return Dataset(
        y=y[keep],
        x=x_raw[keep],
        name="simulated",
        seed=spec.seed,
        lam=lam[keep].copy(),
    )


@dataclass(frozen=True)
class PoissonOutliers:
    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("outlier mean must be positive")

    def sample(self, rng, size):
        return rng.poisson(self.mu, size=size)


@dataclass(frozen=True)
class NegBinomialOutliers:
    r: float
    p: float

    def __post_init__(self):
        if self.r <= 0 or not (0.0 < self.p < 1.0):
            raise ValueError("need r > 0 and p in (0, 1)")

    def sample(self, rng, size):
        return rng.negative_binomial(self.r, self.p, size=size)


@dataclass
class ContamSpec:
    """Additive outliers: y + indicator * outlier draw."""

    p: float
    law: object
    seed: object = 0

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("contamination probability must lie in [0, 1]")


def contaminate(data, c):
    """Contaminated copy of a dataset; counts never decrease."""
    rng = np.random.default_rng(c.seed)
    hit = rng.random(data.n) < c.p
    bump = c.law.sample(rng, data.n)
    y_c = data.y + hit * bump
    return Dataset(y=y_c, x=data.x.copy(), name=data.name, seed=data.seed,
                   lam=None if data.lam is None else data.lam.copy())


def rep_seed(base_seed, rep, stream):
    """Deterministic substream key for replication ``rep``."""
    return [int(base_seed), int(rep), int(stream)]


def rep_dataset(spec, contam, base_seed, rep):
    """Simulate (and optionally contaminate) replication ``rep``."""
    data = simulate(replace(spec, seed=rep_seed(base_seed, rep, 0)))
    if contam is not None:
        cc = ContamSpec(p=contam.p, law=contam.law,
                        seed=rep_seed(base_seed, rep, 1))
        data = contaminate(data, cc)
    return data
