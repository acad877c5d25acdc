"""Tuning-parameter selection by the empirical summed-MSE rule.

The sweep fits the model at every grid value of the tuning parameter,
measures each estimate against the pilot (the fit at 1.0) through
squared distance plus the covariance trace over n, and picks the grid
minimizer.  The sweep runs in ascending order with each fit warm-started
from the previous one.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import fitting
from .errors import DpdcountError, TuneError

DEFAULT_GRID = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.75, 1.0)
PILOT_ALPHA = 1.0


def amse(theta_alpha, theta_pilot, cov_alpha, n):
    """Squared distance to the pilot estimate plus trace(cov)/n."""
    theta_alpha = np.asarray(theta_alpha, dtype=float)
    theta_pilot = np.asarray(theta_pilot, dtype=float)
    if theta_alpha.shape != theta_pilot.shape:
        raise ValueError("estimate and pilot dimensions differ")
    if n <= 0:
        raise ValueError("n must be positive")
    diff = theta_alpha - theta_pilot
    return float(diff @ diff + np.trace(np.asarray(cov_alpha)) / n)


@dataclass
class TuneReport:
    """Per-grid-point AMSE values and the selected tuning parameter."""

    grid: list
    amse_values: list          # None where the grid point failed
    alpha_opt: float
    results: dict              # alpha -> FitResult
    failures: list = field(default_factory=list)
    warm_started: bool = True

    def to_dict(self):
        return {
            "grid": [float(a) for a in self.grid],
            "amse_values": [None if v is None else float(v) for v in self.amse_values],
            "alpha_opt": float(self.alpha_opt),
            "failures": [[float(a), str(msg)] for a, msg in self.failures],
            "warm_started": self.warm_started,
            "fits": {f"{a:g}": r.to_dict() for a, r in self.results.items()},
        }


def tune(cfg, data, grid=DEFAULT_GRID, **fit_kwargs):
    """Sweep the tuning-parameter grid and select the AMSE minimizer.

    The grid must contain the pilot value 1.0.  Grid points whose fit
    fails are excluded with a warning; a failed pilot raises TuneError.
    Ties go to the smallest grid value.
    """
    grid = sorted(float(a) for a in grid)
    if not grid:
        raise TuneError("empty tuning grid")
    if PILOT_ALPHA not in grid:
        raise TuneError("tuning grid must contain the pilot value 1.0")

    results = {}
    failures = []
    prev_theta = None
    for a in grid:
        cfg_a = cfg.replace(alpha=a)
        extra = (prev_theta,) if prev_theta is not None else ()
        try:
            res = fitting.fit(cfg_a, data, extra_starts=extra, **fit_kwargs)
        except DpdcountError as exc:
            failures.append((a, str(exc)))
            warnings.warn(f"tuning fit at {a:g} failed: {exc}",
                          RuntimeWarning, stacklevel=2)
            continue
        if not res.converged:
            failures.append((a, "not converged"))
            warnings.warn(f"tuning fit at {a:g} did not converge",
                          RuntimeWarning, stacklevel=2)
            continue
        results[a] = res
        prev_theta = res.theta

    if PILOT_ALPHA not in results:
        raise TuneError("pilot fit at 1.0 failed; cannot compute the tuning rule")
    pilot = results[PILOT_ALPHA]

    values = []
    best_alpha = None
    best_val = np.inf
    for a in grid:
        if a not in results:
            values.append(None)
            continue
        res = results[a]
        val = amse(res.theta, pilot.theta, res.cov, data.n)
        values.append(val)
        if val < best_val:
            best_val = val
            best_alpha = a
    return TuneReport(grid=grid, amse_values=values, alpha_opt=best_alpha,
                      results=results, failures=failures)
