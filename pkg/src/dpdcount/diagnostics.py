"""Pearson residuals and conditional prediction intervals."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, DomainError


def pearson_residuals(lam, y):
    """(y - lam) / sqrt(lam), elementwise."""
    lam = np.asarray(lam, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(lam <= 0):
        raise DomainError("Pearson residuals need strictly positive means")
    return (y - lam) / np.sqrt(lam)


def residual_mse(residuals, d):
    """Sum of squared residuals over (n - d)."""
    e = np.asarray(residuals, dtype=float)
    if e.size <= d:
        raise DegenerateSample(f"need n > d, got n={e.size}, d={d}")
    return float(np.sum(e * e) / (e.size - d))


def prediction_interval(family, lam, level=0.95):
    """Equal-tail count interval of the conditional pmf at mean ``lam``."""
    if not (0.0 < level < 1.0):
        raise ValueError("level must lie in (0, 1)")
    tail = (1.0 - level) / 2.0
    lo = family.quantile(lam, tail)
    hi = family.quantile(lam, 1.0 - tail)
    return int(lo), int(hi)


@dataclass
class DiagReport:
    """Residual sequence with interval bounds and their empirical coverage."""

    residuals: np.ndarray
    mse: float
    lower: np.ndarray
    upper: np.ndarray
    coverage: float
    level: float = 0.95
    interval_rule: str = "equal-tail"

    def write_csv(self, path, y, lam):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "y", "lambda", "residual", "lower", "upper"])
            for t in range(len(self.residuals)):
                writer.writerow([
                    t + 1, int(y[t]), repr(float(lam[t])),
                    repr(float(self.residuals[t])),
                    int(self.lower[t]), int(self.upper[t]),
                ])


def diagnose(family, lam, y, n_params, level=0.95):
    """Full residual report for a fitted mean path."""
    e = pearson_residuals(lam, y)
    lo = np.empty(len(e), dtype=np.int64)
    hi = np.empty(len(e), dtype=np.int64)
    for t, lt in enumerate(np.asarray(lam, dtype=float)):
        lo[t], hi[t] = prediction_interval(family, lt, level)
    y = np.asarray(y)
    cover = float(np.mean((y >= lo) & (y <= hi)))
    return DiagReport(
        residuals=e,
        mse=residual_mse(e, n_params),
        lower=lo,
        upper=hi,
        coverage=cover,
        level=level,
    )
