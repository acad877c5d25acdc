"""Density power divergence objective, analytic derivatives, divergence.

The estimation objective averages per-observation losses along the
fitted mean path; for tuning parameter a > 0 the loss is
sum_y g(y)^(1+a) - (1 + 1/a) g(Y_t)^a, and for a = 0 it is the negative
conditional log-likelihood (a genuinely separate code path, as the
divergence is defined piecewise).  Derivatives in theta factor through
the mean: d(loss)/d(theta) = h * d(mean)/d(theta) where h is the score
factor, and the Hessian adds the mean-derivative outer product weighted
by m = dh/d(mean).  Both h and m are closed forms obtained by
differentiating the truncated sums term by term.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _backend, meanmodel
from .errors import DomainError

PER_OBS_BOUND_SLACK = 1e-9


@dataclass
class DpdConfig:
    """Everything needed to evaluate the objective on a dataset."""

    alpha: float
    family: object
    model: object
    box: object = field(default_factory=meanmodel.ParamBox)
    lam_init: object = "alpha0"
    alpha_max: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.alpha <= self.alpha_max):
            raise ValueError(
                f"alpha must lie in [0, {self.alpha_max}], got {self.alpha}"
            )

    def replace(self, **kw):
        from dataclasses import replace

        return replace(self, **kw)


def per_obs_loss(cfg, lam, y):
    """Loss contribution of a single observation at mean ``lam``."""
    fam = cfg.family
    fam.check_mean(lam)
    fam.check_count(y)
    a = cfg.alpha
    if a == 0.0:
        return float(-fam.log_pmf(y, lam))
    val = fam.power_sum(lam, a) - (1.0 + 1.0 / a) * float(
        np.exp(a * fam.log_pmf(y, lam))
    )
    assert abs(val) <= 2.0 + 1.0 / a + PER_OBS_BOUND_SLACK
    return float(val)


def score_factor(cfg, lam, y):
    """Derivative of the per-observation loss in the mean."""
    fam = cfg.family
    fam.check_mean(lam)
    fam.check_count(y)
    a = cfg.alpha
    v = float(fam.var_at_mean(lam))
    if a == 0.0:
        return (float(lam) - float(y)) / v
    w = fam.weighted_moment_sum(lam, a)
    gya = float(np.exp(a * fam.log_pmf(y, lam)))
    return (1.0 + a) * (w - (float(y) - float(lam)) * gya) / v


def score_factor_deriv(cfg, lam, y):
    """Derivative of the score factor in the mean (closed form)."""
    fam = cfg.family
    fam.check_mean(lam)
    fam.check_count(y)
    a = cfg.alpha
    lam = float(lam)
    yv = float(y)
    v = float(fam.var_at_mean(lam))
    brat = float(fam.curvature_ratio(lam))
    if a == 0.0:
        return brat * (yv - lam) + 1.0 / v
    s, w, qq = fam.power_moment_sums(lam, a)
    gya = float(np.exp(a * fam.log_pmf(y, lam)))
    dev = yv - lam
    u = dev * gya
    return (1.0 + a) * (
        -brat * (w - u)
        + (-s + (1.0 + a) * qq / v + gya - a * dev * dev * gya / v) / v
    )


def _terms(cfg, theta, data, want_grad=False, want_hess=False, validate=True):
    """Mean/derivative paths plus per-observation loss terms."""
    lam, grad, hess = meanmodel.paths(
        cfg.model, cfg.box, theta, data, cfg.lam_init,
        want_grad=want_grad, want_hess=want_hess, validate=validate,
    )
    y = np.asarray(data.y, dtype=float)
    loss, h, m = _backend.kernels().dpd_terms(cfg.family, y, lam, float(cfg.alpha))
    return lam, grad, hess, loss, h, m


def objective(cfg, theta, data):
    """Average per-observation loss along the fitted mean path."""
    _, _, _, loss, _, _ = _terms(cfg, theta, data)
    return float(np.mean(loss))


def objective_grad(cfg, theta, data):
    """Analytic gradient of the objective."""
    _, grad, _, _, h, _ = _terms(cfg, theta, data, want_grad=True)
    return grad.T @ h / data.n


def objective_with_grad(cfg, theta, data, validate=True):
    """(value, gradient) in one pass; the optimizer's workhorse."""
    _, grad, _, loss, h, _ = _terms(
        cfg, theta, data, want_grad=True, validate=validate
    )
    return float(np.mean(loss)), grad.T @ h / data.n


def objective_hess(cfg, theta, data):
    """Analytic Hessian of the objective (symmetric by construction)."""
    _, grad, hess, _, h, m = _terms(
        cfg, theta, data, want_grad=True, want_hess=True
    )
    out = np.einsum("t,tij->ij", h, hess)
    out += grad.T @ (m[:, None] * grad)
    out /= data.n
    return 0.5 * (out + out.T)


def per_obs_pieces(cfg, theta, data, validate=True):
    """Per-observation (mean, loss, score factor, factor derivative, mean
    gradient) along the path; used by the covariance plug-ins."""
    lam, grad, _, loss, h, m = _terms(
        cfg, theta, data, want_grad=True, validate=validate
    )
    return lam, loss, h, m, grad


def divergence(family, lam_g, lam_star, alpha):
    """Power divergence between the family pmfs at two means.

    Nonnegative, zero exactly when the means coincide; the alpha = 0
    branch is the Kullback-Leibler divergence of the second argument's
    pmf from the first's.
    """
    family.check_mean(lam_g)
    family.check_mean(lam_star)
    if alpha < 0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    lam_g = float(lam_g)
    lam_star = float(lam_star)
    hi = max(family.truncated_support(lam_g), family.truncated_support(lam_star))
    grid = np.arange(hi + 1, dtype=float)
    logg = family._log_pmf_unchecked(grid, lam_g)
    logs = family._log_pmf_unchecked(grid, lam_star)
    gstar = np.exp(logs)
    if alpha == 0.0:
        return float(np.sum(gstar * (logs - logg)))
    g = np.exp(logg)
    val = np.sum(
        g ** (1.0 + alpha)
        - (1.0 + 1.0 / alpha) * gstar * g**alpha
        + (1.0 / alpha) * gstar ** (1.0 + alpha)
    )
    return float(val)
