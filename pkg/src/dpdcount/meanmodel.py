"""Conditional-mean recursions with analytic parameter derivatives.

Two model forms are provided: the linear INGARCH-X recursion on past
counts, past means and transformed covariates, and a one-knot piecewise
recursion whose threshold term (y - knot)^+ is handled as a derived
regressor.  Paths are evaluated under a zero pre-sample convention; the
first mean is either produced by the recursion itself ("alpha0" mode,
so it equals the intercept) or pinned to the empirical mean or a given
number.  Derivative paths are the exact derivatives of the evaluated
path, so pinned initial values contribute zero.
"""

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DomainError, InfeasibleParams

TRANSFORMS = {
    "identity": lambda x: x,
    "abs": np.abs,
    "exp": np.exp,
    "negpart": lambda x: np.where(x < 0, -x, 0.0),
}


def apply_transforms(x, transforms):
    """Columnwise covariate maps; results must be nonnegative."""
    x = np.asarray(x, dtype=float)
    if x.shape[1] != len(transforms):
        raise ValueError(
            f"{len(transforms)} transforms for {x.shape[1]} covariate columns"
        )
    if not transforms:
        return x
    cols = []
    for j, nm in enumerate(transforms):
        try:
            fn = TRANSFORMS[nm]
        except KeyError:
            raise ValueError(f"unknown covariate transform {nm!r}") from None
        cols.append(fn(x[:, j]))
    xt = np.column_stack(cols)
    if np.any(xt < 0):
        raise DomainError("transformed covariates must be nonnegative")
    return xt


def knot_term(y, knot):
    """Positive part (y - knot)^+."""
    if np.any(np.asarray(y) < 0) or knot < 0:
        raise ValueError("knot_term needs nonnegative integer arguments")
    return np.maximum(np.asarray(y) - knot, 0)


@dataclass(frozen=True)
class LinearIngarchX:
    """Mean = intercept + count lags (q) + mean lags (p) + covariates.

    Parameter layout: (alpha_0, alpha_1..alpha_q, beta_1..beta_p,
    gamma_1..gamma_{d_x}); covariates enter at lag one after the
    per-column transforms.
    """

    q: int = 1
    p: int = 1
    transforms: tuple = ()

    def __post_init__(self):
        if self.q < 0 or self.p < 0 or self.q + self.p == 0:
            raise ValueError("need q >= 0, p >= 0 and q + p >= 1")
        object.__setattr__(self, "transforms", tuple(self.transforms))

    @property
    def d_x(self):
        return len(self.transforms)

    @property
    def dim(self):
        return 1 + self.q + self.p + self.d_x

    @property
    def param_names(self):
        return (
            ["alpha0"]
            + [f"alpha{i}" for i in range(1, self.q + 1)]
            + [f"beta{i}" for i in range(1, self.p + 1)]
            + [f"gamma{i}" for i in range(1, self.d_x + 1)]
        )

    # coordinates entering the stationarity sum / covariate cap
    @property
    def stationarity_idx(self):
        return tuple(range(1, 1 + self.q + self.p))

    @property
    def covariate_idx(self):
        return tuple(range(1 + self.q + self.p, self.dim))

    def design(self, data):
        """(y, transformed covariates, q, p) for the path kernels."""
        xt = apply_transforms(data.x, self.transforms)
        return np.asarray(data.y, dtype=float), xt, self.q, self.p


@dataclass(frozen=True)
class OneKnot:
    """Mean = alpha0 + alpha1*y_lag + alpha2*mean_lag + beta*(y_lag - knot)^+.

    The knot is an integer hyperparameter, not an estimated coordinate;
    layout (alpha0, alpha1, alpha2, beta).
    """

    knot: int

    def __post_init__(self):
        if self.knot < 0 or int(self.knot) != self.knot:
            raise ValueError("knot must be a nonnegative integer")
        object.__setattr__(self, "knot", int(self.knot))

    d_x = 0
    dim = 4
    param_names = ["alpha0", "alpha1", "alpha2", "beta"]
    # the threshold term is bounded by the count lag, so beta joins the sum
    stationarity_idx = (1, 2, 3)
    covariate_idx = ()

    def design(self, data):
        z = knot_term(data.y, self.knot).astype(float)[:, None]
        return np.asarray(data.y, dtype=float), z, 1, 1


@dataclass(frozen=True)
class ParamBox:
    """Feasible parameter set.

    Intercept in [alpha_l, alpha_u]; lag coefficients nonnegative with
    eps <= sum <= 1 - eps; covariate coefficients in [0, alpha_v].  Any
    feasible vector keeps every mean above alpha_l.
    """

    alpha_l: float = 1e-4
    alpha_u: float = 10.0
    alpha_v: float = 100.0
    eps: float = 1e-4

    def __post_init__(self):
        if not (0 < self.alpha_l <= self.alpha_u):
            raise ValueError("need 0 < alpha_l <= alpha_u")
        if not (0 < self.eps < 0.5):
            raise ValueError("need 0 < eps < 1/2")
        if self.alpha_v <= 0:
            raise ValueError("need alpha_v > 0")

    @classmethod
    def for_counts(cls, y, alpha_l=1e-4, alpha_v=100.0, eps=1e-4):
        """Default box scaled to the data: intercept cap 10 * mean(y)."""
        ybar = float(np.mean(y))
        return cls(alpha_l=alpha_l, alpha_u=max(10.0 * ybar, 1.0),
                   alpha_v=alpha_v, eps=eps)

    def lower(self, model):
        lo = np.zeros(model.dim)
        lo[0] = self.alpha_l
        return lo

    def upper(self, model):
        hi = np.full(model.dim, 1.0 - self.eps)
        hi[0] = self.alpha_u
        for j in model.covariate_idx:
            hi[j] = self.alpha_v
        return hi

    def violation(self, model, theta):
        """Largest constraint violation (0 when feasible)."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (model.dim,):
            return np.inf
        v = max(self.alpha_l - theta[0], theta[0] - self.alpha_u, 0.0)
        s = 0.0
        for j in model.stationarity_idx:
            v = max(v, -theta[j], theta[j] - (1.0 - self.eps))
            s += theta[j]
        v = max(v, self.eps - s, s - (1.0 - self.eps))
        for j in model.covariate_idx:
            v = max(v, -theta[j], theta[j] - self.alpha_v)
        return v

    def contains(self, model, theta, tol=1e-9):
        return self.violation(model, theta) <= tol

    def check(self, model, theta, tol=1e-9):
        if not self.contains(model, theta, tol=tol):
            raise InfeasibleParams(
                f"theta {np.asarray(theta)!r} violates the feasible box "
                f"(violation {self.violation(model, theta):.3g})"
            )

    def project(self, model, theta):
        """Clip into the box exactly; the lag block is rescaled if needed."""
        th = np.array(theta, dtype=float)
        th[0] = min(max(th[0], self.alpha_l), self.alpha_u)
        sidx = list(model.stationarity_idx)
        for j in sidx:
            th[j] = min(max(th[j], 0.0), 1.0 - self.eps)
        s = float(np.sum(th[sidx]))
        if s > 1.0 - self.eps:
            th[sidx] *= (1.0 - self.eps) / s
        elif s < self.eps:
            if s <= 0.0:
                th[sidx] = self.eps / len(sidx)
            else:
                th[sidx] *= self.eps / s
        for j in model.covariate_idx:
            th[j] = min(max(th[j], 0.0), self.alpha_v)
        return th


def _resolve_init(lam_init, y):
    """(initial value, pin_first) for the recursion kernels."""
    if lam_init == "alpha0":
        return 0.0, False
    if lam_init == "empirical-mean":
        return float(np.mean(y)), True
    val = float(lam_init)
    if not np.isfinite(val) or val <= 0:
        raise ValueError(f"numeric initial mean must be positive, got {lam_init!r}")
    return val, True


def paths(model, box, theta, data, lam_init="alpha0", want_grad=False,
          want_hess=False, validate=True):
    """Mean path with optional gradient / Hessian paths.

    Returns (lam, grad, hess); unwanted pieces are None.
    """
    theta = np.ascontiguousarray(theta, dtype=float)
    if validate:
        box.check(model, theta)
    y, xt, q, p = model.design(data)
    init_val, pin_first = _resolve_init(lam_init, data.y)
    return _backend.kernels().ingarch_paths(
        np.ascontiguousarray(y),
        np.ascontiguousarray(xt),
        theta, q, p, init_val, pin_first,
        want_grad, want_hess,
    )


def lambda_path(model, box, theta, data, lam_init="alpha0"):
    """Fitted mean series under the zero-history convention."""
    return paths(model, box, theta, data, lam_init)[0]


def lambda_grad_path(model, box, theta, data, lam_init="alpha0"):
    """Exact derivative of the mean path, shape (n, dim)."""
    return paths(model, box, theta, data, lam_init, want_grad=True)[1]


def lambda_hess_path(model, box, theta, data, lam_init="alpha0"):
    """Exact second derivative of the mean path, shape (n, dim, dim)."""
    return paths(model, box, theta, data, lam_init, want_hess=True)[2]
