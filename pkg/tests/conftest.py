import numpy as np
import pytest

import dpdcount as dc
from dpdcount.dpd import DpdConfig
from dpdcount.meanmodel import ParamBox


def table1_spec(n=1000, seed=0):
    """Poisson count recursion with one ARCH(1)-driven covariate."""
    return dc.SimSpec(
        model=dc.LinearIngarchX(q=1, p=1, transforms=("abs",)),
        family=dc.Poisson(),
        theta=[0.10, 0.15, 0.80, 0.03],
        driver=dc.Arch1Driver(1.0, 0.5),
        n=n,
        seed=seed,
    )


def knot_spec(n=1000, seed=0):
    """Poisson one-knot recursion, threshold 4."""
    return dc.SimSpec(
        model=dc.OneKnot(4),
        family=dc.Poisson(),
        theta=[1.0, 0.3, 0.2, 0.4],
        n=n,
        seed=seed,
    )


def nb_spec(n=1000, seed=0):
    """Negative-binomial recursion with two AR(1) covariates."""
    return dc.SimSpec(
        model=dc.LinearIngarchX(q=1, p=1, transforms=("exp", "negpart")),
        family=dc.NegBinomial(8.0),
        theta=[0.5, 0.2, 0.4, 0.1, 0.3],
        driver=dc.Ar1Driver((1.0 / 3.0, 0.5)),
        n=n,
        seed=seed,
    )


def cfg_for(data, spec, alpha, lam_init="empirical-mean"):
    return DpdConfig(alpha=alpha, family=spec.family, model=spec.model,
                     box=ParamBox.for_counts(data.y), lam_init=lam_init)


def interior_theta(model, box, rng, base):
    """Random feasible point kept strictly inside every constraint, so
    that small finite-difference probes stay feasible."""
    th = box.project(model, np.asarray(base, dtype=float)
                     * rng.uniform(0.6, 1.4, size=len(base)))
    sidx = list(model.stationarity_idx)
    th[sidx] = np.maximum(th[sidx], 1e-3)
    cap = 1.0 - box.eps - 1e-3
    s = th[sidx].sum()
    if s > cap:
        th[sidx] *= cap / s
    for j in model.covariate_idx:
        th[j] = min(max(th[j], 1e-3), box.alpha_v - 1e-3)
    th[0] = min(max(th[0], box.alpha_l + 1e-3), box.alpha_u - 1e-3)
    return th


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture
def small_dataset():
    spec = table1_spec(n=300, seed=7)
    return dc.simulate(spec), spec
