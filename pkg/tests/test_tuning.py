import numpy as np
import pytest

import dpdcount as dc
from dpdcount import tuning
from dpdcount.errors import TuneError

from conftest import cfg_for, table1_spec


def test_amse_arithmetic():
    th = np.array([1.0, 2.0])
    cov = np.diag([0.5, 1.5])
    # pilot against itself: only the trace term remains
    assert tuning.amse(th, th, cov, 100) == pytest.approx(2.0 / 100)
    shifted = th + np.array([0.1, 0.0])
    cov2 = np.diag([1.0, 1.0])
    assert tuning.amse(shifted, th, cov2, 100) == pytest.approx(0.01 + 0.02)


def test_amse_validates():
    with pytest.raises(ValueError):
        tuning.amse([1.0], [1.0, 2.0], np.eye(2), 10)
    with pytest.raises(ValueError):
        tuning.amse([1.0], [1.0], np.eye(1), 0)


def test_default_grid_matches_convention():
    assert tuning.DEFAULT_GRID == (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35,
                                   0.4, 0.45, 0.5, 0.75, 1.0)
    assert 1.0 in tuning.DEFAULT_GRID


@pytest.fixture(scope="module")
def tune_setup():
    spec = table1_spec(n=500, seed=17)
    data = dc.simulate(spec)
    return spec, data


def test_grid_must_contain_pilot(tune_setup):
    spec, data = tune_setup
    cfg = cfg_for(data, spec, 1.0)
    with pytest.raises(TuneError):
        tuning.tune(cfg, data, grid=[0.0, 0.5])
    with pytest.raises(TuneError):
        tuning.tune(cfg, data, grid=[])


def test_singleton_grid(tune_setup):
    spec, data = tune_setup
    cfg = cfg_for(data, spec, 1.0)
    rep = tuning.tune(cfg, data, grid=[1.0], starts=2)
    assert rep.alpha_opt == 1.0
    pilot = rep.results[1.0]
    assert rep.amse_values[0] == pytest.approx(np.trace(pilot.cov) / data.n)


def test_tune_determinism(tune_setup):
    spec, data = tune_setup
    cfg = cfg_for(data, spec, 1.0)
    a = tuning.tune(cfg, data, grid=[0.0, 0.25, 1.0], starts=2, seed=4)
    b = tuning.tune(cfg, data, grid=[0.0, 0.25, 1.0], starts=2, seed=4)
    assert a.alpha_opt == b.alpha_opt
    assert a.amse_values == b.amse_values
    for al in a.results:
        np.testing.assert_array_equal(a.results[al].theta, b.results[al].theta)


def test_tune_amse_nonnegative_and_minimal(tune_setup):
    spec, data = tune_setup
    cfg = cfg_for(data, spec, 1.0)
    rep = tuning.tune(cfg, data, grid=[0.0, 0.1, 0.5, 1.0], starts=2)
    vals = [v for v in rep.amse_values if v is not None]
    assert all(v >= 0 for v in vals)
    assert min(vals) == pytest.approx(
        rep.amse_values[rep.grid.index(rep.alpha_opt)]
    )


def test_pilot_failure_raises(tune_setup, monkeypatch):
    spec, data = tune_setup
    cfg = cfg_for(data, spec, 1.0)
    from dpdcount import fitting

    real_fit = fitting.fit

    def sabotage(cfg_a, d, **kw):
        res = real_fit(cfg_a, d, **kw)
        if cfg_a.alpha == 1.0:
            res.converged = False
        return res

    monkeypatch.setattr(fitting, "fit", sabotage)
    with pytest.raises(TuneError), pytest.warns(RuntimeWarning):
        tuning.tune(cfg, data, grid=[0.0, 1.0], starts=2)


@pytest.mark.slow
def test_clean_data_prefers_small_alpha():
    spec = table1_spec(n=1000)
    hits = 0
    reps = 20
    for r in range(reps):
        data = dc.simulate(dc.SimSpec(
            model=spec.model, family=spec.family, theta=spec.theta,
            driver=spec.driver, n=spec.n, seed=[41, r],
        ))
        cfg = cfg_for(data, spec, 1.0)
        rep = tuning.tune(cfg, data, starts=2)
        hits += rep.alpha_opt <= 0.2
    assert hits > reps / 2
