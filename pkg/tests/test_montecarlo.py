import numpy as np
import pytest

import dpdcount as dc
from dpdcount import fitting, montecarlo
from dpdcount.errors import ScenarioUnstable

from conftest import knot_spec, table1_spec


def stub_fit(theta):
    def fake(cfg, data, **kw):
        return fitting.FitResult(
            theta=np.asarray(theta, dtype=float), objective=0.0, grad_norm=0.0,
            iterations=1, converged=True, alpha=cfg.alpha, n=data.n,
            param_names=list(cfg.model.param_names),
        )

    return fake


def test_mse_zero_when_estimates_equal_truth(monkeypatch):
    spec = table1_spec(n=300)
    monkeypatch.setattr(fitting, "fit", stub_fit(spec.theta))
    rep = montecarlo.run_mc(spec, alphas=[0.0], reps=2, base_seed=1)
    np.testing.assert_array_equal(rep.mse100, np.zeros((1, 4)))
    np.testing.assert_allclose(rep.means[0], spec.theta)


def test_reports_are_reproducible():
    spec = table1_spec(n=300)
    a = montecarlo.run_mc(spec, alphas=[0.0, 0.5], reps=3, base_seed=11, starts=2)
    b = montecarlo.run_mc(spec, alphas=[0.0, 0.5], reps=3, base_seed=11, starts=2)
    np.testing.assert_array_equal(a.means, b.means)
    np.testing.assert_array_equal(a.mse100, b.mse100)
    assert a.to_text() == b.to_text()


def test_failures_counted_and_excluded(monkeypatch):
    spec = table1_spec(n=300)
    real = fitting.fit
    calls = {"k": 0}

    def sometimes(cfg, data, **kw):
        calls["k"] += 1
        res = real(cfg, data, **kw)
        if calls["k"] == 1:
            res.converged = False
        return res

    monkeypatch.setattr(fitting, "fit", sometimes)
    rep = montecarlo.run_mc(spec, alphas=[0.0], reps=6, base_seed=2, starts=1)
    assert rep.failures[0.0] == 1
    assert np.all(np.isfinite(rep.means))


def test_unstable_scenario_raises(monkeypatch):
    spec = table1_spec(n=300)

    def broken(cfg, data, **kw):
        res = stub_fit(spec.theta)(cfg, data, **kw)
        res.converged = False
        return res

    monkeypatch.setattr(fitting, "fit", broken)
    with pytest.raises(ScenarioUnstable):
        montecarlo.run_mc(spec, alphas=[0.0], reps=5, base_seed=3)


def test_report_formatting(tmp_path):
    spec = table1_spec(n=400)
    rep = montecarlo.run_mc(spec, alphas=[0.0, 0.25], reps=3, base_seed=5, starts=2)
    text = rep.to_text()
    assert "alpha0" in text and "*" in text
    # cells read mean(mse): 3 decimals for the mean, 2 for the scaled MSE
    assert any(cell.count("(") for cell in text.splitlines()[2].split())
    path = tmp_path / "mc.csv"
    rep.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "alpha,param,mean,mse_x100,min_mse"
    assert len(lines) == 1 + 2 * 4
    marker = rep.min_mse_marker
    assert set(marker.values()) <= {0, 1}


def test_requires_two_replications():
    with pytest.raises(ValueError):
        montecarlo.run_mc(table1_spec(n=300), alphas=[0.0], reps=1, base_seed=1)


def test_knot_mc_single_replication(monkeypatch):
    spec = knot_spec(n=300)

    def fake_knot(cfg, data, **kw):
        return fitting.KnotFit(knot_hat=4, grid=[1, 2, 3, 4],
                               objectives=[1, 1, 1, 0.5],
                               fit=None, failures=[])

    monkeypatch.setattr(fitting, "fit_knot", fake_knot)
    rep = montecarlo.knot_mc(spec, reps=1, base_seed=9)
    assert rep.mean == 4.0
    assert rep.sd == 0.0
    assert rep.p_true == 1.0
    assert rep.min == rep.max == rep.median == 4.0


def test_knot_mc_statistics(monkeypatch):
    spec = knot_spec(n=300)
    seq = iter([3, 4, 4, 5])

    def fake_knot(cfg, data, **kw):
        return fitting.KnotFit(knot_hat=next(seq), grid=[1], objectives=[0.0],
                               fit=None, failures=[])

    monkeypatch.setattr(fitting, "fit_knot", fake_knot)
    rep = montecarlo.knot_mc(spec, reps=4, base_seed=9)
    assert rep.mean == pytest.approx(4.0)
    assert rep.p_true == pytest.approx(0.5)
    assert rep.min == 3 and rep.max == 5
    assert rep.median == pytest.approx(4.0)
