import numpy as np
import pytest

import dpdcount as dc
from dpdcount.errors import DomainError, InfeasibleParams
from dpdcount.meanmodel import (
    LinearIngarchX,
    OneKnot,
    ParamBox,
    apply_transforms,
    knot_term,
    lambda_grad_path,
    lambda_hess_path,
    lambda_path,
)

from conftest import interior_theta, knot_spec, nb_spec, table1_spec

MODEL = LinearIngarchX(q=1, p=1, transforms=("abs",))
BOX = ParamBox(alpha_u=30.0)
THETA = np.array([0.1, 0.15, 0.8, 0.03])


def tiny_data():
    return dc.Dataset(y=[3, 0], x=[[-2.0], [0.0]])


def test_hand_computed_path():
    lam = lambda_path(MODEL, BOX, THETA, tiny_data())
    assert lam[0] == pytest.approx(0.1, abs=1e-15)
    assert lam[1] == pytest.approx(0.69, rel=1e-14)


def test_empirical_mean_init():
    data = tiny_data()
    lam = lambda_path(MODEL, BOX, THETA, data, "empirical-mean")
    assert lam[0] == pytest.approx(1.5)
    assert lam[1] == pytest.approx(0.1 + 0.15 * 3 + 0.8 * 1.5 + 0.03 * 2)
    lam2 = lambda_path(MODEL, BOX, THETA, data, 2.0)
    assert lam2[0] == pytest.approx(2.0)


def test_all_zero_fixed_point():
    data = dc.Dataset(y=np.zeros(60, dtype=int), x=np.zeros((60, 1)))
    lam = lambda_path(MODEL, BOX, THETA, data)
    target = 0.1 / (1 - 0.8)
    gaps = np.abs(lam - target)
    assert gaps[-1] < 1e-5
    ratios = gaps[1:20] / gaps[:19]
    np.testing.assert_allclose(ratios, 0.8, rtol=1e-8)


def test_knot_term_examples():
    assert knot_term(3, 4) == 0
    assert knot_term(4, 4) == 0
    assert knot_term(9, 4) == 5


def test_one_knot_path_matches_manual():
    model = OneKnot(4)
    th = np.array([1.0, 0.3, 0.2, 0.4])
    data = dc.Dataset(y=[3, 9, 2])
    lam = lambda_path(model, ParamBox(alpha_u=50.0), th, data)
    assert lam[0] == pytest.approx(1.0)
    # previous count 3 is below the knot: threshold term contributes nothing
    assert lam[1] == pytest.approx(1.0 + 0.3 * 3 + 0.2 * lam[0])
    assert lam[2] == pytest.approx(1.0 + 0.3 * 9 + 0.2 * lam[1] + 0.4 * 5)


def test_gradient_initial_values():
    data = tiny_data()
    g_alpha0 = lambda_grad_path(MODEL, BOX, THETA, data, "alpha0")
    # recursion start: the first mean equals the intercept, so its exact
    # derivative is the intercept direction, and the next step compounds it
    np.testing.assert_allclose(g_alpha0[0], [1, 0, 0, 0])
    np.testing.assert_allclose(g_alpha0[1], [1.8, 3.0, 0.1, 2.0], rtol=1e-14)
    g_emp = lambda_grad_path(MODEL, BOX, THETA, data, "empirical-mean")
    # pinned initial value is a constant of the data: null derivative
    np.testing.assert_allclose(g_emp[0], np.zeros(4))
    np.testing.assert_allclose(g_emp[1], [1.0, 3.0, 1.5, 2.0], rtol=1e-14)


def random_setup(k, rng):
    specs = [table1_spec, nb_spec, knot_spec]
    spec = specs[k % 3](n=120, seed=int(rng.integers(1 << 30)))
    data = dc.simulate(spec)
    box = ParamBox.for_counts(data.y)
    theta = interior_theta(spec.model, box, rng, spec.theta)
    init = ("alpha0", "empirical-mean")[k % 2]
    return spec.model, box, theta, data, init


def test_gradient_matches_finite_differences(rng):
    worst = 0.0
    for k in range(50):
        model, box, theta, data, init = random_setup(k, rng)
        grad = lambda_grad_path(model, box, theta, data, init)
        for i in range(model.dim):
            step = 1e-6 * (1.0 + abs(theta[i]))
            e = np.zeros(model.dim)
            e[i] = step
            hi = lambda_path(model, box, theta + e, data, init)
            lo = lambda_path(model, box, theta - e, data, init)
            fd = (hi - lo) / (2 * step)
            scale = np.maximum(np.abs(fd), 1.0)
            worst = max(worst, float(np.max(np.abs(grad[:, i] - fd) / scale)))
    assert worst <= 1e-6


def test_hessian_matches_finite_differences(rng):
    worst = 0.0
    for k in range(12):
        model, box, theta, data, init = random_setup(k, rng)
        hess = lambda_hess_path(model, box, theta, data, init)
        assert np.max(np.abs(hess - np.swapaxes(hess, 1, 2))) == 0.0
        for i in range(model.dim):
            step = 1e-6 * (1.0 + abs(theta[i]))
            e = np.zeros(model.dim)
            e[i] = step
            hi = lambda_grad_path(model, box, theta + e, data, init)
            lo = lambda_grad_path(model, box, theta - e, data, init)
            fd = (hi - lo) / (2 * step)
            scale = np.maximum(np.abs(fd), 1.0)
            worst = max(worst, float(np.max(np.abs(hess[:, :, i] - fd) / scale)))
    assert worst <= 1e-5


def test_hessian_zero_for_affine_model(rng):
    model = LinearIngarchX(q=2, p=0, transforms=("abs",))
    spec = table1_spec(n=100, seed=3)
    data = dc.simulate(spec)
    box = ParamBox.for_counts(data.y)
    theta = box.project(model, np.array([0.5, 0.2, 0.1, 0.05]))
    hess = lambda_hess_path(model, box, theta, data)
    assert np.max(np.abs(hess)) == 0.0
    assert lambda_hess_path(MODEL, BOX, THETA, tiny_data())[0].max() == 0.0


def test_mean_floor_in_alpha0_mode(rng):
    spec = table1_spec(n=400, seed=9)
    data = dc.simulate(spec)
    box = ParamBox.for_counts(data.y)
    for _ in range(20):
        theta = box.project(
            spec.model, np.abs(rng.normal(size=4)) * np.array([1.0, 0.3, 0.5, 0.05])
        )
        lam = lambda_path(spec.model, box, theta, data, "alpha0")
        assert lam.min() >= box.alpha_l - 1e-12


def test_initialization_difference_decays_geometrically():
    spec = table1_spec(n=200, seed=21)
    data = dc.simulate(spec)
    a = lambda_path(MODEL, BOX, THETA, data, "alpha0")
    b = lambda_path(MODEL, BOX, THETA, data, 5.0)
    gap = np.abs(a - b)
    # pure mean-lag propagation: one-step contraction at the lag coefficient
    ratios = gap[2:40] / gap[1:39]
    np.testing.assert_allclose(ratios, 0.8, rtol=1e-9)


def test_infeasible_theta_rejected():
    with pytest.raises(InfeasibleParams):
        lambda_path(MODEL, BOX, np.array([0.1, 0.6, 0.6, 0.03]), tiny_data())
    with pytest.raises(InfeasibleParams):
        lambda_path(MODEL, BOX, np.array([-0.1, 0.15, 0.8, 0.03]), tiny_data())


def test_transforms():
    x = np.array([[-2.0, 1.0], [3.0, -4.0]])
    out = apply_transforms(x, ("abs", "negpart"))
    np.testing.assert_allclose(out, [[2.0, 0.0], [3.0, 4.0]])
    out = apply_transforms(x[:, :1], ("exp",))
    np.testing.assert_allclose(out[:, 0], np.exp(x[:, 0]))
    with pytest.raises(DomainError):
        apply_transforms(x, ("identity", "identity"))
    with pytest.raises(ValueError):
        apply_transforms(x, ("abs",))


def test_param_box_projection_feasible(rng):
    model = MODEL
    box = ParamBox(alpha_u=5.0)
    for _ in range(200):
        raw = rng.normal(scale=3.0, size=4)
        proj = box.project(model, raw)
        assert box.contains(model, proj, tol=1e-12)
