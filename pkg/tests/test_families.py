import math

import numpy as np
import pytest
import scipy.stats as st
from hypothesis import given, settings
from hypothesis import strategies as hst

import dpdcount as dc
from dpdcount.errors import DomainError, TruncationError

POIS = dc.Poisson()
NB8 = dc.NegBinomial(8.0)
BERN = dc.Bernoulli()
ALL = [POIS, NB8, BERN]


def lam_in_domain(fam, u):
    lo, hi = fam.mean_domain()
    if math.isinf(hi):
        return 0.05 + 20.0 * u
    return lo + (hi - lo) * (0.02 + 0.96 * u)


def test_mean_domains():
    assert POIS.mean_domain() == (0.0, math.inf)
    assert NB8.mean_domain() == (0.0, math.inf)
    assert BERN.mean_domain() == (0.0, 1.0)


def test_constructor_invariants():
    with pytest.raises(ValueError):
        dc.NegBinomial(-1.0)
    with pytest.raises(ValueError):
        dc.Poisson(tail_mass=1e-3)
    with pytest.raises(ValueError):
        dc.Poisson(cap=10)


def test_natural_parameter_examples():
    assert POIS.natural(1.0) == pytest.approx(0.0, abs=1e-15)
    assert NB8.natural(8.0) == pytest.approx(math.log(0.5), rel=1e-12)
    assert BERN.natural(0.5) == pytest.approx(0.0, abs=1e-15)


def test_mean_map_examples():
    assert POIS.mean(0.0) == pytest.approx(1.0)
    assert POIS.variance(0.0) == pytest.approx(1.0)
    assert POIS.dvariance(0.0) == pytest.approx(1.0)
    assert BERN.mean(0.0) == pytest.approx(0.5)
    assert BERN.variance(0.0) == pytest.approx(0.25)
    assert BERN.dvariance(0.0) == pytest.approx(0.0, abs=1e-15)
    assert NB8.mean(math.log(0.5)) == pytest.approx(8.0, rel=1e-12)


def test_negbinomial_natural_domain():
    with pytest.raises(DomainError):
        NB8.mean(0.1)


@pytest.mark.parametrize("fam", ALL, ids=lambda f: f.name)
def test_roundtrip_mean_natural(fam, rng):
    lams = lam_in_domain(fam, rng.random(1000))
    back = fam.mean(fam.natural(lams))
    assert np.max(np.abs(back - lams) / lams) <= 1e-10


@given(u=hst.floats(min_value=1e-6, max_value=1.0 - 1e-6))
@settings(max_examples=60, deadline=None)
def test_roundtrip_hypothesis(u):
    for fam in ALL:
        lam = lam_in_domain(fam, u)
        assert fam.mean(fam.natural(lam)) == pytest.approx(lam, rel=1e-10)


@pytest.mark.parametrize("fam", ALL, ids=lambda f: f.name)
def test_mean_map_strictly_increasing(fam, rng):
    etas = np.sort(fam.natural(lam_in_domain(fam, rng.random(200))))
    means = fam.mean(etas)
    assert np.all(np.diff(means) > 0)
    assert np.all(fam.variance(etas) > 0)


@pytest.mark.parametrize("fam", ALL, ids=lambda f: f.name)
def test_variance_matches_pmf_variance(fam, rng):
    for u in rng.random(20):
        lam = lam_in_domain(fam, u)
        _, w, q = fam.power_moment_sums(lam, 0.0)
        v = fam.var_at_mean(lam)
        assert abs(q - v) / v <= 1e-8
        # dropped tail contributes up to tail_mass * y_max to the first moment
        assert abs(w) <= 1e-10 * (1.0 + lam)


def test_log_pmf_against_scipy(rng):
    for lam in (0.3, 1.0, 2.0, 7.5):
        y = np.arange(0, 25)
        np.testing.assert_allclose(
            POIS.log_pmf(y, lam), st.poisson.logpmf(y, lam), rtol=1e-12
        )
        p = 8.0 / (8.0 + lam)
        np.testing.assert_allclose(
            NB8.log_pmf(y, lam), st.nbinom.logpmf(y, 8.0, p), rtol=1e-10
        )
    np.testing.assert_allclose(
        BERN.log_pmf([0, 1], 0.3), np.log([0.7, 0.3]), rtol=1e-14
    )


def test_log_pmf_examples():
    assert POIS.log_pmf(1, 2.0) == pytest.approx(math.log(2.0 * math.exp(-2.0)), rel=1e-12)
    assert NB8.log_pmf(0, 8.0) == pytest.approx(8.0 * math.log(0.5), rel=1e-12)


def test_log_pmf_domain_errors():
    with pytest.raises(DomainError):
        POIS.log_pmf(0, 0.0)
    with pytest.raises(DomainError):
        POIS.log_pmf(-1, 1.0)
    with pytest.raises(DomainError):
        BERN.log_pmf(2, 0.5)
    with pytest.raises(DomainError):
        BERN.log_pmf(0, 1.0)


def test_truncated_support_brute_force():
    for lam in (0.01, 1.0, 3.7, 40.0):
        pmf = st.poisson.pmf(np.arange(0, 5000), lam)
        cdf = np.cumsum(pmf)
        expected = int(np.argmax(cdf > 1.0 - 1e-12))
        assert POIS.truncated_support(lam) == expected


def test_truncated_support_bernoulli_and_cap():
    assert BERN.truncated_support(0.3) == 1
    with pytest.raises(TruncationError):
        POIS.truncated_support(1e6)


def test_power_sum_examples(rng):
    for fam in ALL:
        lam = lam_in_domain(fam, rng.random())
        assert fam.power_sum(lam, 0.0) == pytest.approx(1.0, abs=1e-12)
    brute = math.exp(-2.0) * sum(1.0 / math.factorial(k) ** 2 for k in range(60))
    assert POIS.power_sum(1.0, 1.0) == pytest.approx(brute, rel=1e-12)
    assert BERN.power_sum(0.5, 1.0) == pytest.approx(0.5, rel=1e-14)


@pytest.mark.parametrize("fam", ALL, ids=lambda f: f.name)
def test_power_sum_nonincreasing_in_alpha(fam, rng):
    lam = lam_in_domain(fam, rng.random())
    vals = [fam.power_sum(lam, a) for a in (0.0, 0.1, 0.3, 0.5, 0.8, 1.0)]
    assert all(b <= a + 1e-14 for a, b in zip(vals, vals[1:]))


def test_weighted_moment_sum():
    assert POIS.weighted_moment_sum(2.0, 0.0) == pytest.approx(0.0, abs=1e-10)
    grid = np.arange(0, 60)
    pmf = st.poisson.pmf(grid, 1.0)
    ymax = POIS.truncated_support(1.0)
    brute = float(np.sum((grid[: ymax + 1] - 1.0) * pmf[: ymax + 1] ** 2.0))
    assert POIS.weighted_moment_sum(1.0, 1.0) == pytest.approx(brute, rel=1e-10)
    assert BERN.weighted_moment_sum(0.5, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_poisson_curvature_condition(rng):
    floor = 0.05
    for u in rng.random(50):
        lam = floor + 30.0 * u
        ratio = POIS.curvature_ratio(lam)
        assert ratio == pytest.approx(1.0 / lam**2, rel=1e-12)
        assert abs(ratio) <= 1.0 / floor**2
