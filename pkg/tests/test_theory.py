import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from addq.theory import (
    chi2_cdf,
    cyclic_target_estimator,
    gaussian_max_mean_bounds,
    ks_test,
    overestimation_lower_bound,
    verify_bias_bound,
    verify_variance_law,
)


def test_cyclic_estimator_deterministic_rewards():
    est = cyclic_target_estimator(5, -0.1, 0.0, 30, 0.9, np.random.default_rng(0))
    assert est.q_hat == 0.9 * -0.1
    assert est.s2_chosen == 0.0


def test_cyclic_estimator_single_arm():
    rng = np.random.default_rng(1)
    draws = np.random.default_rng(1).normal(0.3, 2.0, size=(40, 1))
    est = cyclic_target_estimator(1, 0.3, 2.0, 40, 0.9, rng)
    assert est.chosen_arm == 0
    assert est.q_hat == pytest.approx(0.9 * draws.mean(), abs=1e-12)
    assert est.s2_chosen == pytest.approx(draws.var(ddof=1), abs=1e-12)


def test_cyclic_estimator_needs_two_rounds():
    with pytest.raises(ValueError):
        cyclic_target_estimator(3, 0.0, 1.0, 1, 0.9, np.random.default_rng(0))


def test_lower_bound_values():
    assert overestimation_lower_bound(0.9, 5.0, 1, 100) == 0.0
    assert overestimation_lower_bound(0.9, 0.0, 5, 100) == 0.0
    expected = 0.9 * 5 * math.sqrt(math.log(5)) / (math.sqrt(math.pi * math.log(2)) * 10)
    assert overestimation_lower_bound(0.9, 5.0, 5, 100) == pytest.approx(expected, rel=1e-15)
    assert overestimation_lower_bound(0.9, 5.0, 5, 100) == pytest.approx(0.3868, abs=1e-4)


def test_chi2_cdf_examples():
    assert chi2_cdf(0.0, 3) == 0.0
    assert chi2_cdf(2 * math.log(2), 2) == pytest.approx(0.5, abs=1e-14)
    with pytest.raises(ValueError):
        chi2_cdf(-1.0, 2)


@pytest.mark.parametrize("dof", [1, 2, 5, 10, 29, 99])
def test_chi2_cdf_against_reference(dof):
    xs = np.concatenate([np.linspace(0, 4 * dof + 40, 400), [1e-8, 0.5 * dof, dof + 1.0]])
    ours = np.array([chi2_cdf(x, dof) for x in xs])
    assert np.max(np.abs(ours - special.gammainc(dof / 2, xs / 2))) < 1e-10
    assert np.all(np.diff(ours[:400]) >= 0)
    assert ours[399] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("dof", [1, 5, 29])
def test_chi2_cdf_monte_carlo(dof):
    rng = np.random.default_rng(dof)
    samples = np.sort(np.sum(rng.normal(size=(1_000_000, dof)) ** 2, axis=1))
    grid = np.quantile(samples, np.linspace(0.01, 0.99, 60))
    emp = np.searchsorted(samples, grid, side="right") / samples.size
    ours = np.array([chi2_cdf(x, dof) for x in grid])
    assert np.max(np.abs(emp - ours)) < 0.003


def test_ks_perfect_fit():
    n = 500
    samples = stats.norm.ppf(np.arange(1, n + 1) / (n + 1))
    d, p = ks_test(samples, stats.norm.cdf)
    assert d < 2.0 / n
    assert p > 0.99


def test_ks_detects_shift():
    samples = np.random.default_rng(2).normal(0.5, 1.0, size=2000)
    _, p = ks_test(samples, stats.norm.cdf)
    assert p < 0.01


@given(st.integers(0, 2**31), st.integers(10, 300))
def test_ks_statistic_matches_reference(seed, n):
    x = np.random.default_rng(seed).standard_t(5, size=n)
    d, p = ks_test(x, stats.norm.cdf)
    assert 0.0 <= d <= 1.0 and 0.0 <= p <= 1.0
    assert d == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-12)


def test_ks_pvalue_close_to_reference_at_large_n():
    x = np.random.default_rng(3).normal(size=2000)
    _, p = ks_test(x, stats.norm.cdf)
    assert p == pytest.approx(stats.kstest(x, "norm").pvalue, abs=0.01)


def test_ks_needs_samples():
    with pytest.raises(ValueError):
        ks_test([0.1, 0.2], stats.norm.cdf)


def test_variance_law_default_case():
    r = verify_variance_law(5, 1.0, 30, 2000, seed=0)
    assert r.p_value > 0.01
    assert abs(r.mean - 1.0) <= 3 * math.sqrt(2 / 29) / math.sqrt(2000)
    assert r.variance_ok and r.passed
    assert np.all(r.samples >= 0)


def test_variance_law_grid():
    fails = 0
    for i, (k, sigma, N) in enumerate((k, s, n) for k in (5, 10) for s in (1.0, 5.0) for n in (10, 30)):
        r = verify_variance_law(k, sigma, N, 2000, seed=100 + i)
        fails += r.p_value <= 0.01
    assert fails <= 1


def test_variance_law_needs_replicates():
    with pytest.raises(ValueError):
        verify_variance_law(5, 1.0, 30, 100, seed=0)


@pytest.mark.parametrize("sigma,k,N", [(s, k, n) for s in (1.0, 5.0) for k in (5, 20) for n in (25, 100)])
def test_bias_bound_grid(sigma, k, N):
    assert verify_bias_bound(0.9, sigma, k, N, 2000, seed=k * N + int(sigma)).passed


def test_single_arm_is_unbiased():
    b = verify_bias_bound(0.9, 5.0, 1, 50, 2000, seed=7)
    assert b.lower_bound == 0.0
    assert abs(b.empirical_mean_bias) < 3 * b.stderr


def test_bias_grows_with_sigma():
    lo = verify_bias_bound(0.9, 5.0, 5, 100, 2000, seed=8)
    hi = verify_bias_bound(0.9, 10.0, 5, 100, 2000, seed=8)
    assert hi.lower_bound > lo.lower_bound
    assert hi.empirical_mean_bias > lo.empirical_mean_bias


def test_gaussian_max_bounds():
    lo, hi = gaussian_max_mean_bounds(2, 1.0)
    assert lo == pytest.approx(1 / math.sqrt(math.pi)) and hi == pytest.approx(math.sqrt(2 * math.log(2)))
    bounds = [gaussian_max_mean_bounds(k, 1.0) for k in range(2, 12)]
    assert all(b[0] > a[0] and b[1] > a[1] for a, b in zip(bounds, bounds[1:]))
    lo, hi = gaussian_max_mean_bounds(10, 1.0)
    emax = np.random.default_rng(9).normal(size=(100_000, 10)).max(axis=1).mean()
    assert lo <= emax <= hi
    with pytest.raises(ValueError):
        gaussian_max_mean_bounds(1, 1.0)
