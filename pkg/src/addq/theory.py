"""Monte Carlo checks of the overestimation lower bound and the chi-square sample-variance law.

The estimator under study explores the k arms of one bandit side cyclically,
N rounds each, while the bootstrap source at s0 is held at zero; a single
final backup then sets ``q_hat = gamma * max_a mean(X^a)``.  With 1/n step
sizes the arm distributions are exactly the empirical measures of their
draws, so both quantities are computed in closed form from the raw samples.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CyclicEstimate:
    q_hat: float
    s2_chosen: float  # unbiased sample variance of the chosen arm, before discounting
    chosen_arm: int


def cyclic_target_estimator(
    k: int, mu: float, sigma: float, N: int, gamma: float, rng: np.random.Generator
) -> CyclicEstimate:
    if N < 2:
        raise ValueError("N must be at least 2 for a sample variance")
    if k < 1:
        raise ValueError("need at least one arm")
    # one row per round of the cycle
    draws = rng.normal(mu, sigma, size=(N, k))
    counts = np.full(k, N)
    # equal visit counts satisfy 1/n_a + 1/n_b >= 2/N with equality
    assert np.all(1.0 / counts[:, None] + 1.0 / counts[None, :] >= 2.0 / N - 1e-15)
    centred = draws - mu
    means = mu + centred.mean(axis=0)
    arm = int(np.argmax(means))
    s2 = float(np.var(centred[:, arm], ddof=1))
    return CyclicEstimate(q_hat=gamma * float(means[arm]), s2_chosen=s2, chosen_arm=arm)


def overestimation_lower_bound(gamma: float, sigma: float, k: int, N: int) -> float:
    """gamma * sigma * sqrt(ln k) / (sqrt(pi ln 2) * sqrt(N)), natural logs throughout."""
    if k < 1 or N < 1:
        raise ValueError("k and N must be positive")
    return gamma * sigma * math.sqrt(math.log(k)) / (math.sqrt(math.pi * math.log(2)) * math.sqrt(N))


def gaussian_max_mean_bounds(k: int, sigma: float) -> tuple[float, float]:
    """Sandwich for E[max of k iid N(0, sigma^2)]."""
    if k < 2:
        raise ValueError("need k >= 2")
    lk = math.log(k)
    return sigma * math.sqrt(lk / (math.pi * math.log(2))), sigma * math.sqrt(2 * lk)


# ---------------------------------------------------------------------------
# chi-square CDF via the regularized lower incomplete gamma function

_EPS = 1e-16
_MAX_ITER = 100_000


def _gamma_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise RuntimeError("incomplete gamma series did not converge")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cont_frac(a: float, x: float) -> float:
    # modified Lentz for the upper tail Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise RuntimeError("incomplete gamma continued fraction did not converge")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_p(a: float, x: float) -> float:
    if a <= 0 or x < 0:
        raise ValueError("need a > 0 and x >= 0")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return min(1.0, _gamma_series(a, x))
    return max(0.0, 1.0 - _gamma_cont_frac(a, x))


def chi2_cdf(x: float, dof: int) -> float:
    if dof < 1:
        raise ValueError("degrees of freedom must be positive")
    if x < 0 or math.isnan(x):
        raise ValueError("chi-square CDF is defined for x >= 0")
    return regularized_gamma_p(dof / 2.0, x / 2.0)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov


def kolmogorov_sf(lam: float, terms: int = 100) -> float:
    """P(K > lam) for the asymptotic Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.0:
        # theta-function form; the alternating series converges too slowly here
        s = sum(math.exp(-((2 * j - 1) ** 2) * math.pi**2 / (8 * lam**2)) for j in range(1, terms + 1))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / lam * s))
    s = sum((-1) ** (j - 1) * math.exp(-2 * j * j * lam * lam) for j in range(1, terms + 1))
    return min(1.0, max(0.0, 2.0 * s))


def ks_test(samples, cdf: Callable[[float], float]) -> tuple[float, float]:
    """One-sample two-sided KS test; returns (D, asymptotic p-value)."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 10:
        raise ValueError("KS test needs at least 10 samples")
    F = np.array([cdf(v) for v in x])
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    d = min(max(d, 0.0), 1.0)
    en = math.sqrt(n)
    return d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)


# ---------------------------------------------------------------------------
# Verification suites


def replicate_rngs(seed: int, replicates: int) -> list[np.random.Generator]:
    """Replicate i draws from ``SeedSequence(seed).spawn(replicates)[i]``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(replicates)]


@dataclass
class VarianceLawCheck:
    statistic: float
    p_value: float
    mean: float
    mean_stderr: float
    variance: float
    variance_stderr: float
    expected_mean: float
    expected_variance: float
    samples: np.ndarray

    @property
    def mean_ok(self) -> bool:
        return abs(self.mean - self.expected_mean) <= 3 * self.mean_stderr

    @property
    def variance_ok(self) -> bool:
        return abs(self.variance - self.expected_variance) <= 3 * self.variance_stderr

    @property
    def passed(self) -> bool:
        return self.p_value > 0.01 and self.mean_ok and self.variance_ok


def verify_variance_law(
    k: int, sigma: float, N: int, replicates: int, seed: int, mu: float = 0.0, gamma: float = 0.9
) -> VarianceLawCheck:
    """Test ``s2_chosen ~ sigma^2 / (N - 1) * chi2_{N-1}`` over independent replicates."""
    if replicates < 500:
        raise ValueError("use at least 500 replicates")
    if sigma <= 0:
        raise ValueError("the chi-square law needs sigma > 0")
    s2 = np.array([cyclic_target_estimator(k, mu, sigma, N, gamma, rng).s2_chosen for rng in replicate_rngs(seed, replicates)])
    nu = N - 1
    scale = sigma**2 / nu
    d, p = ks_test(s2, lambda x: chi2_cdf(x / scale, nu))
    exp_mean = sigma**2
    exp_var = 2 * sigma**4 / nu
    # fourth central moment of scale * chi2_nu, for the standard error of a sample variance
    mu4 = 12 * nu * (nu + 4) * scale**4
    R = replicates
    var_se = math.sqrt(max(mu4 - exp_var**2 * (R - 3) / (R - 1), 0.0) / R)
    return VarianceLawCheck(
        statistic=d,
        p_value=p,
        mean=float(s2.mean()),
        mean_stderr=math.sqrt(exp_var / R),
        variance=float(s2.var(ddof=1)),
        variance_stderr=var_se,
        expected_mean=exp_mean,
        expected_variance=exp_var,
        samples=s2,
    )


@dataclass
class BoundCheck:
    empirical_mean_bias: float
    stderr: float
    lower_bound: float
    n_replicates: int
    samples: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return self.empirical_mean_bias - 2 * self.stderr >= self.lower_bound


def verify_bias_bound(
    gamma: float, sigma: float, k: int, N: int, replicates: int, seed: int, mu: float = 0.0
) -> BoundCheck:
    if replicates < 500:
        raise ValueError("use at least 500 replicates")
    q = np.array([cyclic_target_estimator(k, mu, sigma, N, gamma, rng).q_hat for rng in replicate_rngs(seed, replicates)])
    bias = q - gamma * mu
    return BoundCheck(
        empirical_mean_bias=float(bias.mean()),
        stderr=float(bias.std(ddof=1) / math.sqrt(replicates)),
        lower_bound=overestimation_lower_bound(gamma, sigma, k, N),
        n_replicates=replicates,
        samples=q,
    )
