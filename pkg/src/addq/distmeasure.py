"""Finite atomic return distributions and the measure operators built on them.

Everything here is a pure function over small immutable value types.  The
learners in :mod:`addq.agents` run jitted array kernels for speed; this module
is the readable reference those kernels are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

# Float drift allowed before weights are renormalized, and the point past
# which drift means a logic error rather than rounding.
RENORM_TOL = 1e-12
HARD_TOL = 1e-6


def normalized(weights: np.ndarray) -> np.ndarray:
    """Return ``weights`` rescaled to sum to one if they drifted past RENORM_TOL."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0):
        raise ValueError("negative probability weight")
    total = weights.sum()
    drift = abs(total - 1.0)
    if drift > HARD_TOL:
        raise ValueError(f"weights sum to {total!r}, not 1")
    if drift > RENORM_TOL:
        weights = weights / total
    return weights


@dataclass(frozen=True)
class Support:
    """Evenly spaced atom locations ``theta_min = theta_0 < ... < theta_{m-1} = theta_max``."""

    theta_min: float
    theta_max: float
    m: int

    def __post_init__(self):
        if not self.theta_min < self.theta_max:
            raise ValueError("theta_min must be below theta_max")
        if self.m < 2:
            raise ValueError("a support needs at least two atoms")

    @property
    def spacing(self) -> float:
        return (self.theta_max - self.theta_min) / (self.m - 1)

    @cached_property
    def atoms(self) -> np.ndarray:
        i = np.arange(self.m)
        return self.theta_min + i * self.spacing


@dataclass(frozen=True, eq=False)
class AtomList:
    """Arbitrary finite measure ``sum_i w_i delta_{x_i}``, used as a pre-projection target."""

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        locs = np.atleast_1d(np.asarray(self.locations, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if locs.shape != w.shape or locs.ndim != 1 or locs.size == 0:
            raise ValueError("locations and weights must be equal-length, non-empty vectors")
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", normalized(w))

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        return self.locations, self.weights

    def __len__(self) -> int:
        return self.locations.size


@dataclass(frozen=True, eq=False)
class CategoricalDist:
    support: Support
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.support.m,):
            raise ValueError(f"expected {self.support.m} weights, got shape {w.shape}")
        object.__setattr__(self, "weights", normalized(w))

    @classmethod
    def point_mass(cls, support: Support, x: float) -> "CategoricalDist":
        """Projection of ``delta_x`` onto ``support``."""
        return project_categorical(AtomList([x], [1.0]), support)

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        return self.support.atoms, self.weights


@dataclass(frozen=True, eq=False)
class QuantileDist:
    """Equal-weight measure ``(1/m) sum_i delta_{theta_i}`` with sorted free locations."""

    locations: np.ndarray

    def __post_init__(self):
        locs = np.atleast_1d(np.asarray(self.locations, dtype=float))
        if locs.ndim != 1 or locs.size == 0:
            raise ValueError("need at least one location")
        if np.any(np.diff(locs) < 0):
            raise ValueError("quantile locations must be sorted")
        object.__setattr__(self, "locations", locs)

    @property
    def m(self) -> int:
        return self.locations.size

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        return self.locations, np.full(self.m, 1.0 / self.m)


FiniteDistribution = Union[CategoricalDist, QuantileDist, AtomList]


def pushforward(d: FiniteDistribution, r: float, gamma: float) -> AtomList:
    """Law of ``r + gamma * Z`` for ``Z ~ d``."""
    locs, w = d.atoms()
    return AtomList(r + gamma * locs, w)


def project_categorical(atoms: FiniteDistribution, support: Support) -> CategoricalDist:
    """Cramer projection: split each atom's mass between its two grid neighbours.

    Atoms outside ``[theta_min, theta_max]`` are clamped to the boundary atom.
    """
    locs, w = atoms.atoms()
    m = support.m
    b = (np.clip(locs, support.theta_min, support.theta_max) - support.theta_min) / support.spacing
    lower = np.minimum(np.floor(b).astype(np.int64), m - 2)
    frac = b - lower
    out = np.bincount(lower, w * (1.0 - frac), minlength=m)
    out += np.bincount(lower + 1, w * frac, minlength=m)
    return CategoricalDist(support, out)


def project_quantile(atoms: FiniteDistribution, m: int) -> QuantileDist:
    """1-Wasserstein projection onto m equal-weight atoms at the quantile midpoints.

    Location ``i`` is the smallest atom whose cumulative weight reaches
    ``(2i + 1) / (2m)``.
    """
    if m < 1:
        raise ValueError("m must be positive")
    locs, w = atoms.atoms()
    order = np.argsort(locs, kind="stable")
    locs, cum = locs[order], np.cumsum(w[order])
    taus = (2 * np.arange(m) + 1) / (2 * m)
    idx = np.searchsorted(cum, taus - RENORM_TOL, side="left")
    return QuantileDist(locs[np.minimum(idx, locs.size - 1)])


def mixture(d_a: FiniteDistribution, d_b: FiniteDistribution, beta: float) -> FiniteDistribution:
    """The measure ``beta * d_a + (1 - beta) * d_b``.

    Categorical inputs on a shared support stay categorical; anything else
    becomes an AtomList with zero-weight components dropped.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if isinstance(d_a, CategoricalDist) or isinstance(d_b, CategoricalDist):
        if not (isinstance(d_a, CategoricalDist) and isinstance(d_b, CategoricalDist)):
            raise TypeError("cannot mix categorical with a non-categorical distribution")
        if d_a.support != d_b.support:
            raise ValueError("categorical mixture requires a shared support")
        return CategoricalDist(d_a.support, beta * d_a.weights + (1.0 - beta) * d_b.weights)
    if beta == 1.0:
        return d_a
    if beta == 0.0:
        return d_b
    la, wa = d_a.atoms()
    lb, wb = d_b.atoms()
    return AtomList(np.concatenate([la, lb]), np.concatenate([beta * wa, (1.0 - beta) * wb]))


def mean(d: FiniteDistribution) -> float:
    locs, w = d.atoms()
    return float(np.dot(w, locs))


def sample_variance(d: FiniteDistribution) -> float:
    """Weighted second central moment ``sum_i w_i (x_i - M)^2``."""
    locs, w = d.atoms()
    mu = np.dot(w, locs)
    return float(np.dot(w, (locs - mu) ** 2))


def cdf_on_grid(d: FiniteDistribution, grid: np.ndarray) -> np.ndarray:
    """Right-continuous CDF of ``d`` evaluated at each point of ``grid``."""
    locs, w = d.atoms()
    order = np.argsort(locs, kind="stable")
    cum = np.concatenate([[0.0], np.cumsum(w[order])])
    return cum[np.searchsorted(locs[order], grid, side="right")]


def cramer_distance(d1: FiniteDistribution, d2: FiniteDistribution) -> float:
    """Exact l2 distance between CDFs, integrating the piecewise-constant gap."""
    grid = np.unique(np.concatenate([d1.atoms()[0], d2.atoms()[0]]))
    if grid.size < 2:
        return 0.0
    gap = cdf_on_grid(d1, grid[:-1]) - cdf_on_grid(d2, grid[:-1])
    return float(np.sqrt(np.sum(gap**2 * np.diff(grid))))


def wasserstein1(d1: FiniteDistribution, d2: FiniteDistribution) -> float:
    """``int |F1 - F2| dz``; used to check the quantile projection."""
    grid = np.unique(np.concatenate([d1.atoms()[0], d2.atoms()[0]]))
    if grid.size < 2:
        return 0.0
    gap = cdf_on_grid(d1, grid[:-1]) - cdf_on_grid(d2, grid[:-1])
    return float(np.sum(np.abs(gap) * np.diff(grid)))
