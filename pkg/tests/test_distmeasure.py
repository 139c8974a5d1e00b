import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from addq.distmeasure import (
    AtomList,
    CategoricalDist,
    QuantileDist,
    Support,
    cramer_distance,
    mean,
    mixture,
    project_categorical,
    project_quantile,
    pushforward,
    sample_variance,
    wasserstein1,
)

SUP = Support(-3.0, 3.0, 51)

probs = st.integers(2, 8).flatmap(
    lambda n: arrays(np.float64, n, elements=st.floats(0.01, 1.0)).map(lambda w: w / w.sum())
)


@st.composite
def atom_lists(draw, lo=-5.0, hi=5.0, max_atoms=8):
    n = draw(st.integers(1, max_atoms))
    locs = draw(arrays(np.float64, n, elements=st.floats(lo, hi)))
    w = draw(arrays(np.float64, n, elements=st.floats(0.01, 1.0)))
    return AtomList(locs, w / w.sum())


@st.composite
def categoricals(draw, support=SUP):
    w = draw(arrays(np.float64, support.m, elements=st.floats(0.0, 1.0)))
    w[draw(st.integers(0, support.m - 1))] += 0.1
    return CategoricalDist(support, w / w.sum())


def test_support_layout():
    assert SUP.spacing == pytest.approx(0.12)
    assert SUP.atoms[0] == -3.0 and SUP.atoms[-1] == pytest.approx(3.0)
    with pytest.raises(ValueError):
        Support(1.0, 1.0, 5)
    with pytest.raises(ValueError):
        Support(0.0, 1.0, 1)


def test_pushforward_examples():
    d0 = CategoricalDist.point_mass(SUP, 0.0)
    out = pushforward(d0, 0.0, 1.0)
    assert mean(out) == 0.0 and sample_variance(out) == 0.0
    assert mean(pushforward(AtomList([0.0], [1.0]), 1.0, 0.9)) == 1.0
    two = AtomList([-3.0, 3.0], [0.5, 0.5])
    p = pushforward(two, 0.5, 0.9)
    np.testing.assert_allclose(p.locations, [-2.2, 3.2])
    np.testing.assert_allclose(p.weights, [0.5, 0.5])


def test_project_categorical_examples():
    d = project_categorical(AtomList([SUP.atoms[7]], [1.0]), SUP)
    assert d.weights[7] == pytest.approx(1.0)
    half = project_categorical(AtomList([-2.94], [1.0]), SUP)
    assert half.weights[0] == pytest.approx(0.5) and half.weights[1] == pytest.approx(0.5)
    assert project_categorical(AtomList([-7.0], [1.0]), SUP).weights[0] == 1.0
    assert project_categorical(AtomList([9.0], [1.0]), SUP).weights[-1] == 1.0


def test_project_quantile_examples():
    q = QuantileDist([-1.0, 0.0, 2.0])
    np.testing.assert_array_equal(project_quantile(q, 3).locations, q.locations)
    np.testing.assert_array_equal(project_quantile(AtomList([0.0, 1.0], [0.5, 0.5]), 2).locations, [0.0, 1.0])
    np.testing.assert_array_equal(project_quantile(AtomList([5.0], [1.0]), 3).locations, [5.0, 5.0, 5.0])
    with pytest.raises(ValueError):
        QuantileDist([1.0, 0.0])


def test_mixture_examples():
    a = CategoricalDist.point_mass(SUP, SUP.atoms[0])
    b = CategoricalDist.point_mass(SUP, SUP.atoms[1])
    assert np.array_equal(mixture(a, b, 1.0).weights, a.weights)
    assert np.array_equal(mixture(a, b, 0.0).weights, b.weights)
    np.testing.assert_allclose(mixture(a, b, 0.5).weights[:3], [0.5, 0.5, 0.0], atol=1e-12)
    qa, qb = QuantileDist([0.0, 1.0]), QuantileDist([2.0, 3.0])
    assert mixture(qa, qb, 1.0) is qa and mixture(qa, qb, 0.0) is qb
    m = mixture(qa, qb, 0.25)
    assert mean(m) == pytest.approx(0.25 * 0.5 + 0.75 * 2.5)
    with pytest.raises(ValueError):
        mixture(qa, qb, 1.5)
    with pytest.raises(ValueError):
        mixture(a, CategoricalDist.point_mass(Support(-1, 1, 5), 0.0), 0.5)


def test_moment_examples():
    assert mean(AtomList([0.0], [1.0])) == 0.0
    assert mean(AtomList([1.0, 3.0], [0.25, 0.75])) == 2.5
    assert mean(AtomList([-1.0, 1.0], [0.5, 0.5])) == 0.0
    assert sample_variance(AtomList([4.2], [1.0])) == 0.0
    assert sample_variance(AtomList([-1.0, 1.0], [0.5, 0.5])) == 1.0
    assert sample_variance(AtomList([0.0, 4.0], [0.25, 0.75])) == 3.0


def test_cramer_examples():
    d = AtomList([0.0, 1.0], [0.3, 0.7])
    assert cramer_distance(d, d) == 0.0
    assert cramer_distance(AtomList([0.0], [1.0]), AtomList([1.0], [1.0])) == pytest.approx(1.0)


def test_weight_checks():
    with pytest.raises(ValueError):
        AtomList([0.0, 1.0], [0.5, 0.6])
    with pytest.raises(ValueError):
        AtomList([0.0, 1.0], [-0.5, 1.5])
    # tiny drift is renormalized, not rejected
    a = AtomList([0.0, 1.0], [0.5, 0.5 + 1e-9])
    assert abs(a.weights.sum() - 1.0) < 1e-15


@given(categoricals(), categoricals())
def test_cramer_symmetry(d1, d2):
    assert cramer_distance(d1, d2) == pytest.approx(cramer_distance(d2, d1), abs=1e-15)


@given(atom_lists(), atom_lists(), st.floats(0.0, 1.0))
def test_projection_linearity(a, b, beta):
    pa, pb = project_categorical(a, SUP), project_categorical(b, SUP)
    mixed = project_categorical(mixture(a, b, beta), SUP)
    np.testing.assert_allclose(mixed.weights, beta * pa.weights + (1 - beta) * pb.weights, atol=1e-12)


@given(atom_lists(lo=-3.0, hi=3.0))
def test_projection_preserves_mean_on_support(a):
    assert mean(project_categorical(a, SUP)) == pytest.approx(mean(a), abs=1e-10)


@given(atom_lists(lo=-10.0, hi=10.0), st.floats(-2.0, 2.0), st.floats(0.05, 1.0), st.floats(0.0, 1.0))
def test_weights_sum_to_one(a, r, g, beta):
    c = project_categorical(pushforward(a, r, g), SUP)
    assert abs(c.weights.sum() - 1.0) <= 1e-12
    mixed = mixture(c, CategoricalDist.point_mass(SUP, r), beta)
    assert abs(mixed.weights.sum() - 1.0) <= 1e-12


@given(categoricals(), categoricals(), st.floats(-1.0, 1.0), st.floats(0.05, 1.0))
def test_sqrt_gamma_contraction(d1, d2, r, g):
    t1 = project_categorical(pushforward(d1, r, g), SUP)
    t2 = project_categorical(pushforward(d2, r, g), SUP)
    assert cramer_distance(t1, t2) <= math.sqrt(g) * cramer_distance(d1, d2) + 1e-10


@given(atom_lists(max_atoms=4), st.integers(1, 3))
def test_quantile_projection_is_w1_optimal(a, m):
    best = wasserstein1(project_quantile(a, m), a)
    # optimal equal-weight locations can always be taken among the atoms
    cands = np.unique(a.locations)
    brute = min(wasserstein1(QuantileDist(sorted(c)), a) for c in itertools.combinations_with_replacement(cands, m))
    assert best <= brute + 1e-12
    # and nothing on a finer grid does better
    grid = np.linspace(a.locations.min(), a.locations.max(), 9)
    fine = min(wasserstein1(QuantileDist(sorted(c)), a) for c in itertools.combinations_with_replacement(grid, m))
    assert best <= fine + 1e-12
