import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from addq import oracle
from addq.distmeasure import CategoricalDist, Support
from addq.envs import BanditSpec, Branch, GridWorldSpec, Point, TabularModel, TwoPoint, bandit_model, gridworld_model

DATA = Path(__file__).parent / "data"
GRID = gridworld_model(GridWorldSpec())
BANDIT = bandit_model(BanditSpec())
SUP = Support(-3.0, 3.0, 51)
WIDE = Support(-24.0, 24.0, 401)
Q_GRID = oracle.value_iteration(GRID)
PI_GRID = oracle.greedy_policy(GRID, Q_GRID)


def test_bandit_q_star():
    q = oracle.value_iteration(BANDIT)
    np.testing.assert_allclose(q[0, :3], [-0.09, 0.09, 0.0], atol=1e-10)
    np.testing.assert_allclose(q[1, :10], -0.1, atol=1e-12)
    np.testing.assert_allclose(q[2, :5], 0.1, atol=1e-12)


def test_zero_reward_mdp():
    spec = GridWorldSpec(goal_reward=0.0, fake_goal_reward=0.0, gray_rewards=(0.0, 0.0), white_rewards=(0.0, 0.0))
    assert np.all(oracle.value_iteration(gridworld_model(spec)) == 0.0)


def test_grid_q_star_spot_values():
    assert Q_GRID[9, 1] == pytest.approx(1.0, abs=1e-10)
    assert Q_GRID[4, 0] == pytest.approx(0.65, abs=1e-10)
    assert Q_GRID[3].max() == pytest.approx(0.9**4, abs=1e-10)


@pytest.mark.parametrize(
    "model,golden", [(GRID, "gridworld_qstar.tsv"), (BANDIT, "bandit_qstar.tsv")], ids=["grid", "bandit"]
)
def test_golden_q_star(model, golden, tmp_path):
    q = oracle.value_iteration(model)
    oracle.write_qstar_tsv(tmp_path / "q.tsv", model, q)
    assert (tmp_path / "q.tsv").read_text() == (DATA / golden).read_text()
    rows = oracle.read_qstar_tsv(DATA / golden)
    assert len(rows) == len(model.pairs())


def test_value_iteration_residuals():
    res = []
    q = oracle.value_iteration(GRID, tol=1e-10, residuals=res)
    assert all(b <= a for a, b in zip(res, res[1:]))
    assert np.max(np.abs(oracle.bellman_optimality(GRID, q) - q)) < 1e-10


def test_policy_evaluation_agrees_with_value_iteration():
    np.testing.assert_allclose(oracle.policy_evaluation(GRID, PI_GRID), Q_GRID, atol=1e-9)


def test_bias_report_examples():
    rep = oracle.bias_report(GRID, Q_GRID, Q_GRID)
    assert rep.summed_abs_bias == 0.0 and np.all(rep.bias == 0.0)
    off = Q_GRID.copy()
    off[5, 2] -= 0.3
    assert oracle.bias_report(GRID, off, Q_GRID).summed_abs_bias == pytest.approx(0.3)
    with pytest.raises(ValueError):
        oracle.bias_report(GRID, Q_GRID[:3], Q_GRID)


@given(st.floats(-5.0, 5.0), st.integers(0, 2**31))
def test_argmax_invariance(c, seed):
    est = Q_GRID + np.random.default_rng(seed).normal(scale=0.1, size=Q_GRID.shape)
    a = oracle.bias_report(GRID, est, Q_GRID)
    b = oracle.bias_report(GRID, est + c, Q_GRID)
    assert np.array_equal(a.agreement, b.agreement)
    n_pairs = len(GRID.pairs())
    c_only = oracle.bias_report(GRID, Q_GRID + c, Q_GRID)
    assert c_only.summed_abs_bias == pytest.approx(abs(c) * n_pairs, rel=1e-9, abs=1e-9)
    assert abs(c_only.summed_abs_bias - np.abs(c_only.bias[GRID.action_mask]).sum()) <= 1e-12


def test_fixed_point_one_step():
    model = TabularModel(
        n_states=2,
        actions_per_state=(1, 0),
        gamma=0.9,
        transitions={(0, 0): (Branch(1.0, Point(SUP.atoms[30]), 1, True),)},
        start_state=0,
        terminal_states=frozenset({1}),
    )
    eta = oracle.categorical_fixed_point(model, np.array([0, -1]), SUP)
    assert eta[0, 0, 30] == pytest.approx(1.0, abs=1e-12)


def test_fixed_point_rejects_gaussian():
    with pytest.raises(ValueError):
        oracle.categorical_fixed_point(BANDIT, np.array([1, 0, 0, -1]), SUP)


def test_fixed_point_contraction():
    dist = []
    oracle.categorical_fixed_point(GRID, PI_GRID, SUP, distances=dist)
    ratios = [b / a for a, b in zip(dist, dist[1:]) if a > 0]
    assert all(r <= math.sqrt(0.9) + 1e-12 for r in ratios)


def test_fixed_point_mean_on_support():
    eta = oracle.categorical_fixed_point(GRID, PI_GRID, WIDE)
    means = oracle.categorical_means(WIDE, eta)
    q_pi = oracle.policy_evaluation(GRID, PI_GRID)
    assert np.max(np.abs(means - q_pi)[GRID.action_mask]) < 1e-10


def test_fixed_point_mean_distortion_default_support():
    # worst-case mean distortion with Support(-3, 3, 51), as the invariant states it
    eta = oracle.categorical_fixed_point(GRID, PI_GRID, SUP)
    means = oracle.categorical_means(SUP, eta)
    q_pi = oracle.policy_evaluation(GRID, PI_GRID)
    assert np.max(np.abs(means - q_pi)[GRID.action_mask]) < 0.01


def test_optimal_policy_is_unique():
    gaps = oracle.action_gaps(GRID, Q_GRID)
    live = [s for s in range(16) if GRID.actions_per_state[s]]
    assert all(gaps[s] > 1e-6 for s in live)


def test_optimal_action_sets_include_ties():
    best = oracle.optimal_actions(GRID, Q_GRID)
    assert best[3] == {1, 2}  # down and left from S tie at 0.9^4
    assert best[9] == {1}


def test_two_point_fixed_point_mean():
    # a two-point reward on-grid: the fixed point is exactly the reward law
    model = TabularModel(
        n_states=2,
        actions_per_state=(1, 0),
        gamma=0.9,
        transitions={(0, 0): (Branch(1.0, TwoPoint(SUP.atoms[10], 0.25, SUP.atoms[40], 0.75), 1, True),)},
        start_state=0,
        terminal_states=frozenset({1}),
    )
    eta = oracle.categorical_fixed_point(model, np.array([0, -1]), SUP)
    assert eta[0, 0, 10] == pytest.approx(0.25) and eta[0, 0, 40] == pytest.approx(0.75)
    assert CategoricalDist(SUP, eta[0, 0]).weights.sum() == pytest.approx(1.0, abs=1e-12)
