import numpy as np
import pytest
from scipy import stats

from addq import oracle
from addq.envs import (
    BanditSpec,
    Gaussian,
    GridWorldSpec,
    Point,
    TwoPoint,
    bandit_model,
    episode_runner,
    gridworld_model,
    sample_transition,
)

GRID = gridworld_model(GridWorldSpec())
BANDIT = bandit_model(BanditSpec())
UP, DOWN, LEFT, RIGHT = range(4)


@pytest.mark.parametrize("model", [GRID, BANDIT], ids=["grid", "bandit"])
def test_branch_probabilities_sum_to_one(model):
    for branches in model.transitions.values():
        assert abs(sum(b.prob for b in branches) - 1.0) <= 1e-12


def test_bandit_layout():
    assert BANDIT.actions_per_state == (3, 10, 5, 0)
    for a in range(10):
        (b,) = BANDIT.transitions[(1, a)]
        assert b.terminal and b.reward == Gaussian(-0.1, 5.0)
    spec = BanditSpec(k1=1, sigma1=0.0)
    q = oracle.value_iteration(bandit_model(spec))
    assert q[1, 0] == pytest.approx(spec.mu1)


def test_grid_rewards_follow_destination():
    (b,) = GRID.transitions[(9, DOWN)]
    assert b.next_state == 13 and b.terminal and b.reward == Point(1.0)
    (b,) = GRID.transitions[(4, UP)]
    assert b.next_state == 0 and b.terminal and b.reward == Point(0.65)
    (b,) = GRID.transitions[(6, DOWN)]
    assert b.reward == TwoPoint(-2.1, 0.5, 2.0, 0.5)
    assert b.reward.mean == pytest.approx(-0.05)
    (b,) = GRID.transitions[(5, RIGHT)]
    assert b.reward.mean == pytest.approx(0.0)
    # bump into the wall from a gray cell keeps the gray reward
    (b,) = GRID.transitions[(15, RIGHT)]
    assert b.next_state == 15 and b.reward.mean == pytest.approx(-0.05)
    (b,) = GRID.transitions[(3, UP)]
    assert b.next_state == 3 and b.reward == TwoPoint(-0.05, 0.5, 0.05, 0.5)


def test_grid_terminals_have_no_actions():
    assert GRID.actions_per_state[0] == GRID.actions_per_state[13] == 0
    assert sum(GRID.actions_per_state) == 14 * 4


def test_spec_validation():
    with pytest.raises(ValueError):
        BanditSpec(k1=0)
    with pytest.raises(ValueError):
        GridWorldSpec(gray=frozenset({3}))
    with pytest.raises(ValueError):
        TwoPoint(0.0, 0.6, 1.0, 0.6)


def test_sample_transition_deterministic_branch():
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert sample_transition(GRID, 9, DOWN, rng) == (1.0, 13, True)
    with pytest.raises(IndexError):
        sample_transition(GRID, 13, 0, rng)
    with pytest.raises(IndexError):
        sample_transition(BANDIT, 2, 7, rng)


def test_two_point_sampling_mean():
    rng = np.random.default_rng(1)
    r = np.array([sample_transition(GRID, 6, DOWN, rng)[0] for _ in range(100_000)])
    assert set(np.unique(r)) == {-2.1, 2.0}
    se = r.std() / np.sqrt(r.size)
    assert abs(r.mean() + 0.05) < 3 * se


def test_gaussian_sampling_moments():
    rng = np.random.default_rng(2)
    r = np.array([sample_transition(BANDIT, 1, 0, rng)[0] for _ in range(100_000)])
    n = r.size
    assert abs(r.mean() + 0.1) < 3 * 5.0 / np.sqrt(n)
    # standard error of a sample variance of a Gaussian: sigma^2 sqrt(2 / (n - 1))
    assert abs(r.var(ddof=1) - 25.0) < 3 * 25.0 * np.sqrt(2 / (n - 1))


def test_transition_frequencies_chi_square():
    from addq.envs import Branch, TabularModel

    model = TabularModel(
        n_states=4,
        actions_per_state=(1, 0, 0, 0),
        gamma=0.9,
        transitions={(0, 0): (Branch(0.2, Point(0.0), 1, True), Branch(0.5, Point(1.0), 2, True), Branch(0.3, Point(2.0), 3, True))},
        start_state=0,
        terminal_states=frozenset({1, 2, 3}),
    )
    rng = np.random.default_rng(3)
    nxt = np.array([sample_transition(model, 0, 0, rng)[1] for _ in range(100_000)])
    counts = np.bincount(nxt, minlength=4)[1:]
    assert stats.chisquare(counts, 100_000 * np.array([0.2, 0.5, 0.3])).pvalue > 0.001


def test_episode_runner():
    rng = np.random.default_rng(4)
    uniform = lambda s, g: int(g.integers(0, BANDIT.actions_per_state[s]))
    assert all(len(episode_runner(BANDIT, uniform, 0, 100, rng)) <= 2 for _ in range(200))
    assert episode_runner(GRID, uniform, 3, 0, rng) == []
    q = oracle.value_iteration(GRID)
    traj = episode_runner(GRID, oracle.greedy_policy(GRID, q), 3, 100, rng)
    assert len(traj) <= 6 and traj[-1][3] == 13


def test_model_dump_rows():
    text = BANDIT.dump().splitlines()
    assert text[0].split("\t") == ["s", "a", "prob", "reward_kind", "params", "s_next", "terminal"]
    assert len(text) - 1 == sum(len(b) for b in BANDIT.transitions.values())
    assert "1\t0\t1\tgaussian\t-0.10000000000000001,5\t3\t1" in text
