"""Tabular environments: the two-sided bandit MDP and the 4x4 stochastic grid world.

A :class:`TabularModel` is both the exact description used by the oracles and
the sampler used for learning.  ``model.compiled`` exposes a flat array view
that the jitted kernels in :mod:`addq.agents.kernels` consume.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Union

import numba
import numpy as np

POINT, TWO_POINT, GAUSSIAN = 0, 1, 2


@dataclass(frozen=True)
class Point:
    value: float

    kind = POINT

    @property
    def mean(self) -> float:
        return self.value

    @property
    def variance(self) -> float:
        return 0.0

    def params(self) -> tuple[float, ...]:
        return (self.value, 1.0, self.value, 0.0)

    def outcomes(self) -> list[tuple[float, float]]:
        return [(1.0, self.value)]


@dataclass(frozen=True)
class TwoPoint:
    v1: float
    p1: float
    v2: float
    p2: float

    kind = TWO_POINT

    def __post_init__(self):
        if min(self.p1, self.p2) < 0 or abs(self.p1 + self.p2 - 1.0) > 1e-12:
            raise ValueError("two-point reward probabilities must sum to 1")

    @property
    def mean(self) -> float:
        return self.p1 * self.v1 + self.p2 * self.v2

    @property
    def variance(self) -> float:
        mu = self.mean
        return self.p1 * (self.v1 - mu) ** 2 + self.p2 * (self.v2 - mu) ** 2

    def params(self) -> tuple[float, ...]:
        return (self.v1, self.p1, self.v2, self.p2)

    def outcomes(self) -> list[tuple[float, float]]:
        return [(self.p1, self.v1), (self.p2, self.v2)]


@dataclass(frozen=True)
class Gaussian:
    mu: float
    sigma: float

    kind = GAUSSIAN

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    @property
    def mean(self) -> float:
        return self.mu

    @property
    def variance(self) -> float:
        return self.sigma**2

    def params(self) -> tuple[float, ...]:
        return (self.mu, self.sigma, 0.0, 0.0)

    def outcomes(self):
        raise TypeError("Gaussian rewards have no finite outcome list")


RewardSpec = Union[Point, TwoPoint, Gaussian]


@dataclass(frozen=True)
class Branch:
    prob: float
    reward: RewardSpec
    next_state: int
    terminal: bool


class CompiledModel(NamedTuple):
    n_actions: np.ndarray  # int64[S]
    ptr: np.ndarray  # int64[S, A]  first branch of (s, a)
    cnt: np.ndarray  # int64[S, A]  branch count of (s, a)
    prob: np.ndarray  # float64[B]
    kind: np.ndarray  # int64[B]
    par: np.ndarray  # float64[B, 4]
    nxt: np.ndarray  # int64[B]
    term: np.ndarray  # bool[B]


@dataclass
class TabularModel:
    """Finite MDP with explicit transition branches per (state, action)."""

    n_states: int
    actions_per_state: tuple[int, ...]
    gamma: float
    transitions: dict[tuple[int, int], tuple[Branch, ...]]
    start_state: int
    terminal_states: frozenset[int] = frozenset()
    state_names: tuple[str, ...] = ()
    action_names: dict[int, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        self.actions_per_state = tuple(int(n) for n in self.actions_per_state)
        if len(self.actions_per_state) != self.n_states:
            raise ValueError("actions_per_state must list every state")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        for s in range(self.n_states):
            n = self.actions_per_state[s]
            if s in self.terminal_states:
                if n != 0:
                    raise ValueError(f"terminal state {s} must have no actions")
                continue
            if n < 1:
                raise ValueError(f"non-terminal state {s} has no actions")
            for a in range(n):
                branches = self.transitions.get((s, a))
                if not branches:
                    raise ValueError(f"missing transitions for ({s}, {a})")
                total = sum(b.prob for b in branches)
                if abs(total - 1.0) > 1e-12:
                    raise ValueError(f"branch probabilities of ({s}, {a}) sum to {total}")
                for b in branches:
                    if not 0 <= b.next_state < self.n_states:
                        raise ValueError(f"bad successor {b.next_state}")
                    if b.terminal != (b.next_state in self.terminal_states):
                        raise ValueError("branch terminal flag disagrees with the successor")

    @property
    def max_actions(self) -> int:
        return max(self.actions_per_state)

    @cached_property
    def n_actions(self) -> np.ndarray:
        return np.asarray(self.actions_per_state, dtype=np.int64)

    def pairs(self) -> list[tuple[int, int]]:
        """All valid (state, action) pairs in row-major order."""
        return [(s, a) for s in range(self.n_states) for a in range(self.actions_per_state[s])]

    @cached_property
    def action_mask(self) -> np.ndarray:
        mask = np.zeros((self.n_states, self.max_actions), dtype=bool)
        for s, a in self.pairs():
            mask[s, a] = True
        return mask

    @property
    def finite_rewards(self) -> bool:
        return all(not isinstance(b.reward, Gaussian) for bs in self.transitions.values() for b in bs)

    def expected_reward(self, s: int, a: int) -> float:
        return sum(b.prob * b.reward.mean for b in self.transitions[(s, a)])

    @cached_property
    def compiled(self) -> CompiledModel:
        S, A = self.n_states, self.max_actions
        ptr = np.zeros((S, A), dtype=np.int64)
        cnt = np.zeros((S, A), dtype=np.int64)
        flat = []
        for s, a in self.pairs():
            ptr[s, a] = len(flat)
            cnt[s, a] = len(self.transitions[(s, a)])
            flat.extend(self.transitions[(s, a)])
        return CompiledModel(
            n_actions=self.n_actions.copy(),
            ptr=ptr,
            cnt=cnt,
            prob=np.array([b.prob for b in flat], dtype=np.float64),
            kind=np.array([b.reward.kind for b in flat], dtype=np.int64),
            par=np.array([b.reward.params() for b in flat], dtype=np.float64).reshape(-1, 4),
            nxt=np.array([b.next_state for b in flat], dtype=np.int64),
            term=np.array([b.terminal for b in flat], dtype=np.bool_),
        )

    def dump(self) -> str:
        """Tab-separated table, one row per transition branch."""
        rows = ["s\ta\tprob\treward_kind\tparams\ts_next\tterminal"]
        kinds = {POINT: "point", TWO_POINT: "two_point", GAUSSIAN: "gaussian"}
        for s, a in self.pairs():
            for b in self.transitions[(s, a)]:
                params = ",".join(f"{x:.17g}" for x in _spec_fields(b.reward))
                rows.append(
                    f"{s}\t{a}\t{b.prob:.17g}\t{kinds[b.reward.kind]}\t{params}\t{b.next_state}\t{int(b.terminal)}"
                )
        return "\n".join(rows) + "\n"


def _spec_fields(reward: RewardSpec) -> tuple[float, ...]:
    if isinstance(reward, Point):
        return (reward.value,)
    if isinstance(reward, TwoPoint):
        return (reward.v1, reward.p1, reward.v2, reward.p2)
    return (reward.mu, reward.sigma)


# ---------------------------------------------------------------------------
# Two-sided bandit MDP

S0, S1, S2, BANDIT_TERMINAL = 0, 1, 2, 3
LEFT, RIGHT, DOWN = 0, 1, 2


@dataclass(frozen=True)
class BanditSpec:
    k1: int = 10
    k2: int = 5
    mu1: float = -0.1
    mu2: float = 0.1
    sigma1: float = 5.0
    sigma2: float = 1.0
    gamma: float = 0.9

    def __post_init__(self):
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError("each side needs at least one arm")
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("sigmas must be non-negative")


def bandit_model(spec: BanditSpec) -> TabularModel:
    """s0 -> {left: s1, right: s2, down: end}; every arm of s1/s2 ends with a Gaussian reward."""
    zero = Point(0.0)
    T = BANDIT_TERMINAL
    transitions = {
        (S0, LEFT): (Branch(1.0, zero, S1, False),),
        (S0, RIGHT): (Branch(1.0, zero, S2, False),),
        (S0, DOWN): (Branch(1.0, zero, T, True),),
    }
    for a in range(spec.k1):
        transitions[(S1, a)] = (Branch(1.0, Gaussian(spec.mu1, spec.sigma1), T, True),)
    for a in range(spec.k2):
        transitions[(S2, a)] = (Branch(1.0, Gaussian(spec.mu2, spec.sigma2), T, True),)
    return TabularModel(
        n_states=4,
        actions_per_state=(3, spec.k1, spec.k2, 0),
        gamma=spec.gamma,
        transitions=transitions,
        start_state=S0,
        terminal_states=frozenset({T}),
        state_names=("s0", "s1", "s2", "terminal"),
        action_names={S0: ("left", "right", "down")},
    )


# ---------------------------------------------------------------------------
# 4x4 grid world
#
#    F  1  2  S
#    4  5  6  7
#    8  9 10 11      10, 11, 14, 15 form the gray region
#   12  G 14 15

UP, DOWN_, LEFT_, RIGHT_ = 0, 1, 2, 3
_MOVES = {UP: (-1, 0), DOWN_: (1, 0), LEFT_: (0, -1), RIGHT_: (0, 1)}


@dataclass(frozen=True)
class GridWorldSpec:
    start: int = 3
    goal: int = 13
    fake_goal: int = 0
    gray: frozenset[int] = frozenset({10, 11, 14, 15})
    goal_reward: float = 1.0
    fake_goal_reward: float = 0.65
    gray_rewards: tuple[float, float] = (-2.1, 2.0)
    white_rewards: tuple[float, float] = (-0.05, 0.05)
    gamma: float = 0.9
    step_cap: int = 100

    def __post_init__(self):
        cells = {self.start, self.goal, self.fake_goal}
        if len(cells) != 3 or cells & set(self.gray):
            raise ValueError("grid regions must be disjoint")
        if not all(0 <= c < 16 for c in cells | set(self.gray)):
            raise ValueError("cell indices must lie in 0..15")
        if self.step_cap < 1:
            raise ValueError("step_cap must be positive")


def gridworld_model(spec: GridWorldSpec) -> TabularModel:
    """Deterministic moves; the reward is drawn from the region of the cell entered."""
    terminals = frozenset({spec.goal, spec.fake_goal})

    def reward_of(cell: int) -> RewardSpec:
        if cell == spec.goal:
            return Point(spec.goal_reward)
        if cell == spec.fake_goal:
            return Point(spec.fake_goal_reward)
        lo, hi = spec.gray_rewards if cell in spec.gray else spec.white_rewards
        return TwoPoint(lo, 0.5, hi, 0.5)

    transitions = {}
    for s in range(16):
        if s in terminals:
            continue
        row, col = divmod(s, 4)
        for a, (dr, dc) in _MOVES.items():
            r2, c2 = row + dr, col + dc
            nxt = r2 * 4 + c2 if 0 <= r2 < 4 and 0 <= c2 < 4 else s
            transitions[(s, a)] = (Branch(1.0, reward_of(nxt), nxt, nxt in terminals),)
    names = tuple("F" if s == spec.fake_goal else "G" if s == spec.goal else "S" if s == spec.start else str(s) for s in range(16))
    return TabularModel(
        n_states=16,
        actions_per_state=tuple(0 if s in terminals else 4 for s in range(16)),
        gamma=spec.gamma,
        transitions=transitions,
        start_state=spec.start,
        terminal_states=terminals,
        state_names=names,
        action_names={s: ("up", "down", "left", "right") for s in range(16) if s not in terminals},
    )


# ---------------------------------------------------------------------------
# Sampling


@numba.njit(cache=True)
def draw_reward(kind, par, rng):
    if kind == POINT:
        return par[0]
    if kind == TWO_POINT:
        return par[0] if rng.random() < par[1] else par[2]
    return rng.normal(par[0], par[1])


@numba.njit(cache=True)
def step_kernel(model, s, a, rng):
    start = model.ptr[s, a]
    n = model.cnt[s, a]
    b = start
    if n > 1:
        u = rng.random()
        acc = 0.0
        b = start + n - 1
        for j in range(start, start + n):
            acc += model.prob[j]
            if u < acc:
                b = j
                break
    r = draw_reward(model.kind[b], model.par[b], rng)
    return r, model.nxt[b], model.term[b]


def sample_transition(model: TabularModel, s: int, a: int, rng: np.random.Generator) -> tuple[float, int, bool]:
    if s in model.terminal_states or not 0 <= s < model.n_states:
        raise IndexError(f"state {s} cannot act")
    if not 0 <= a < model.actions_per_state[s]:
        raise IndexError(f"action {a} is invalid in state {s}")
    r, s2, term = step_kernel(model.compiled, s, a, rng)
    return float(r), int(s2), bool(term)


Policy = Union[Callable[[int, np.random.Generator], int], Sequence[int], np.ndarray]


def episode_runner(
    model: TabularModel,
    policy: Policy,
    start_state: int,
    step_cap: int,
    rng: np.random.Generator,
) -> list[tuple[int, int, float, int]]:
    """Roll out until a terminal state or ``step_cap`` steps; returns (s, a, r, s') tuples."""
    act = policy if callable(policy) else (lambda s, _rng: int(policy[s]))
    trajectory = []
    s = start_state
    for _ in range(step_cap):
        a = act(s, rng)
        r, s2, term = sample_transition(model, s, a, rng)
        trajectory.append((s, a, r, s2))
        if term:
            break
        s = s2
    return trajectory
