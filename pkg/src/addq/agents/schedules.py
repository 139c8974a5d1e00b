"""Step sizes, greedy selection, adaptive-beta schedules and exploration policies."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np


def stepsize(visit_count: int) -> float:
    """``1 / n`` for the n-th visit of a state-action pair."""
    if visit_count < 1:
        raise ValueError("visit count must be at least 1 when computing a step size")
    return 1.0 / visit_count


def select_greedy(values) -> int:
    """Argmax with ties broken towards the lowest index."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot select from an empty action set")
    return int(np.argmax(values))


@dataclass(frozen=True)
class BetaSchedule:
    """Piecewise-constant map from relative sample variance to the QL/DQL weight beta.

    A value ``x`` falls into the first bucket ``i`` with ``x < thresholds[i]``,
    or ``x == thresholds[i]`` when ``closed[i]`` is set; past the last
    threshold it gets ``final``.
    """

    thresholds: tuple[float, ...]
    betas: tuple[float, ...]
    closed: tuple[bool, ...]
    final: float

    def __post_init__(self):
        if not len(self.thresholds) == len(self.betas) == len(self.closed):
            raise ValueError("thresholds, betas and closed flags must align")
        if any(b >= a for a, b in zip(self.thresholds[1:], self.thresholds)):
            raise ValueError("thresholds must be strictly increasing")
        if not all(0.0 <= b <= 1.0 for b in (*self.betas, self.final)):
            raise ValueError("beta values must lie in [0, 1]")

    @classmethod
    def constant(cls, beta: float) -> "BetaSchedule":
        return cls((), (), (), float(beta))

    def __call__(self, rel_variance: float) -> float:
        for t, b, closed in zip(self.thresholds, self.betas, self.closed):
            if rel_variance < t or (closed and rel_variance == t):
                return b
        return self.final

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            np.asarray(self.thresholds, dtype=np.float64),
            np.asarray(self.betas, dtype=np.float64),
            np.asarray(self.closed, dtype=np.bool_),
        )


def _three(lo: float, hi: float, b_lo: float, b_mid: float, b_hi: float) -> BetaSchedule:
    # b_lo below lo, b_mid on [lo, hi], b_hi above hi
    return BetaSchedule((lo, hi), (b_lo, b_mid), (False, True), b_hi)


def _five(t1, t2, t3, t4, betas) -> BetaSchedule:
    # <= t1 | (t1, t2) | [t2, t3] | (t3, t4) | >= t4
    return BetaSchedule((t1, t2, t3, t4), tuple(betas[:4]), (True, False, True, False), betas[4])


_N5, _A5, _C5 = (1, 0.75, 0.5, 0.25, 0), (1, 0.75, 0.5, 0.25, 0), (0.7, 0.6, 0.5, 0.4, 0.3)

BETA_PRESETS: dict[str, BetaSchedule] = {
    "n3": _three(0.75, 1.25, 0.75, 0.5, 0.25),
    "ltn3": _three(1.25, 1.75, 0.75, 0.5, 0.25),
    "rtn3": _three(0.25, 0.75, 0.75, 0.5, 0.25),
    "a3": _three(0.99, 1.01, 1.0, 0.5, 0.0),
    "lta3": _three(1.49, 1.51, 1.0, 0.5, 0.0),
    "rta3": _three(0.49, 0.51, 1.0, 0.5, 0.0),
    "c3": _three(0.6, 1.4, 0.6, 0.5, 0.4),
    "ltc3": _three(1.1, 1.9, 0.6, 0.5, 0.4),
    "rtc3": _three(0.1, 0.9, 0.6, 0.5, 0.4),
    "n5": _five(0.25, 0.75, 1.25, 1.75, _N5),
    "ltn5": _five(0.75, 1.25, 1.75, 2.25, _N5),
    "rtn5": _five(-0.25, 0.25, 0.75, 1.25, _N5),
    "a5": _five(0.99, 0.995, 1.005, 1.01, _A5),
    "lta5": _five(1.49, 1.495, 1.505, 1.51, _A5),
    "rta5": _five(0.49, 0.495, 0.505, 0.51, _A5),
    "c5": _five(0.1, 0.7, 1.3, 1.9, _C5),
    "ltc5": _five(0.6, 1.2, 1.8, 2.4, _C5),
    "rtc5": _five(-0.4, 0.2, 0.8, 1.4, _C5),
}


def beta_schedule(spec: Union[str, float, BetaSchedule]) -> BetaSchedule:
    """Resolve a preset name, a constant, or ``"const:<beta>"`` to a schedule."""
    if isinstance(spec, BetaSchedule):
        return spec
    if isinstance(spec, (int, float)):
        return BetaSchedule.constant(spec)
    if spec.startswith("const:"):
        return BetaSchedule.constant(float(spec.split(":", 1)[1]))
    try:
        return BETA_PRESETS[spec]
    except KeyError:
        raise ValueError(f"unknown beta schedule {spec!r}") from None


def beta_from_rel_variance(s2_rel: float, schedule: BetaSchedule) -> float:
    return schedule(s2_rel)


def relative_variance(var_a: np.ndarray, var_b: np.ndarray) -> np.ndarray:
    """Per-action ``S2_{s,a} / S2_s`` from the two tables' sample variances at one state.

    ``S2_{s,a}`` averages the A and B variances; ``S2_s`` averages over
    actions.  A state with no spread at all maps every action to 1.
    """
    pooled = 0.5 * (np.asarray(var_a, dtype=float) + np.asarray(var_b, dtype=float))
    scale = pooled.mean()
    if scale <= 0.0:
        return np.ones_like(pooled)
    return pooled / scale


# ---------------------------------------------------------------------------
# Exploration

EPS_GREEDY, UNIFORM = 0, 1


@dataclass(frozen=True)
class EpsGreedyLinear:
    eps_start: float = 1.0
    eps_end: float = 0.1
    decay_steps: int = 10_000

    kind = EPS_GREEDY

    def __post_init__(self):
        if not 0.0 <= self.eps_end <= self.eps_start <= 1.0:
            raise ValueError("need 0 <= eps_end <= eps_start <= 1")
        if self.decay_steps < 1:
            raise ValueError("decay_steps must be positive")

    def epsilon(self, step: int) -> float:
        return max(self.eps_end, self.eps_start - (self.eps_start - self.eps_end) * step / self.decay_steps)


@dataclass(frozen=True)
class Uniform:
    kind = UNIFORM

    def epsilon(self, step: int) -> float:
        return 1.0


ExplorationPolicy = Union[EpsGreedyLinear, Uniform]


def act(policy: ExplorationPolicy, values, step: int, rng: np.random.Generator) -> int:
    """Draw one behaviour action.

    Consumes one uniform for the explore/exploit coin (eps-greedy only) and
    one integer draw when exploring, in that order; the jitted training loop
    follows the same order.
    """
    n = len(values)
    if policy.kind == UNIFORM:
        return int(rng.integers(0, n))
    if rng.random() < policy.epsilon(step):
        return int(rng.integers(0, n))
    return select_greedy(values)
