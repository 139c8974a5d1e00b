"""Exact ground truth: Q* by value iteration, projected categorical fixed points, bias reports."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .distmeasure import AtomList, CategoricalDist, Support, cramer_distance, project_categorical
from .envs import Gaussian, TabularModel

MAX_SWEEPS = 1_000_000


def bellman_optimality(model: TabularModel, q: np.ndarray) -> np.ndarray:
    """One application of T* to a padded (S, A_max) table; terminal rows stay zero."""
    v = np.array([q[s, : model.actions_per_state[s]].max() if model.actions_per_state[s] else 0.0 for s in range(model.n_states)])
    out = np.zeros_like(q)
    for (s, a), branches in model.transitions.items():
        out[s, a] = sum(b.prob * (b.reward.mean + (0.0 if b.terminal else model.gamma * v[b.next_state])) for b in branches)
    return out


def value_iteration(model: TabularModel, tol: float = 1e-10, residuals: list | None = None) -> np.ndarray:
    """Q* to within ``tol`` in sup-norm.

    Stops once a sweep changes Q by less than ``tol * (1 - gamma) / gamma``.
    Gaussian rewards enter through their means.  Pass a list as ``residuals``
    to collect the per-sweep sup-norm changes.
    """
    g = model.gamma
    if not g < 1.0:
        raise ValueError("value iteration needs gamma < 1")
    threshold = tol * (1.0 - g) / g
    q = np.zeros((model.n_states, model.max_actions))
    for _ in range(MAX_SWEEPS):
        nxt = bellman_optimality(model, q)
        delta = float(np.max(np.abs(nxt - q)))
        q = nxt
        if residuals is not None:
            residuals.append(delta)
        if delta < threshold:
            return q
    raise RuntimeError("value iteration did not converge")


def policy_evaluation(model: TabularModel, policy) -> np.ndarray:
    """Q^pi for a deterministic policy by solving the linear Bellman system directly."""
    pairs = model.pairs()
    index = {p: i for i, p in enumerate(pairs)}
    n = len(pairs)
    A = np.eye(n)
    b = np.zeros(n)
    for (s, a), i in index.items():
        for br in model.transitions[(s, a)]:
            b[i] += br.prob * br.reward.mean
            if not br.terminal:
                A[i, index[(br.next_state, int(policy[br.next_state]))]] -= model.gamma * br.prob
    sol = np.linalg.solve(A, b)
    q = np.zeros((model.n_states, model.max_actions))
    for (s, a), i in index.items():
        q[s, a] = sol[i]
    return q


def greedy_policy(model: TabularModel, q: np.ndarray) -> np.ndarray:
    """Lowest-index argmax per state; -1 for terminal states."""
    return np.array([int(np.argmax(q[s, :n])) if n else -1 for s, n in enumerate(model.actions_per_state)])


def optimal_actions(model: TabularModel, q: np.ndarray, tol: float = 1e-9) -> list[frozenset[int]]:
    """Per state, every action within ``tol`` of the best one."""
    out = []
    for s, n in enumerate(model.actions_per_state):
        if not n:
            out.append(frozenset())
            continue
        row = q[s, :n]
        out.append(frozenset(np.flatnonzero(row >= row.max() - tol).tolist()))
    return out


def action_gaps(model: TabularModel, q: np.ndarray) -> np.ndarray:
    """Best minus second-best value per state (inf with a single action, nan at terminals)."""
    gaps = np.full(model.n_states, np.nan)
    for s, n in enumerate(model.actions_per_state):
        if n == 1:
            gaps[s] = np.inf
        elif n > 1:
            top = np.sort(q[s, :n])[::-1]
            gaps[s] = top[0] - top[1]
    return gaps


def projected_policy_operator(model: TabularModel, policy, support: Support, eta: np.ndarray) -> np.ndarray:
    """Exact ``Pi_C T^pi`` applied to a (S, A_max, m) table of categorical weights."""
    theta = support.atoms
    out = np.zeros_like(eta)
    zero = CategoricalDist.point_mass(support, 0.0).weights
    for (s, a), branches in model.transitions.items():
        acc = np.zeros(support.m)
        for br in branches:
            nxt = zero if br.terminal else eta[br.next_state, int(policy[br.next_state])]
            for p_r, r in br.reward.outcomes():
                target = project_categorical(AtomList(r + model.gamma * theta, nxt), support)
                acc += br.prob * p_r * target.weights
        out[s, a] = acc
    return out


def categorical_fixed_point(
    model: TabularModel,
    policy,
    support: Support,
    tol: float = 1e-10,
    distances: list | None = None,
) -> np.ndarray:
    """Iterate the projected distributional Bellman operator to its fixed point.

    Returns (S, A_max, m) categorical weights; padding rows hold delta_0.
    ``distances`` collects the sup over pairs of the Cramer distance between
    consecutive iterates.
    """
    if not model.finite_rewards:
        raise ValueError("categorical fixed points need finitely supported rewards, not Gaussian")
    zero = CategoricalDist.point_mass(support, 0.0).weights
    eta = np.broadcast_to(zero, (model.n_states, model.max_actions, support.m)).copy()
    pairs = model.pairs()
    for _ in range(MAX_SWEEPS):
        nxt = projected_policy_operator(model, policy, support, eta)
        d = max(cramer_distance(CategoricalDist(support, nxt[p]), CategoricalDist(support, eta[p])) for p in pairs)
        eta = nxt
        if distances is not None:
            distances.append(d)
        if d < tol:
            return eta
    raise RuntimeError("categorical fixed point iteration did not converge")


@dataclass
class BiasReport:
    bias: np.ndarray  # (S, A_max), zero on padding
    summed_abs_bias: float
    agreement: np.ndarray  # per state: greedy action of the estimate is optimal under q_star

    @property
    def max_abs_bias(self) -> float:
        return float(np.max(np.abs(self.bias)))


def bias_report(model: TabularModel, q_est: np.ndarray, q_star: np.ndarray) -> BiasReport:
    q_est = np.asarray(q_est, dtype=float)
    if q_est.shape != q_star.shape:
        raise ValueError(f"shape mismatch {q_est.shape} vs {q_star.shape}")
    mask = model.action_mask
    bias = np.where(mask, q_est - q_star, 0.0)
    best = optimal_actions(model, q_star)
    agree = np.array(
        [bool(n) and int(np.argmax(q_est[s, :n])) in best[s] for s, n in enumerate(model.actions_per_state)]
    )
    return BiasReport(bias=bias, summed_abs_bias=float(np.abs(bias[mask]).sum()), agreement=agree)


def categorical_means(support: Support, eta: np.ndarray) -> np.ndarray:
    return eta @ support.atoms


def write_qstar_tsv(path: Path, model: TabularModel, q: np.ndarray) -> None:
    lines = ["state\taction\tvalue"]
    for s, a in model.pairs():
        lines.append(f"{model.state_names[s] if model.state_names else s}\t{_action_name(model, s, a)}\t{q[s, a]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_eta_tsv(path: Path, model: TabularModel, support: Support, eta: np.ndarray) -> None:
    lines = ["state\taction\t" + "\t".join(f"{x:.17g}" for x in support.atoms)]
    for s, a in model.pairs():
        lines.append(f"{s}\t{a}\t" + "\t".join(f"{p:.17g}" for p in eta[s, a]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_qstar_tsv(path: Path) -> list[tuple[str, str, float]]:
    rows = Path(path).read_text().splitlines()[1:]
    return [(r.split("\t")[0], r.split("\t")[1], float(r.split("\t")[2])) for r in rows]


def _action_name(model: TabularModel, s: int, a: int) -> str:
    names = model.action_names.get(s)
    return names[a] if names else str(a)


def has_gaussian_rewards(model: TabularModel) -> bool:
    return any(isinstance(b.reward, Gaussian) for bs in model.transitions.values() for b in bs)
