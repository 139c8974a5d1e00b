"""Jitted update rules and the training loop.

Every learner keeps its state in a :class:`Tables` bundle with a leading
estimator axis ``K`` (1 for QL, 2 for the double variants, K for
ensembles).  For distributional representations ``q`` caches the mean and
``var`` the sample variance of ``dist[k, s, a]``, refreshed on every write.

Random draws happen in a fixed order per update (coin or table index first,
then any subset draws) so runs are reproducible from the Generator state.
"""

from typing import NamedTuple

import numba
import numpy as np

from ..envs import step_kernel

ALG_QL, ALG_DQL, ALG_CLIPPED, ALG_WDQ, ALG_MAXMIN, ALG_EBQL, ALG_REDQ = 0, 1, 2, 3, 4, 5, 6
ALG_DIST_QL, ALG_DIST_DQL, ALG_ADDQ = 7, 8, 9
REP_SCALAR, REP_CATEGORICAL, REP_QUANTILE = 0, 1, 2

RENORM_TOL = 1e-12
HARD_TOL = 1e-6

# info slots written by every update
INFO_TABLE, INFO_ACTION, INFO_BETA, INFO_BOOTSTRAP = 0, 1, 2, 3


class Tables(NamedTuple):
    q: np.ndarray  # float64[K, S, A]
    var: np.ndarray  # float64[K, S, A]
    dist: np.ndarray  # float64[K, S, A, M]; M = 1 unused slot for scalar learners
    counts: np.ndarray  # int64[K, S, A]
    target: np.ndarray  # float64[M]; last distributional target
    info: np.ndarray  # float64[4]; chosen table, greedy next action, beta, scalar bootstrap


class KernelParams(NamedTuple):
    alg: int
    rep: int
    gamma: float
    vmin: float
    vmax: float
    dz: float
    theta: np.ndarray
    beta_thr: np.ndarray
    beta_val: np.ndarray
    beta_closed: np.ndarray
    beta_final: float
    wdq_c: float
    subset: int


@numba.njit(cache=True)
def greedy(values, n):
    best = 0
    bv = values[0]
    for i in range(1, n):
        if values[i] > bv:
            bv = values[i]
            best = i
    return best


@numba.njit(cache=True)
def argmin(values, n):
    best = 0
    bv = values[0]
    for i in range(1, n):
        if values[i] < bv:
            bv = values[i]
            best = i
    return best


@numba.njit(cache=True)
def beta_lookup(x, thr, val, closed, final):
    for i in range(thr.shape[0]):
        if x < thr[i] or (closed[i] and x == thr[i]):
            return val[i]
    return final


@numba.njit(cache=True)
def rel_variance(var, s, a, n):
    """``S2_rel(s, a)`` pooled over the first two tables; 1 when the state has no spread."""
    total = 0.0
    for b in range(n):
        total += 0.5 * (var[0, s, b] + var[1, s, b])
    scale = total / n
    if scale <= 0.0:
        return 1.0
    return 0.5 * (var[0, s, a] + var[1, s, a]) / scale


@numba.njit(cache=True)
def project_atoms(z, w, vmin, vmax, dz, out):
    """Cramer projection of atoms ``(z, w)`` onto the grid ``vmin + i * dz``."""
    m = out.shape[0]
    out[:] = 0.0
    for i in range(z.shape[0]):
        if w[i] == 0.0:
            continue
        x = min(max(z[i], vmin), vmax)
        b = (x - vmin) / dz
        lo = int(np.floor(b))
        if lo > m - 2:
            lo = m - 2
        frac = b - lo
        out[lo] += w[i] * (1.0 - frac)
        out[lo + 1] += w[i] * frac


@numba.njit(cache=True)
def project_quantiles(z, w, out):
    """Quantile-midpoint projection of atoms ``(z, w)`` onto ``out.shape[0]`` equal atoms."""
    m = out.shape[0]
    order = np.argsort(z, kind="mergesort")
    cum = 0.0
    j = 0
    n = z.shape[0]
    for i in range(m):
        tau = (2.0 * i + 1.0) / (2.0 * m)
        while j < n - 1 and cum + w[order[j]] < tau - RENORM_TOL:
            cum += w[order[j]]
            j += 1
        out[i] = z[order[j]]


@numba.njit(cache=True)
def _renormalize(p):
    total = p.sum()
    drift = abs(total - 1.0)
    if drift > HARD_TOL:
        raise ValueError("categorical weights drifted away from 1")
    if drift > RENORM_TOL:
        p /= total


@numba.njit(cache=True)
def _refresh_moments(tables, params, k, s, a):
    d = tables.dist[k, s, a]
    if params.rep == REP_CATEGORICAL:
        mu = 0.0
        for i in range(d.shape[0]):
            mu += d[i] * params.theta[i]
        v = 0.0
        for i in range(d.shape[0]):
            v += d[i] * (params.theta[i] - mu) ** 2
    else:
        m = d.shape[0]
        mu = 0.0
        for i in range(m):
            mu += d[i]
        mu /= m
        v = 0.0
        for i in range(m):
            v += (d[i] - mu) ** 2
        v /= m
    tables.q[k, s, a] = mu
    tables.var[k, s, a] = v


@numba.njit(cache=True)
def _move_scalar(tables, k, s, a, target):
    tables.counts[k, s, a] += 1
    alpha = 1.0 / tables.counts[k, s, a]
    tables.q[k, s, a] = (1.0 - alpha) * tables.q[k, s, a] + alpha * target


@numba.njit(cache=True)
def _maxmin_value(q, members, s, n):
    best = -np.inf
    for b in range(n):
        lo = np.inf
        for j in members:
            if q[j, s, b] < lo:
                lo = q[j, s, b]
        if lo > best:
            best = lo
    return best


@numba.njit(cache=True)
def scalar_update(tables, params, n_actions, s, a, r, s2, terminal, rng):
    q = tables.q
    K = q.shape[0]
    n = n_actions[s2]
    g = params.gamma
    alg = params.alg
    if alg == ALG_QL:
        boot = 0.0
        if not terminal:
            z = greedy(q[0, s2], n)
            boot = q[0, s2, z]
            tables.info[INFO_ACTION] = z
        tables.info[INFO_TABLE] = 0
        tables.info[INFO_BOOTSTRAP] = boot
        _move_scalar(tables, 0, s, a, r + g * boot)
    elif alg == ALG_DQL or alg == ALG_CLIPPED or alg == ALG_WDQ:
        k = 0 if rng.random() < 0.5 else 1
        o = 1 - k
        boot = 0.0
        if not terminal:
            z = greedy(q[k, s2], n)
            tables.info[INFO_ACTION] = z
            if alg == ALG_DQL:
                boot = q[o, s2, z]
            elif alg == ALG_CLIPPED:
                boot = min(q[k, s2, z], q[o, s2, z])
            else:
                lo = argmin(q[k, s2], n)
                gap = abs(q[o, s2, z] - q[o, s2, lo])
                w = gap / (params.wdq_c + gap)
                tables.info[INFO_BETA] = w
                boot = w * q[k, s2, z] + (1.0 - w) * q[o, s2, z]
        tables.info[INFO_TABLE] = k
        tables.info[INFO_BOOTSTRAP] = boot
        _move_scalar(tables, k, s, a, r + g * boot)
    elif alg == ALG_MAXMIN:
        k = rng.integers(0, K)
        boot = 0.0
        if not terminal:
            boot = _maxmin_value(q, np.arange(K), s2, n)
        tables.info[INFO_TABLE] = k
        tables.info[INFO_BOOTSTRAP] = boot
        _move_scalar(tables, k, s, a, r + g * boot)
    elif alg == ALG_EBQL:
        k = rng.integers(0, K)
        boot = 0.0
        if not terminal:
            z = greedy(q[k, s2], n)
            tables.info[INFO_ACTION] = z
            for j in range(K):
                if j != k:
                    boot += q[j, s2, z]
            boot /= K - 1
        tables.info[INFO_TABLE] = k
        tables.info[INFO_BOOTSTRAP] = boot
        _move_scalar(tables, k, s, a, r + g * boot)
    elif alg == ALG_REDQ:
        # partial Fisher-Yates: the first `subset` entries form a uniform subset
        idx = np.arange(K)
        for i in range(params.subset):
            j = i + rng.integers(0, K - i)
            idx[i], idx[j] = idx[j], idx[i]
        boot = 0.0
        if not terminal:
            boot = _maxmin_value(q, idx[: params.subset], s2, n)
        tables.info[INFO_BOOTSTRAP] = boot
        for k in range(K):
            _move_scalar(tables, k, s, a, r + g * boot)
    else:
        raise ValueError("not a scalar algorithm")


@numba.njit(cache=True)
def distributional_target(tables, params, n_actions, k, o, r, s2, terminal, beta_mode, out):
    """Projected target for an update of table ``k`` against partner ``o``.

    beta_mode: 0 adaptive (ADDQ), 1 pinned at 1 (QL), 2 pinned at 0 (DQL).
    """
    dist = tables.dist
    m = out.shape[0]
    g = params.gamma
    if terminal:
        tables.info[INFO_BETA] = np.nan
        if params.rep == REP_CATEGORICAL:
            z = np.full(1, r)
            w = np.ones(1)
            project_atoms(z, w, params.vmin, params.vmax, params.dz, out)
        else:
            out[:] = r
        return
    n = n_actions[s2]
    z_star = greedy(tables.q[k, s2], n)
    tables.info[INFO_ACTION] = z_star
    if beta_mode == 1:
        beta = 1.0
    elif beta_mode == 2:
        beta = 0.0
    else:
        x = rel_variance(tables.var, s2, z_star, n)
        beta = beta_lookup(x, params.beta_thr, params.beta_val, params.beta_closed, params.beta_final)
    tables.info[INFO_BETA] = beta
    if params.rep == REP_CATEGORICAL:
        nu = beta * dist[k, s2, z_star] + (1.0 - beta) * dist[o, s2, z_star]
        z = r + g * params.theta
        project_atoms(z, nu, params.vmin, params.vmax, params.dz, out)
        _renormalize(out)
    else:
        if beta == 1.0 or beta == 0.0:
            src = k if beta == 1.0 else o
            for i in range(m):
                out[i] = r + g * dist[src, s2, z_star, i]
        else:
            z = np.empty(2 * m)
            w = np.empty(2 * m)
            for i in range(m):
                z[i] = r + g * dist[k, s2, z_star, i]
                w[i] = beta / m
                z[m + i] = r + g * dist[o, s2, z_star, i]
                w[m + i] = (1.0 - beta) / m
            project_quantiles(z, w, out)


@numba.njit(cache=True)
def _move_dist(tables, params, k, s, a, target):
    tables.counts[k, s, a] += 1
    alpha = 1.0 / tables.counts[k, s, a]
    d = tables.dist[k, s, a]
    m = d.shape[0]
    if params.rep == REP_CATEGORICAL:
        for i in range(m):
            d[i] = (1.0 - alpha) * d[i] + alpha * target[i]
        _renormalize(d)
    elif alpha == 1.0:
        d[:] = target
    else:
        z = np.empty(2 * m)
        w = np.empty(2 * m)
        for i in range(m):
            z[i] = d[i]
            w[i] = (1.0 - alpha) / m
            z[m + i] = target[i]
            w[m + i] = alpha / m
        project_quantiles(z, w, d)
    _refresh_moments(tables, params, k, s, a)


@numba.njit(cache=True)
def dist_update(tables, params, n_actions, s, a, r, s2, terminal, rng):
    K = tables.dist.shape[0]
    if params.alg == ALG_DIST_QL and K == 1:
        k = 0
        o = 0
    else:
        k = 0 if rng.random() < 0.5 else 1
        o = 1 - k
    mode = 0
    if params.alg == ALG_DIST_QL:
        mode = 1
    elif params.alg == ALG_DIST_DQL:
        mode = 2
    tables.info[INFO_TABLE] = k
    distributional_target(tables, params, n_actions, k, o, r, s2, terminal, mode, tables.target)
    _move_dist(tables, params, k, s, a, tables.target)


@numba.njit(cache=True)
def update(tables, params, n_actions, s, a, r, s2, terminal, rng):
    if params.rep == REP_SCALAR:
        scalar_update(tables, params, n_actions, s, a, r, s2, terminal, rng)
    else:
        dist_update(tables, params, n_actions, s, a, r, s2, terminal, rng)


@numba.njit(cache=True)
def estimate_row(tables, alg, s, n, out):
    """The learner's value estimate at ``s``: min over tables for Maxmin, else the table mean."""
    q = tables.q
    K = q.shape[0]
    for b in range(n):
        if alg == ALG_MAXMIN:
            v = np.inf
            for k in range(K):
                v = min(v, q[k, s, b])
        else:
            v = 0.0
            for k in range(K):
                v += q[k, s, b]
            v /= K
        out[b] = v


@numba.njit(cache=True)
def train_steps(tables, params, model, n_steps, loop, explore, start_state, step_cap, rng):
    """Run ``n_steps`` environment steps with one learner update each.

    ``loop`` is int64[3] = (current state, global step, steps in episode) and
    is updated in place so consecutive calls continue the same run.
    ``explore`` is float64[4] = (kind, eps_start, eps_end, decay_steps).
    """
    values = np.empty(tables.q.shape[2])
    s = loop[0]
    step = loop[1]
    ep_len = loop[2]
    for _ in range(n_steps):
        n = model.n_actions[s]
        if explore[0] == 1.0:
            a = rng.integers(0, n)
        else:
            eps = max(explore[2], explore[1] - (explore[1] - explore[2]) * step / explore[3])
            if rng.random() < eps:
                a = rng.integers(0, n)
            else:
                estimate_row(tables, params.alg, s, n, values)
                a = greedy(values, n)
        r, s2, term = step_kernel(model, s, a, rng)
        update(tables, params, model.n_actions, s, a, r, s2, term, rng)
        step += 1
        ep_len += 1
        if term or ep_len >= step_cap:
            s = start_state
            ep_len = 0
        else:
            s = s2
    loop[0] = s
    loop[1] = step
    loop[2] = ep_len


@numba.njit(cache=True)
def greedy_rollout(tables, alg, model, start_state, horizon, rng):
    """Frozen-greedy evaluation; returns (undiscounted return, first action)."""
    values = np.empty(tables.q.shape[2])
    s = start_state
    total = 0.0
    first = -1
    for t in range(horizon):
        n = model.n_actions[s]
        estimate_row(tables, alg, s, n, values)
        a = greedy(values, n)
        if t == 0:
            first = a
        r, s2, term = step_kernel(model, s, a, rng)
        total += r
        if term:
            break
        s = s2
    return total, first
