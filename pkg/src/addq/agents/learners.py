"""Tabular learners.

Each learner owns a :class:`~addq.agents.kernels.Tables` bundle and applies
one update per observed transition.  The heavy lifting lives in the jitted
kernels so the same code path serves unit tests and million-step runs.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from ..distmeasure import CategoricalDist, QuantileDist, Support
from . import kernels as K
from .schedules import BetaSchedule, beta_schedule


class Transition(NamedTuple):
    s: int
    a: int
    r: float
    s_next: int
    terminal: bool


@dataclass(frozen=True)
class Scalar:
    name = "scalar"


@dataclass(frozen=True)
class Categorical:
    support: Support = Support(-3.0, 3.0, 51)

    name = "categorical"


@dataclass(frozen=True)
class Quantile:
    m: int = 51

    name = "quantile"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("quantile representation needs m >= 1")


Representation = Union[Scalar, Categorical, Quantile]


class Learner:
    """Base wrapper: builds the tables and forwards updates to the kernels."""

    alg: int
    n_tables = 1
    distributional = False

    def __init__(
        self,
        n_actions,
        gamma: float,
        representation: Representation = Scalar(),
        *,
        schedule: Union[str, float, BetaSchedule] = 1.0,
        wdq_c: float = 10.0,
        subset: int = 0,
    ):
        self.n_actions = np.asarray(n_actions, dtype=np.int64)
        self.representation = representation
        if self.distributional == isinstance(representation, Scalar):
            raise ValueError(f"{type(self).__name__} cannot use a {representation.name} representation")
        S, A = self.n_actions.size, int(self.n_actions.max())
        Kt = self.n_tables
        self.schedule = beta_schedule(schedule)
        thr, val, closed = self.schedule.arrays()

        if isinstance(representation, Categorical):
            sup = representation.support
            rep, M = K.REP_CATEGORICAL, sup.m
            theta, vmin, vmax, dz = sup.atoms.copy(), sup.theta_min, sup.theta_max, sup.spacing
            init = CategoricalDist.point_mass(sup, 0.0).weights
        elif isinstance(representation, Quantile):
            rep, M = K.REP_QUANTILE, representation.m
            theta, vmin, vmax, dz = np.zeros(0), 0.0, 0.0, 1.0
            init = np.zeros(M)
        else:
            rep, M = K.REP_SCALAR, 1
            theta, vmin, vmax, dz = np.zeros(0), 0.0, 0.0, 1.0
            init = np.zeros(1)

        self.params = K.KernelParams(
            alg=self.alg,
            rep=rep,
            gamma=float(gamma),
            vmin=float(vmin),
            vmax=float(vmax),
            dz=float(dz),
            theta=theta,
            beta_thr=thr,
            beta_val=val,
            beta_closed=closed,
            beta_final=float(self.schedule.final),
            wdq_c=float(wdq_c),
            subset=int(subset),
        )
        dist = np.broadcast_to(init, (Kt, S, A, M)).copy()
        self.tables = K.Tables(
            q=np.zeros((Kt, S, A)),
            var=np.zeros((Kt, S, A)),
            dist=dist,
            counts=np.zeros((Kt, S, A), dtype=np.int64),
            target=np.zeros(M),
            info=np.full(4, np.nan),
        )
        if rep == K.REP_CATEGORICAL:
            mu = float(init @ theta)
            self.tables.q[:] = mu
            self.tables.var[:] = float(init @ (theta - mu) ** 2)

    @property
    def gamma(self) -> float:
        return self.params.gamma

    def update(self, s: int, a: int, r: float, s_next: int, terminal: bool, rng: np.random.Generator) -> None:
        info = self.tables.info
        info[K.INFO_TABLE] = info[K.INFO_ACTION] = -1
        info[K.INFO_BETA] = info[K.INFO_BOOTSTRAP] = np.nan
        K.update(self.tables, self.params, self.n_actions, s, a, float(r), s_next, bool(terminal), rng)

    def observe(self, t: Transition, rng: np.random.Generator) -> None:
        self.update(t.s, t.a, t.r, t.s_next, t.terminal, rng)

    @property
    def last_table(self) -> int:
        return int(self.tables.info[K.INFO_TABLE])

    @property
    def last_beta(self) -> float:
        return float(self.tables.info[K.INFO_BETA])

    @property
    def last_action(self) -> int:
        return int(self.tables.info[K.INFO_ACTION])

    @property
    def last_bootstrap(self) -> float:
        return float(self.tables.info[K.INFO_BOOTSTRAP])

    def values(self, s: int) -> np.ndarray:
        """Value estimates used for acting and for bias measurement at ``s``."""
        n = int(self.n_actions[s])
        out = np.zeros(self.tables.q.shape[2])
        if n:
            K.estimate_row(self.tables, self.alg, s, n, out)
        return out[:n]

    def estimate(self) -> np.ndarray:
        """(S, A_max) value estimates; padding for invalid actions is zero."""
        out = np.zeros(self.tables.q.shape[1:])
        for s in range(out.shape[0]):
            n = int(self.n_actions[s])
            if n:
                K.estimate_row(self.tables, self.alg, s, n, out[s])
        return out

    def variance(self) -> np.ndarray | None:
        """Sample variance per (s, a), averaged over tables; None for scalar learners."""
        if not self.distributional:
            return None
        return self.tables.var.mean(axis=0)

    def distribution(self, s: int, a: int, table: int = 0):
        d = self.tables.dist[table, s, a]
        if isinstance(self.representation, Categorical):
            return CategoricalDist(self.representation.support, d.copy())
        return QuantileDist(d.copy())

    def copy(self) -> "Learner":
        return copy.deepcopy(self)


class QLearning(Learner):
    alg = K.ALG_QL


class DoubleQLearning(Learner):
    alg = K.ALG_DQL
    n_tables = 2


class ClippedDoubleQ(Learner):
    alg = K.ALG_CLIPPED
    n_tables = 2


class WeightedDoubleQ(Learner):
    alg = K.ALG_WDQ
    n_tables = 2

    def __init__(self, n_actions, gamma, representation=Scalar(), *, c: float = 10.0):
        if c <= 0:
            raise ValueError("WDQ constant c must be positive")
        super().__init__(n_actions, gamma, representation, wdq_c=c)


class _Ensemble(Learner):
    def __init__(self, n_actions, gamma, representation=Scalar(), *, ensemble: int, subset: int = 0):
        if ensemble < 2:
            raise ValueError("ensembles need at least two tables")
        self.n_tables = ensemble
        super().__init__(n_actions, gamma, representation, subset=subset)


class MaxminQ(_Ensemble):
    alg = K.ALG_MAXMIN


class EnsembleBootstrappedQ(_Ensemble):
    alg = K.ALG_EBQL


class RandomizedEnsembleQ(_Ensemble):
    alg = K.ALG_REDQ

    def __init__(self, n_actions, gamma, representation=Scalar(), *, ensemble: int, subset: int):
        if not 1 <= subset <= ensemble:
            raise ValueError("REDQ subset size must lie in [1, ensemble]")
        super().__init__(n_actions, gamma, representation, ensemble=ensemble, subset=subset)


class DistributionalQ(Learner):
    """Distributional QL.  One table by default (no coin); ``tables=2`` gives
    the two-table form that flips a coin and bootstraps each table from itself."""

    alg = K.ALG_DIST_QL
    distributional = True

    def __init__(self, n_actions, gamma, representation=Categorical(), *, tables: int = 1):
        if tables not in (1, 2):
            raise ValueError("distributional QL uses one or two tables")
        self.n_tables = tables
        super().__init__(n_actions, gamma, representation)


class DistributionalDoubleQ(Learner):
    alg = K.ALG_DIST_DQL
    n_tables = 2
    distributional = True

    def __init__(self, n_actions, gamma, representation=Categorical()):
        super().__init__(n_actions, gamma, representation)


class ADDQ(Learner):
    """Adaptive distributional double QL: the target mixes the updated table
    (weight beta) with the partner table, beta read off the relative sample
    variance at the greedy next action."""

    alg = K.ALG_ADDQ
    n_tables = 2
    distributional = True

    def __init__(self, n_actions, gamma, representation=Categorical(), *, schedule="n3"):
        super().__init__(n_actions, gamma, representation, schedule=schedule)


ALGORITHMS: dict[str, type[Learner]] = {
    "ql": QLearning,
    "dql": DoubleQLearning,
    "clipped": ClippedDoubleQ,
    "wdq": WeightedDoubleQ,
    "maxmin": MaxminQ,
    "ebql": EnsembleBootstrappedQ,
    "redq": RandomizedEnsembleQ,
    "dist_ql": DistributionalQ,
    "dist_dql": DistributionalDoubleQ,
    "addq": ADDQ,
}
