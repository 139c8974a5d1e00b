"""Seeded experiment runs with periodic frozen-greedy evaluation and CSV emission."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import oracle
from ..agents import ALGORITHMS, Learner
from ..agents import kernels as K
from ..agents.schedules import UNIFORM
from ..envs import TabularModel
from .config import ExperimentConfig, dump_config

FLOAT_FMT = ".9g"


def seed_streams(master_seed: int, seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """(train, eval) generators for one seed of a run."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(seed,))
    train, evaluation = ss.spawn(2)
    return np.random.default_rng(train), np.random.default_rng(evaluation)


def make_learner(cfg: ExperimentConfig, model: TabularModel) -> Learner:
    alg = cfg.algorithm
    cls = ALGORITHMS[alg.name]
    rep = cfg.representation.build()
    args = (model.n_actions, model.gamma, rep)
    if alg.name == "addq":
        return cls(*args, schedule=alg.beta_schedule)
    if alg.name == "wdq":
        return cls(*args, c=alg.c)
    if alg.name in ("maxmin", "ebql"):
        return cls(*args, ensemble=alg.ensemble)
    if alg.name == "redq":
        return cls(*args, ensemble=alg.ensemble, subset=alg.subset)
    return cls(*args)


def columns(model: TabularModel, distributional: bool) -> list[str]:
    pairs = model.pairs()
    cols = ["step", "seed", "eval_return", "correct_action", "summed_abs_bias"]
    cols += [f"q_{s}_{a}" for s, a in pairs]
    if distributional:
        cols += [f"s2_{s}_{a}" for s, a in pairs]
    cols += [f"bias_{s}_{a}" for s, a in pairs]
    return cols


@dataclass
class RunRecord:
    seed: int
    columns: list[str]
    rows: np.ndarray  # (n_evals, len(columns)), float64

    @property
    def steps(self) -> np.ndarray:
        return self.rows[:, 0].astype(np.int64)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_csv(self) -> str:
        ints = {"step", "seed", "correct_action"}
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(
                ",".join(str(int(v)) if c in ints else format(v, FLOAT_FMT) for c, v in zip(self.columns, row))
            )
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def read(cls, path) -> "RunRecord":
        lines = Path(path).read_text().splitlines()
        cols = lines[0].split(",")
        rows = np.array([[float(x) for x in line.split(",")] for line in lines[1:]], dtype=float).reshape(-1, len(cols))
        return cls(seed=int(rows[0, 1]) if len(rows) else -1, columns=cols, rows=rows)


class Oracle:
    """Q* and the optimal action sets for a model, computed once per run."""

    def __init__(self, model: TabularModel):
        self.q_star = oracle.value_iteration(model)
        self.best = oracle.optimal_actions(model, self.q_star)


def _explore_array(cfg: ExperimentConfig) -> np.ndarray:
    pol = cfg.exploration.build()
    if pol.kind == UNIFORM:
        return np.array([1.0, 1.0, 1.0, 1.0])
    return np.array([0.0, pol.eps_start, pol.eps_end, float(pol.decay_steps)])


def run_seed(cfg: ExperimentConfig, seed: int, model: TabularModel | None = None, truth: Oracle | None = None) -> RunRecord:
    model = model or cfg.environment.build()
    truth = truth or Oracle(model)
    learner = make_learner(cfg, model)
    rng_train, rng_eval = seed_streams(cfg.master_seed, seed)
    pairs = model.pairs()
    ps = np.array([p[0] for p in pairs])
    pa = np.array([p[1] for p in pairs])
    cols = columns(model, learner.distributional)
    compiled = model.compiled
    explore = _explore_array(cfg)
    loop = np.array([model.start_state, 0, 0], dtype=np.int64)
    step_cap = cfg.environment.step_cap
    start = model.start_state

    n_evals = cfg.total_steps // cfg.eval_every + 1
    rows = np.empty((n_evals, len(cols)))
    for i in range(n_evals):
        if i:
            K.train_steps(learner.tables, learner.params, compiled, cfg.eval_every, loop, explore, start, step_cap, rng_train)
        ret, first = K.greedy_rollout(learner.tables, learner.alg, compiled, start, cfg.eval_horizon, rng_eval)
        q = learner.estimate()
        rep = oracle.bias_report(model, q, truth.q_star)
        parts = [
            [i * cfg.eval_every, seed, ret, float(first in truth.best[start]), rep.summed_abs_bias],
            q[ps, pa],
        ]
        if learner.distributional:
            parts.append(learner.variance()[ps, pa])
        parts.append(rep.bias[ps, pa])
        rows[i] = np.concatenate([np.asarray(p, dtype=float) for p in parts])
    return RunRecord(seed=seed, columns=cols, rows=rows)


def _run_one(args):
    cfg, seed = args
    return run_seed(cfg, seed)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, seed_offset: int = 0, output_dir=None) -> list[RunRecord]:
    """One RunRecord per seed, in seed order; writes CSVs when ``output_dir`` is given."""
    seeds = [s + seed_offset for s in cfg.seeds]
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(seeds), os.cpu_count() or 1)) as pool:
            records = list(pool.map(_run_one, [(cfg, s) for s in seeds]))
    else:
        model = cfg.environment.build()
        truth = Oracle(model)
        records = [run_seed(cfg, s, model, truth) for s in seeds]
    if output_dir is not None:
        write_run(Path(output_dir), cfg, records)
    return records


def write_run(out: Path, cfg: ExperimentConfig, records: list[RunRecord]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(dump_config(cfg))
    for rec in records:
        rec.write(out / f"seed_{rec.seed}.csv")


def read_run(run_dir) -> list[RunRecord]:
    files = sorted(Path(run_dir).glob("seed_*.csv"), key=lambda p: int(p.stem.split("_")[1]))
    if not files:
        raise FileNotFoundError(f"no seed_*.csv files in {run_dir}")
    return [RunRecord.read(f) for f in files]
