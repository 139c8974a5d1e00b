"""Experiment configuration.

Configs are YAML documents with the sections below; every key is optional
except ``environment.kind`` and ``algorithm.name``::

    environment:   {kind: gridworld | bandit, <BanditSpec / GridWorldSpec fields>}
    algorithm:     {name: addq, beta_schedule: n3, ensemble: 2, subset: 1, c: 10.0}
    representation: {kind: categorical, theta_min: -3, theta_max: 3, m: 51}
    exploration:   {kind: eps_greedy, eps_start: 1.0, eps_end: 0.1, decay_steps: 10000}
    total_steps: 200000
    eval_every: 500
    eval_horizon: 6          # default 3 for the bandit, 6 for the grid world
    seeds: [0, 1, 2]
    master_seed: 0
    output_dir: runs/example

Seed ``s`` of a run draws from ``SeedSequence(master_seed, spawn_key=(s,))``;
its first spawned child drives training and the second drives evaluation.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from ..agents import ALGORITHMS, BETA_PRESETS, Categorical, EpsGreedyLinear, Quantile, Scalar, Uniform, beta_schedule
from ..distmeasure import Support
from ..envs import BanditSpec, GridWorldSpec, TabularModel, bandit_model, gridworld_model

SCALAR_ALGOS = ("ql", "dql", "clipped", "wdq", "maxmin", "ebql", "redq")
DIST_ALGOS = ("dist_ql", "dist_dql", "addq")
DEFAULT_HORIZON = {"bandit": 3, "gridworld": 6}


class ConfigError(ValueError):
    pass


@dataclass
class EnvironmentConfig:
    kind: str = "gridworld"
    params: dict = field(default_factory=dict)

    def spec(self):
        cls = {"bandit": BanditSpec, "gridworld": GridWorldSpec}.get(self.kind)
        if cls is None:
            raise ConfigError(f"unknown environment kind {self.kind!r}")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(self.params) - names
        if unknown:
            raise ConfigError(f"unknown {self.kind} parameters: {sorted(unknown)}")
        params = dict(self.params)
        if "gray" in params:
            params["gray"] = frozenset(params["gray"])
        for key in ("gray_rewards", "white"):
            if key in params:
                params[key] = tuple(params[key])
        try:
            return cls(**params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def build(self) -> TabularModel:
        spec = self.spec()
        return bandit_model(spec) if self.kind == "bandit" else gridworld_model(spec)

    @property
    def step_cap(self) -> int:
        return int(getattr(self.spec(), "step_cap", 1_000_000))


@dataclass
class AlgorithmConfig:
    name: str = "addq"
    beta_schedule: Any = "n3"
    ensemble: int = 2
    subset: int = 1
    c: float = 10.0

    def label(self) -> str:
        if self.name == "addq":
            return f"addq[{self.beta_schedule}]"
        if self.name in ("maxmin", "ebql"):
            return f"{self.name}[{self.ensemble}]"
        if self.name == "redq":
            return f"redq[{self.ensemble}-{self.subset}]"
        if self.name == "wdq":
            return f"wdq[{self.c:g}]"
        return self.name


@dataclass
class RepresentationConfig:
    kind: str = "categorical"
    theta_min: float = -3.0
    theta_max: float = 3.0
    m: int = 51

    def build(self):
        if self.kind == "scalar":
            return Scalar()
        if self.kind == "categorical":
            return Categorical(Support(float(self.theta_min), float(self.theta_max), int(self.m)))
        if self.kind == "quantile":
            return Quantile(int(self.m))
        raise ConfigError(f"unknown representation {self.kind!r}")


@dataclass
class ExplorationConfig:
    kind: str = "eps_greedy"
    eps_start: float = 1.0
    eps_end: float = 0.1
    decay_steps: int = 10000

    def build(self):
        if self.kind == "eps_greedy":
            return EpsGreedyLinear(self.eps_start, self.eps_end, self.decay_steps)
        if self.kind == "uniform":
            return Uniform()
        raise ConfigError(f"unknown exploration kind {self.kind!r}")


@dataclass
class ExperimentConfig:
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)
    algorithm: AlgorithmConfig = field(default_factory=AlgorithmConfig)
    representation: RepresentationConfig | None = None
    exploration: ExplorationConfig = field(default_factory=ExplorationConfig)
    total_steps: int = 200_000
    eval_every: int = 500
    eval_horizon: int | None = None
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    master_seed: int = 0
    output_dir: str = "runs/default"

    def __post_init__(self):
        if self.representation is None:
            kind = "scalar" if self.algorithm.name in SCALAR_ALGOS else "categorical"
            self.representation = RepresentationConfig(kind=kind)
        if self.eval_horizon is None:
            self.eval_horizon = DEFAULT_HORIZON.get(self.environment.kind, 6)
        self.validate()

    def validate(self) -> None:
        name = self.algorithm.name
        if name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}")
        scalar_rep = self.representation.kind == "scalar"
        if name in DIST_ALGOS and scalar_rep:
            raise ConfigError(f"{name} needs a distributional representation")
        if name in SCALAR_ALGOS and not scalar_rep:
            raise ConfigError(f"{name} is a scalar algorithm; use representation kind 'scalar'")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be at least 1")
        if self.total_steps < 0:
            raise ConfigError("total_steps must be non-negative")
        if self.eval_horizon < 1:
            raise ConfigError("eval_horizon must be at least 1")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if name == "addq":
            try:
                beta_schedule(self.algorithm.beta_schedule)
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad beta schedule {self.algorithm.beta_schedule!r}: {exc}") from exc
        if name in ("maxmin", "ebql", "redq") and self.algorithm.ensemble < 2:
            raise ConfigError("ensembles need at least two tables")
        if name == "redq" and not 1 <= self.algorithm.subset <= self.algorithm.ensemble:
            raise ConfigError("REDQ subset size must lie in [1, ensemble]")
        if name == "wdq" and self.algorithm.c <= 0:
            raise ConfigError("WDQ constant c must be positive")
        self.environment.spec()
        self.representation.build()
        self.exploration.build()

    def with_(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        env = d.pop("environment")
        d["environment"] = {"kind": env["kind"], **env["params"]}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a mapping")
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            env = dict(d.pop("environment", {}) or {})
            kind = env.pop("kind", "gridworld")
            d["environment"] = EnvironmentConfig(kind=kind, params=env)
            d["algorithm"] = AlgorithmConfig(**(d.pop("algorithm", {}) or {}))
            if d.get("representation") is not None:
                d["representation"] = RepresentationConfig(**d["representation"])
            d["exploration"] = ExplorationConfig(**(d.pop("exploration", {}) or {}))
            if "seeds" in d:
                d["seeds"] = [int(s) for s in d["seeds"]]
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def read_yaml(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return data


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(read_yaml(path))


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def known_schedules() -> list[str]:
    return list(BETA_PRESETS)


__all__ = [
    "AlgorithmConfig",
    "ConfigError",
    "EnvironmentConfig",
    "ExperimentConfig",
    "ExplorationConfig",
    "RepresentationConfig",
    "Uniform",
    "dump_config",
    "load_config",
    "read_yaml",
]
