"""Experiment configuration, loadable from YAML.

Every field has a default so a config file only lists overrides::

    graph:
      C: 400
    guard:
      ms: [1, 2]
      beta: 0.8
    replicates: 5
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .policy import POLICY_NAMES


@dataclass
class GraphConfig:
    n: int = 2000
    # Uncalibrated stand-ins for the WICO-fitted values; they give a pruned
    # graph of diameter 4 at n=2000 and cascades spreading over tens of steps.
    C: float = 400.0
    gamma: float = 2.8
    prune: float = 5e-4


@dataclass
class DynamicsConfig:
    q: float = 5e-5
    horizon: int = 100
    cap: int | None = 50
    assumption3: bool = True
    allow_infected_origin: bool = True


@dataclass
class EstimatorConfig:
    samples: int = 100
    statistic: str = "mean"
    quantile: float = 0.1
    cap_factor: int = 4
    resolve_every: int = 1


@dataclass
class GuardConfig:
    ms: list[int] = field(default_factory=lambda: [1, 2, 3])
    policies: list[str] = field(default_factory=lambda: list(POLICY_NAMES))
    beta: float = 0.9
    neighborhood: str = "directed"


@dataclass
class InoculationConfig:
    ratios: list[float] = field(default_factory=lambda: [0.0, 0.01, 0.05])
    cascades: int = 20
    horizon: int = 100


@dataclass
class ExperimentConfig:
    graph: GraphConfig = field(default_factory=GraphConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    guard: GuardConfig = field(default_factory=GuardConfig)
    inoculation: InoculationConfig = field(default_factory=InoculationConfig)
    replicates: int = 10
    seed: int = 0
    jobs: int = 1

    def validate(self) -> "ExperimentConfig":
        if not 0 <= self.dynamics.q <= 1:
            raise ValueError("q must lie in [0, 1]")
        if not 0 <= self.graph.prune < 1:
            raise ValueError("prune threshold must lie in [0, 1)")
        if self.graph.gamma <= 2:
            raise ValueError("gamma must exceed 2")
        if not 0 < self.guard.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if any(m < 1 for m in self.guard.ms):
            raise ValueError("m must be at least 1")
        unknown = set(self.guard.policies) - set(POLICY_NAMES)
        if unknown:
            raise ValueError(f"unknown policies {sorted(unknown)}")
        if self.guard.neighborhood not in ("undirected", "directed"):
            raise ValueError("neighborhood must be 'undirected' or 'directed'")
        if any(not 0 <= r < 1 for r in self.inoculation.ratios):
            raise ValueError("inoculation ratios must lie in [0, 1)")
        if self.estimator.statistic not in ("mean", "quantile"):
            raise ValueError("estimator statistic must be 'mean' or 'quantile'")
        if self.replicates < 1 or self.estimator.samples < 1:
            raise ValueError("replicates and samples must be positive")
        return self

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _merge(obj, overrides: dict, path: str = ""):
    for key, value in overrides.items():
        if not hasattr(obj, key):
            raise ValueError(f"unknown config key {path}{key}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            if not isinstance(value, dict):
                raise ValueError(f"config section {path}{key} must be a mapping")
            _merge(current, value, f"{path}{key}.")
        else:
            setattr(obj, key, value)
    return obj


def config_from_dict(data: dict | None) -> ExperimentConfig:
    return _merge(ExperimentConfig(), data or {}).validate()


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig().validate()
    with open(path) as fh:
        return config_from_dict(yaml.safe_load(fh))
