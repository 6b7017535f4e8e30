"""
Experiment configuration files (YAML).

Angles are in degrees, lengths in metres and the noise variance in A^2. A
single file fixes everything an experiment does, seed included. Example::

    kind: path2
    seed: 2024
    trials: 50
    noise_variance: 1.0e-13
    scenario:
      room: [5, 4, 3]
      ceiling_deg: 30
      polar_deg: 20
      leds_per_vap: 4
      mode: 30
      receiver: {fov_deg: 85, area: 1.0e-4, orientation: [0, 0, 1]}
    solver: {step_size: 0.2, max_iters: 200}
    rrc: {samples: 500, keep: 100, clusters: 4, kmeans_iters: 25}
    sweep: {axis: x, start: 0.25, stop: 4.75, step: 0.25}
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import yaml

from .crlb import DEFAULT_THRESHOLDS
from .exceptions import ConfigError
from .geometry import RoomScenarioConfig
from .rss import RrcConfig, SolverConfig

KINDS = ("path1", "path2", "convergence", "coverage-ceiling", "coverage-polar",
         "crlb-grid", "localize-once")

# receiver coordinates held fixed on each path; the remaining axis is swept
PATH_DEFAULTS = {
    "path1": ("z", {"x": 2.0, "y": 2.0}, (0.1, 2.9, 0.1)),
    "path2": ("x", {"y": 1.0, "z": 1.5}, (0.25, 4.75, 0.25)),
}
SWEEP_DEFAULTS = {
    "coverage-ceiling": ("ceiling_deg", (20.0, 70.0, 5.0)),
    "coverage-polar": ("polar_deg", (5.0, 40.0, 2.5)),
}


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError(f"sweep step must be positive, got {self.step}")
        if self.stop < self.start:
            raise ConfigError("sweep stop must not precede start")

    def values(self) -> np.ndarray:
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9))
        return self.start + self.step * np.arange(n + 1)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    scenario: RoomScenarioConfig = field(default_factory=RoomScenarioConfig)
    trials: int = 50
    noise_variance: float = 1e-13
    solver: SolverConfig = field(default_factory=SolverConfig)
    rrc: RrcConfig = field(default_factory=RrcConfig)
    sweep: Optional[SweepSpec] = None
    fixed: Dict[str, float] = field(default_factory=dict)
    receiver_location: Optional[Tuple[float, float, float]] = None
    clusters: Tuple[int, ...] = (0, 1, 2, 3, 4)
    success_radius: float = 1e-2
    thresholds: Tuple[float, ...] = DEFAULT_THRESHOLDS
    grid_spacing: float = 0.1
    seed: int = 0
    output: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.noise_variance < 0:
            raise ConfigError("noise variance must be non-negative")
        if not self.grid_spacing > 0:
            raise ConfigError("grid spacing must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    def sweep_spec(self) -> SweepSpec:
        if self.sweep is not None:
            return self.sweep
        if self.kind in PATH_DEFAULTS:
            axis, _, (a, b, c) = PATH_DEFAULTS[self.kind]
        elif self.kind in SWEEP_DEFAULTS:
            axis, (a, b, c) = SWEEP_DEFAULTS[self.kind]
        else:
            raise ConfigError(f"{self.kind} has no sweep")
        return SweepSpec(axis, a, b, c)

    def fixed_coordinates(self) -> Dict[str, float]:
        base = dict(PATH_DEFAULTS.get(self.kind, (None, {}, None))[1])
        base.update(self.fixed)
        return base

    def with_overrides(self, seed=None, trials=None, output=None) -> "ExperimentConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if trials is not None:
            changes["trials"] = int(trials)
        if output is not None:
            changes["output"] = str(output)
        return replace(self, **changes) if changes else self


def _pick(cls, data: dict, section: str):
    data = dict(data or {})
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {sorted(unknown)}")
    return data


def scenario_from_dict(data: dict) -> RoomScenarioConfig:
    data = dict(data or {})
    rx = data.pop("receiver", {}) or {}
    for key in ("fov_deg", "area", "orientation"):
        if key in rx:
            data[key] = rx.pop(key)
    if rx:
        raise ConfigError(f"unknown keys in scenario.receiver: {sorted(rx)}")
    data = _pick(RoomScenarioConfig, data, "scenario")
    for key in ("room", "orientation"):
        if key in data:
            data[key] = tuple(float(v) for v in data[key])
    return RoomScenarioConfig(**data)


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError("configuration must be a mapping with a 'kind' entry")
    data = dict(data)
    kwargs = {"kind": data.pop("kind")}
    if "scenario" in data:
        kwargs["scenario"] = scenario_from_dict(data.pop("scenario"))
    if "solver" in data:
        kwargs["solver"] = SolverConfig(**_pick(SolverConfig, data.pop("solver"), "solver"))
    if "rrc" in data:
        kwargs["rrc"] = RrcConfig(**_pick(RrcConfig, data.pop("rrc"), "rrc"))
    if "sweep" in data:
        kwargs["sweep"] = SweepSpec(**_pick(SweepSpec, data.pop("sweep"), "sweep"))
    for key in ("receiver_location", "clusters", "thresholds"):
        if key in data and data[key] is not None:
            conv = int if key == "clusters" else float
            kwargs[key] = tuple(conv(v) for v in data.pop(key))
    rest = _pick(ExperimentConfig, data, "experiment")
    kwargs.update(rest)
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_dict(data)
