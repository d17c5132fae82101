"""Scenario configuration: YAML on disk, frozen dataclasses in memory.

Every default lives in ``defaults.yaml`` next to this module; a user file is
merged over it key by key, so a config only needs the values it changes.
Angles are degrees in files and radians in memory.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from ..controller import GROUPS, SCENARIOS, ActionFlags, ControllerConfig
from ..simulation.objects import SUITE_IDS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TargetRotation:
    """Desired in-hand rotation about a gripper-frame axis."""

    axis: tuple = (0.0, 1.0, 0.0)
    degrees: float = 45.0

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        if a.shape != (3,) or np.linalg.norm(a) < 1e-12:
            raise ConfigError("target axis must be a non-zero 3-vector")
        if not 0.0 < self.degrees <= 180.0:
            raise ConfigError("target angle must be in (0, 180] degrees")
        object.__setattr__(self, "axis", tuple(float(x) for x in a / np.linalg.norm(a)))

    @property
    def radians(self) -> float:
        return math.radians(self.degrees)


@dataclass(frozen=True)
class OptimizerConfig:
    alpha: float = 0.05
    epsilon_task: float = 0.1
    epsilon_rpy: float = math.radians(0.5)
    lambda0: float | None = None  # None -> 2 * d_lim
    cadence: int = 5  # control cycles between optimization steps
    alpha_min_ratio: float = 0.25  # floor of the halving rule, relative to alpha
    detrend: bool = True  # remove linear loss drift across the probe cycles

    def __post_init__(self):
        if not (self.alpha > 0 and self.epsilon_task > 0 and self.epsilon_rpy > 0):
            raise ConfigError("optimizer alpha and epsilons must be positive")
        if self.lambda0 is not None and self.lambda0 <= 0:
            raise ConfigError("lambda0 must be positive")
        if self.cadence < 1:
            raise ConfigError("cadence must be at least 1")
        if not 0.0 <= self.alpha_min_ratio <= 1.0:
            raise ConfigError("alpha_min_ratio must be in [0, 1]")

    @property
    def alpha_min(self) -> float:
        return self.alpha * self.alpha_min_ratio


@dataclass(frozen=True)
class Limits:
    success_deg: float = 5.0
    slip_mm: float = 20.0
    stall_window_s: float = 5.0
    stall_progress_deg: float = 0.5


@dataclass(frozen=True)
class SceneConfig:
    """Initial condition of one object in one scenario; hidden from the controller."""

    start_deg: float = 0.0  # in-hand angle about the grasp axis
    env_mu: float = 0.6
    start_jitter_deg: float = 2.0  # per-seed perturbation
    mu_jitter: float = 0.1  # relative, per seed
    clearance: float = 0.0  # mm between the lowest point and the floor (contact)


@dataclass(frozen=True)
class ScenarioConfig:
    object_id: str
    scenario: str
    target: TargetRotation
    controller: ControllerConfig
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    time_limit: float = 30.0
    disturbance: str | None = None
    rng_seed: int = 0
    scene: SceneConfig = field(default_factory=SceneConfig)
    limits: Limits = field(default_factory=Limits)
    group: str = "CG"

    def __post_init__(self):
        if self.object_id not in SUITE_IDS:
            raise ConfigError(f"unknown object {self.object_id!r}")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.controller.scenario != self.scenario:
            raise ConfigError("controller scenario differs from the episode scenario")
        if self.time_limit <= 0:
            raise ConfigError("time limit must be positive")

    @property
    def lambda0(self) -> float:
        return self.optimizer.lambda0 or 2.0 * self.controller.d_lim


# -- file handling --------------------------------------------------------------

def default_document() -> dict:
    text = resources.files(__package__).joinpath("defaults.yaml").read_text(encoding="utf-8")
    return yaml.safe_load(text)


def merge(base: Mapping, override: Mapping) -> dict:
    out = copy.deepcopy(dict(base))
    for key, value in (override or {}).items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_document(path: str | Path | None = None) -> dict:
    doc = default_document()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            user = yaml.safe_load(fh) or {}
        if not isinstance(user, Mapping):
            raise ConfigError(f"{path}: top level must be a mapping")
        doc = merge(doc, user)
    return doc


def _take(section: Mapping, cls, renames: Mapping[str, str] = (), degrees: tuple = ()) -> Any:
    kwargs = {}
    known = {f for f in cls.__dataclass_fields__}
    for key, value in (section or {}).items():
        name = dict(renames).get(key, key)
        if key in degrees:
            value = math.radians(float(value))
        if name not in known:
            raise ConfigError(f"unknown field {key!r} for {cls.__name__}")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{cls.__name__}: {exc}") from exc


def _controller(doc: Mapping, scenario: str, group: str, target: TargetRotation) -> ControllerConfig:
    section = merge(doc.get("controller", {}), doc.get("scenarios", {}).get(scenario, {}).get("controller", {}))
    if group not in GROUPS:
        raise ConfigError(f"unknown group {group!r}; choose from {sorted(GROUPS)}")
    # a positive rotation about +y_H shows up as positive S2 on the left finger
    sense = 1 if target.axis[1] >= 0 else -1
    try:
        cfg = _take(section, ControllerConfig, renames={"rotation_cap_deg": "rotation_cap"},
                    degrees=("rotation_cap_deg",))
        return replace(cfg, scenario=scenario, enabled=GROUPS[group], s2_sense=sense)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def scenario_config(doc: Mapping, object_id: str, scenario: str, *, group: str = "CG",
                    seed: int = 0) -> ScenarioConfig:
    """Resolve the document into the config of one episode."""
    try:
        obj = doc["suite"][object_id][scenario]
    except KeyError as exc:
        raise ConfigError(f"no scene for object {object_id!r} in scenario {scenario!r}") from exc
    target = _take(obj.get("target", {}), TargetRotation)
    scene = _take(obj.get("scene", {}), SceneConfig)
    episode = merge(doc.get("episode", {}), doc.get("scenarios", {}).get(scenario, {}).get("episode", {}))
    optimizer = _take(merge(doc.get("optimizer", {}), doc.get("scenarios", {}).get(scenario, {}).get("optimizer", {})),
                      OptimizerConfig, renames={"epsilon_rpy_deg": "epsilon_rpy"}, degrees=("epsilon_rpy_deg",))
    limits = _take(doc.get("limits", {}), Limits)
    return ScenarioConfig(
        object_id=object_id,
        scenario=scenario,
        target=target,
        controller=_controller(doc, scenario, group, target),
        optimizer=optimizer,
        time_limit=float(episode.get("time_limit", 30.0)),
        disturbance=obj.get("disturbance"),
        rng_seed=int(seed),
        scene=scene,
        limits=limits,
        group=group,
    )


def echo(cfg: ScenarioConfig) -> dict:
    """Plain-dict view of the thresholds actually wired into an episode."""
    return {
        "success_deg": cfg.limits.success_deg,
        "slip_mm": cfg.limits.slip_mm,
        "rotation_cap_deg": math.degrees(cfg.controller.rotation_cap),
        "stall_window_s": cfg.limits.stall_window_s,
        "stall_progress_deg": cfg.limits.stall_progress_deg,
    }


def flags_diff(a: ActionFlags, b: ActionFlags) -> set[str]:
    return {name for name in a.__dataclass_fields__ if getattr(a, name) != getattr(b, name)}
