"""Turn a scenario config into a simulator world and a target attitude."""

from __future__ import annotations

import math

import numpy as np

from ..geometry import Frame, Rotation, axis_angle_matrix, rot_y
from ..simulation import CableDisturbance, Environment, ObjectTemplate, SimWorld
from ..simulation.objects import suite_template
from ..simulation.world import GRAVITY
from .config import ScenarioConfig

AIR_HEIGHT = 300.0  # mm, gripper height for in-air episodes


def seeded_rng(seed: int, *salt: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *salt])


def cable_disturbance(template: ObjectTemplate, fraction: float, rng: np.random.Generator) -> CableDisturbance:
    """Cable-like pull on the far end of the body, ``fraction`` of the object's weight at peak."""
    weight = template.mass * GRAVITY / 1000.0
    far = template.outline[np.argmax(template.outline[:, 0])]
    angle = rng.uniform(-0.4, 0.4)
    return CableDisturbance(
        amplitude=fraction * weight,
        direction=(math.sin(angle), 0.0, -math.cos(angle)),
        point=(float(far[0]), 0.0, float(far[1])),
        period=float(rng.uniform(1.5, 3.0)),
        phase=float(rng.uniform(0.0, 2.0 * math.pi)),
        bias=0.5,
    )


def disturbance_from_id(name: str | None, template: ObjectTemplate, rng: np.random.Generator):
    """``None``/``"none"`` or ``"cable_<percent>"``, e.g. ``cable_20``."""
    if name in (None, "none"):
        return None
    if name.startswith("cable_"):
        return cable_disturbance(template, float(name[len("cable_"):]) / 100.0, rng)
    raise ValueError(f"unknown disturbance script {name!r}")


def lowest_point(template: ObjectTemplate, angle: float, grasp_point=(0.0, 0.0)) -> float:
    """Lowest z of the outline, relative to the grasp point, at in-hand ``angle``."""
    pts = template.outline - np.asarray(grasp_point)
    c, s = math.cos(angle), math.sin(angle)
    return float(np.min(-s * pts[:, 0] + c * pts[:, 1]))


def target_attitude(start_angle: float, cfg: ScenarioConfig) -> Rotation:
    """In-hand target: the start attitude turned by the target rotation."""
    m = axis_angle_matrix(cfg.target.axis, cfg.target.radians) @ rot_y(start_angle)
    return Rotation(m, Frame.H, Frame.H)


def build_world(cfg: ScenarioConfig, template: ObjectTemplate | None = None, *,
                start_angle: float | None = None, environment: Environment | None = None,
                height: float | None = None) -> tuple[SimWorld, Rotation]:
    """World and in-hand target for one episode.

    The keyword overrides let a caller chain episodes (the demo starts its
    contact phase where the in-air phase ended) or swap in its own obstacles.
    """
    template = template or suite_template(cfg.object_id)
    rng = seeded_rng(cfg.rng_seed)
    scene = cfg.scene
    jitter = rng.uniform(-1.0, 1.0) * scene.start_jitter_deg
    start = math.radians(scene.start_deg + jitter) if start_angle is None else float(start_angle)
    mu_env = scene.env_mu * (1.0 + rng.uniform(-1.0, 1.0) * scene.mu_jitter)
    disturbance = disturbance_from_id(cfg.disturbance, template, rng)
    ctrl = cfg.controller
    if environment is None:
        environment = Environment.floor(0.0, mu=mu_env) if cfg.scenario == "contact" else Environment.empty()
    if height is None:
        height = -lowest_point(template, start) + scene.clearance if cfg.scenario == "contact" else AIR_HEIGHT
    world = SimWorld(
        template,
        object_angle=start,
        gripper_position=(0.0, 0.0, height),
        grip_force=ctrl.f_init,
        environment=environment,
        disturbance=disturbance,
        seed=cfg.rng_seed,
        v_max=2.0 * ctrl.v0,
        rotation_cap=ctrl.rotation_cap,
        f_max=ctrl.f_max,
    )
    return world, target_attitude(start, cfg)
