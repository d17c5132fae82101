"""Two-phase demo: reorient in air, then finish against an unseen obstacle.

Phase 1 turns the object in air to an intermediate in-hand angle. Only
after it succeeds does phase 2 start: the object, still at the angle phase 1
left it, is brought above a box whose height, extent and friction are drawn
per seed, and the contact controller pivots it to the final in-hand angle.
The controller sees none of the obstacle parameters; it only meets the box
through its tactile signals. A cable-like pull acts in both phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from ..simulation import Environment
from ..simulation.objects import suite_template
from .config import ConfigError, SceneConfig, TargetRotation, scenario_config
from .runner import SUCCESS, Episode, EpisodeOutcome
from .scenes import build_world, lowest_point, seeded_rng

DEMO_DEFAULTS = {
    "object": "textured",
    "disturbance_pct": 20.0,  # peak cable pull, % of the object's weight
    "air_target_deg": 50.0,  # phase 1: in-hand rotation from horizontal
    "final_deg": 20.0,  # phase 2: in-hand angle to end at
    "clearance_mm": [5.0, 15.0],  # gap between object and box, unknown to the controller
    "box_top_mm": [-20.0, 20.0],
    "box_mu": [0.5, 0.7],
}


@dataclass(frozen=True)
class Obstacle:
    """Hidden obstacle of phase 2 (ground frame, mm)."""

    box: tuple
    mu: float
    clearance: float

    @property
    def top(self) -> float:
        return self.box[5]


@dataclass(frozen=True)
class DemoOutcome:
    seed: int
    phases: tuple  # EpisodeOutcome per phase that ran
    obstacle: Obstacle | None

    @property
    def success(self) -> bool:
        return len(self.phases) == 2 and all(p.label == SUCCESS for p in self.phases)


def demo_settings(doc: Mapping) -> dict:
    out = dict(DEMO_DEFAULTS)
    out.update(doc.get("demo") or {})
    unknown = set(out) - set(DEMO_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown demo keys {sorted(unknown)}")
    return out


def draw_obstacle(settings: Mapping, tip_x: float, seed: int) -> Obstacle:
    rng = seeded_rng(seed, 2)
    top = float(rng.uniform(*settings["box_top_mm"]))
    left = tip_x - float(rng.uniform(30.0, 60.0))
    right = tip_x + float(rng.uniform(30.0, 80.0))
    return Obstacle(box=(left, -100.0, top - 100.0, right, 100.0, top),
                    mu=float(rng.uniform(*settings["box_mu"])),
                    clearance=float(rng.uniform(*settings["clearance_mm"])))


def run_two_phase_demo(doc: Mapping, seed: int = 0, log_dir: str | Path | None = None) -> DemoOutcome:
    """Run both phases for one seed; phase 2 is skipped if phase 1 fails."""
    s = demo_settings(doc)
    obj = s["object"]
    disturbance = None if float(s["disturbance_pct"]) <= 0 else f"cable_{float(s['disturbance_pct']):g}"
    log_dir = None if log_dir is None else Path(log_dir)

    def log(name):
        return None if log_dir is None else log_dir / f"demo_seed{seed}_{name}.csv"

    # phase 1: in air, from the object's suite start to the intermediate angle
    air = scenario_config(doc, obj, "in_air", seed=seed)
    air = replace(air, target=TargetRotation((0.0, 1.0, 0.0), float(s["air_target_deg"])),
                  disturbance=disturbance)
    first = Episode(air, log("air"))
    out1 = first.run()
    if out1.label != SUCCESS:
        return DemoOutcome(seed, (out1,), None)

    # phase 2: the in-hand angle is whatever phase 1 achieved
    angle = float(first.world.q[2])
    final = math.radians(float(s["final_deg"]))
    turn = math.degrees(angle - final)
    if turn <= 0:
        raise ConfigError("demo final angle must be below the phase-1 angle")
    template = suite_template(obj)
    outline = template.outline
    c, sn = math.cos(angle), math.sin(angle)
    tip_x = float(outline[np.argmin(-sn * outline[:, 0] + c * outline[:, 1]), 0]) * c
    obstacle = draw_obstacle(s, tip_x, seed)
    contact = scenario_config(doc, obj, "contact", seed=seed)
    contact = replace(contact, target=TargetRotation((0.0, -1.0, 0.0), turn), disturbance=disturbance,
                      scene=SceneConfig(start_deg=math.degrees(angle), env_mu=obstacle.mu,
                                        start_jitter_deg=0.0, mu_jitter=0.0))
    env = Environment(boxes=[obstacle.box], mu=obstacle.mu)
    height = obstacle.top + obstacle.clearance - lowest_point(template, angle)
    world, target = build_world(contact, template, start_angle=angle, environment=env, height=height)
    out2 = Episode(contact, log("contact"), world=world, target=target).run()
    return DemoOutcome(seed, (out1, out2), obstacle)
