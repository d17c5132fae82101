"""The three action laws and their per-cycle composition.

Contact scenario: the task action moves the gripper along ``n_task`` at the
preset speed, the constraint action raises the grip force while the mean
marker displacement exceeds ``d_lim``, and the coordinating action moves the
gripper along the tangential slip direction. In air the task action lowers
the grip force instead, the constraint action is the same force law, and the
coordinating action is a capped RPY rotation of the gripper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Rotation, RpyVector
from .gripper import HAND_FROM_SENSOR, GripperCommand, GripperState
from .optimizer import DEFAULT_ROTATION_CAP, OptimizerState, cap_rotation
from .tactile import (
    LEFT,
    NoTangentialComponent,
    SlipMetrics,
    select_signal_finger,
    slip_metrics,
    tangential_direction,
)

CONTACT = "contact"
IN_AIR = "in_air"
SCENARIOS = (CONTACT, IN_AIR)


@dataclass(frozen=True)
class ActionFlags:
    """Ablation switches; every group disables at most one of these."""

    task: bool = True
    constraint: bool = True
    coordinating: bool = True
    online_adjust: bool = True


GROUPS = {
    "CG": ActionFlags(),
    "NTO": ActionFlags(task=False),
    "NCB": ActionFlags(constraint=False),
    "NC": ActionFlags(coordinating=False),
    "NOA": ActionFlags(online_adjust=False),
}


@dataclass(frozen=True)
class ControllerConfig:
    v0: float = 5.0  # mm/s
    delta_f: float = 0.25  # N
    d_lim: float = 0.4  # mm
    f_init: float = 5.0  # N
    f_min: float = 1.5  # N
    f_max: float = 40.0  # N
    rotation_cap: float = DEFAULT_ROTATION_CAP  # rad per cycle
    scenario: str = CONTACT
    enabled: ActionFlags = field(default_factory=ActionFlags)
    s2_sense: int = 1  # for the left finger

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}")
        if not (self.v0 > 0 and self.delta_f > 0 and self.d_lim > 0):
            raise ValueError("v0, delta_f and d_lim must be positive")
        if not self.f_min <= self.f_init <= self.f_max:
            raise ValueError("need f_min <= f_init <= f_max")
        if not 0 < self.rotation_cap <= math.radians(3.0) + 1e-15:
            raise ValueError("rotation cap must be in (0, 3 deg]")
        if self.s2_sense not in (1, -1):
            raise ValueError("s2_sense must be +1 or -1")

    def finger_sense(self, finger: str) -> int:
        """Sense for one finger: the two sensors face each other, so S2 flips."""
        return self.s2_sense if finger == LEFT else -self.s2_sense


# -- individual actions ---------------------------------------------------------

def task_action_contact(opt: OptimizerState, cfg: ControllerConfig) -> np.ndarray:
    if not cfg.enabled.task:
        return np.zeros(3)
    return cfg.v0 * (opt.q / np.linalg.norm(opt.q))


def constraint_action(s: SlipMetrics, f_prev: float, cfg: ControllerConfig) -> float:
    f = f_prev + cfg.delta_f if s.s1_norm > cfg.d_lim else f_prev
    return min(max(f, cfg.f_min), cfg.f_max)


def coordinating_action_contact(s: SlipMetrics, ground_from_hand: Rotation, hand_from_sensor: Rotation,
                                cfg: ControllerConfig) -> np.ndarray:
    try:
        e_tan = tangential_direction(s, s.normal)
    except NoTangentialComponent:
        return np.zeros(3)
    return (ground_from_hand @ hand_from_sensor).matrix @ e_tan * cfg.v0


def task_action_air(s: SlipMetrics, f_prev: float, cfg: ControllerConfig) -> float:
    f = f_prev - cfg.delta_f if s.s1_norm < cfg.d_lim else f_prev
    return max(f, cfg.f_min)


def coordinating_action_air(opt: OptimizerState, cfg: ControllerConfig) -> RpyVector:
    return RpyVector.from_array(cap_rotation(opt.q, cfg.rotation_cap))


# -- one cycle ----------------------------------------------------------------------

@dataclass(frozen=True)
class CycleActivity:
    """Which actions changed the command this cycle (for the activity timeline)."""

    finger: str
    task: bool
    constraint: bool
    coordinating: bool


def force_law(s: SlipMetrics, f_prev: float, cfg: ControllerConfig) -> tuple[float, bool, bool]:
    """Grip force after the task (in air) and constraint laws, and whether each fired."""
    force = f_prev
    task_active = False
    if cfg.scenario == IN_AIR and cfg.enabled.task:
        force = task_action_air(s, force, cfg)
        task_active = force < f_prev
    f_task = force
    if cfg.enabled.constraint:
        force = constraint_action(s, force, cfg)
    return force, task_active, force > f_task


def compose_command(finger: str, s: SlipMetrics, gripper: GripperState, opt: OptimizerState,
                    cfg: ControllerConfig, *, coordinating: bool = True) -> tuple[GripperCommand, CycleActivity]:
    """Evaluate task, then constraint, then coordinating action and sum them.

    ``coordinating=False`` suspends the coordinating action for one cycle
    (used while probing); the force laws always run.
    """
    flags = cfg.enabled
    force, task_active, constraint_active = force_law(s, gripper.grip_force, cfg)
    velocity = np.zeros(3)
    rpy = RpyVector.zero()
    if cfg.scenario == CONTACT:
        v1 = task_action_contact(opt, cfg)
        task_active = bool(np.any(v1))
        v2 = np.zeros(3)
        if flags.coordinating and coordinating:
            v2 = coordinating_action_contact(s, gripper.rotation, HAND_FROM_SENSOR[finger], cfg)
        velocity = v1 + v2
        coor_active = bool(np.any(v2))
    else:
        if flags.coordinating and coordinating:
            rpy = coordinating_action_air(opt, cfg)
        coor_active = bool(np.any(rpy.as_array()))
    return (GripperCommand(velocity, rpy, force),
            CycleActivity(finger, task_active, constraint_active, coor_active))


def control_cycle(frame, gripper: GripperState, opt: OptimizerState, cfg: ControllerConfig) -> GripperCommand:
    """Pick the signal finger from a tactile frame and compose that cycle's command."""
    left, right = slip_metrics(frame.left), slip_metrics(frame.right)
    finger, s = select_signal_finger(left, right)
    return compose_command(finger, s, gripper, opt, cfg)[0]


class Controller:
    """Per-episode controller: action composition plus the optimization cadence."""

    def __init__(self, cfg: ControllerConfig, opt: OptimizerState, cadence: int = 5):
        if cadence < 1:
            raise ValueError("cadence must be at least 1")
        self.cfg = cfg
        self.opt = opt
        self.cadence = cadence
        self._since_update = 0

    @property
    def tunes_enabled_action(self) -> bool:
        # q parameterizes the task motion in contact and the coordinating rotation in air
        flags = self.cfg.enabled
        return flags.task if self.cfg.scenario == CONTACT else flags.coordinating

    def optimization_due(self) -> bool:
        return (self.cfg.enabled.online_adjust and self.tunes_enabled_action
                and self._since_update >= self.cadence)

    def sense(self, frame) -> tuple[str, SlipMetrics]:
        return select_signal_finger(slip_metrics(frame.left), slip_metrics(frame.right))

    def command(self, frame, gripper: GripperState, *, coordinating: bool = True):
        finger, s = self.sense(frame)
        cmd, activity = compose_command(finger, s, gripper, self.opt, self.cfg, coordinating=coordinating)
        self._since_update += 1
        return cmd, activity

    def optimized(self, opt: OptimizerState) -> None:
        self.opt = opt
        self._since_update = 0
