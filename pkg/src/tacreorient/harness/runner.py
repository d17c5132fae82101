"""Single-episode control loop, probing plant and outcome classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..controller import CONTACT, Controller, CycleActivity, compose_command, force_law
from ..geometry import Rotation, RpyVector
from ..gripper import GripperCommand
from ..optimizer import OptimizerState, Pose, ProbeAborted, ProbePoint, loss, optimize_step
from ..simulation import Diverged, ObjectDropped, SimWorld, object_orientation_error
from ..simulation.log import CycleRecord, EpisodeLog
from ..tactile import LEFT, RIGHT, slip_metrics
from .config import ScenarioConfig
from .scenes import build_world

SUCCESS = "Success"
SLIPPED = "SL"
STALLED = "ST"
SLIPPED_STALLED = "SL+ST"
DROPPED = "Dropped"
DIVERGED = "Diverged"
LABELS = (SUCCESS, SLIPPED, STALLED, SLIPPED_STALLED, DROPPED, DIVERGED)


@dataclass(frozen=True)
class EpisodeOutcome:
    label: str
    final_error_deg: float
    max_slip_mm: float
    duration_s: float
    log_path: str | None = None
    ticks: int = 0
    probe_cycles: int = 0
    optimizer_steps: int = 0
    final_q: tuple = ()

    @property
    def success(self) -> bool:
        return self.label == SUCCESS


class _Finished(Exception):
    def __init__(self, label: str):
        super().__init__(label)
        self.label = label


class StallDetector:
    """Fires when the error shrank by less than ``progress`` over the last ``window`` s.

    :meth:`quiescent` additionally asks whether slip grew by less than
    ``slip_growth`` mm over the same window; a stalled but still slipping
    episode is left running so it can end as SL+ST.
    """

    def __init__(self, window: float, progress: float, floor: float, cycle_time: float,
                 slip_growth: float = 1.0):
        self.span = max(1, int(round(window / cycle_time)))
        self.progress = progress
        self.floor = floor
        self.slip_growth = slip_growth
        self.history: list[float] = []
        self.slips: list[float] = []

    def push(self, error: float, slip: float = 0.0) -> bool:
        self.history.append(error)
        self.slips.append(slip)
        return self.stalled()

    def quiescent(self) -> bool:
        s = self.slips
        return len(s) > self.span and s[-1] - s[-1 - self.span] < self.slip_growth

    def stalled(self) -> bool:
        h = self.history
        if len(h) <= self.span or h[-1] < self.floor:
            return False
        return h[-1 - self.span] - h[-1] < self.progress


def initial_optimizer(cfg: ScenarioConfig) -> OptimizerState:
    o = cfg.optimizer
    cap = cfg.controller.rotation_cap
    if cfg.scenario == CONTACT:
        # straight down, towards the floor
        return OptimizerState.for_task((0.0, 0.0, -1.0), alpha=o.alpha, epsilon=o.epsilon_task,
                                       lambda0=cfg.lambda0, rotation_cap=cap, alpha_min=o.alpha_min)
    return OptimizerState.for_coordination((0.0, 0.0, 0.0), alpha=o.alpha, epsilon=o.epsilon_rpy,
                                           lambda0=cfg.lambda0, rotation_cap=cap, alpha_min=o.alpha_min)


class Episode:
    """Runs one configured episode; also the plant the optimizer probes."""

    def __init__(self, cfg: ScenarioConfig, log_path: str | Path | None = None,
                 world: SimWorld | None = None, target: Rotation | None = None):
        self.cfg = cfg
        if world is None:
            world, target = build_world(cfg)
        self.world = world
        self.target = target
        self.controller = Controller(cfg.controller, initial_optimizer(cfg), cfg.optimizer.cadence)
        self.log = EpisodeLog(log_path)
        self.log_path = None if log_path is None else str(log_path)
        lim = cfg.limits
        self.stall = StallDetector(lim.stall_window_s, lim.stall_progress_deg, lim.success_deg,
                                   world.cycle_time)
        self.frame = world.observe()
        self.probe_cycles = 0
        self.optimizer_steps = 0
        self.max_ticks = int(math.ceil(cfg.time_limit / world.cycle_time))

    # -- stepping ---------------------------------------------------------------------

    def error(self) -> float:
        return object_orientation_error(self.world, self.target)

    def _advance(self, cmd: GripperCommand, activity: CycleActivity, probing: bool = False):
        try:
            self.frame = self.world.step(cmd)
        except ObjectDropped:
            raise _Finished(DROPPED)
        except Diverged:
            raise _Finished(DIVERGED)
        if probing:
            self.probe_cycles += 1
        left, right = slip_metrics(self.frame.left), slip_metrics(self.frame.right)
        err = self.error()
        w = self.world
        self.log.cycle(CycleRecord(
            w.tick, w.time, w.object_pose7(), cmd.grip_force,
            left.s1_norm, left.s2, right.s1_norm, right.s2, w.slip[0], w.slip[1], err,
            activity.finger, activity.task, activity.constraint, activity.coordinating, probing,
        ))
        self._check(err)

    def _check(self, err: float) -> None:
        lim = self.cfg.limits
        slip = float(np.max(self.world.slip))
        stalled = self.stall.push(err, slip)
        if slip > lim.slip_mm:
            raise _Finished(SLIPPED_STALLED if stalled else SLIPPED)
        if err < lim.success_deg:
            raise _Finished(SUCCESS)
        if (stalled and self.stall.quiescent()) or self.world.tick >= self.max_ticks:
            raise _Finished(STALLED)

    def _force_only(self, velocity, rpy, probing: bool) -> None:
        """One cycle with a given gripper motion; the force laws stay active."""
        finger, s = self.controller.sense(self.frame)
        force, task_on, constraint_on = force_law(s, self.world.gripper.grip_force, self.cfg.controller)
        cmd = GripperCommand(np.asarray(velocity, dtype=float), RpyVector.from_array(rpy), force)
        self._advance(cmd, CycleActivity(finger, task_on, constraint_on, False), probing)

    # -- probe target ------------------------------------------------------------------

    def begin(self) -> Pose:
        return self.pose()

    def pose(self) -> Pose:
        g = self.world.gripper
        return Pose(g.rotation.matrix.copy(), g.position.copy())

    def probe(self, point: ProbePoint) -> float:
        """One full control cycle with the optimized action replaced by the probe."""
        finger, s = self.controller.sense(self.frame)
        probe_opt = replace(self.controller.opt, q=point.action, phase=point.phase)
        cmd, activity = compose_command(finger, s, self.world.gripper, probe_opt, self.cfg.controller)
        try:
            self._advance(cmd, activity, probing=True)
        except _Finished as done:
            if done.label == DROPPED:
                raise ProbeAborted("object dropped during a probe cycle") from done
            raise
        return self.frame_loss()

    def frame_loss(self) -> float:
        """Loss of the latest frame, averaged over both sensors with their own S2 sense."""
        lam = self.controller.opt.lambda0
        c = self.cfg.controller
        left, right = slip_metrics(self.frame.left), slip_metrics(self.frame.right)
        return 0.5 * (loss(left, lam, c.finger_sense(LEFT)) + loss(right, lam, c.finger_sense(RIGHT)))

    def move(self, velocity, rpy) -> None:
        self._force_only(velocity, rpy, probing=True)

    # -- main loop ------------------------------------------------------------------------

    def _optimize(self) -> None:
        c = self.cfg.controller
        before = self.controller.opt
        new, trace = optimize_step(self, before, v0=c.v0, cycle_time=self.world.cycle_time,
                                   speed_limit=2.0 * c.v0, detrend=self.cfg.optimizer.detrend)
        self.controller.optimized(new)
        self.optimizer_steps += 1
        self.log.optimizer(self.world.tick, trace.q_before, trace.q_after, trace.gradient,
                           trace.losses, trace.alpha)

    def run(self) -> EpisodeOutcome:
        label = STALLED
        try:
            self._check_initial()
            while True:
                if self.controller.optimization_due():
                    self._optimize()
                else:
                    cmd, activity = self.controller.command(self.frame, self.world.gripper)
                    self._advance(cmd, activity)
        except _Finished as done:
            label = done.label
        except ProbeAborted:
            label = DROPPED
        finally:
            self.log.close()
        return EpisodeOutcome(
            label=label,
            final_error_deg=self.error(),
            max_slip_mm=float(np.max(self.world.slip)),
            duration_s=self.world.time,
            log_path=self.log_path,
            ticks=self.world.tick,
            probe_cycles=self.probe_cycles,
            optimizer_steps=self.optimizer_steps,
            final_q=tuple(float(v) for v in self.controller.opt.q),
        )

    def _check_initial(self) -> None:
        if self.error() < self.cfg.limits.success_deg:
            raise _Finished(SUCCESS)


def run_episode(cfg: ScenarioConfig, log_path: str | Path | None = None) -> EpisodeOutcome:
    return Episode(cfg, log_path).run()
