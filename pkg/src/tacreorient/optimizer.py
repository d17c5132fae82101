"""Online finite-difference optimization of the action direction.

The decision vector ``q`` is either the unit task direction (contact
scenario, mode ``"task"``) or the RPY increment of the coordinating rotation
(in-air scenario, mode ``"coor"``). Each :func:`optimize_step` perturbs one
component at a time by ``+-epsilon``, executes one control cycle per
perturbation, reads the loss off that cycle's slip metrics, and then moves
the gripper so its pose is what a single nominal action would have produced.

The plant is abstracted as a :class:`ProbeTarget` so the same schedule can be
driven by the simulator or by a synthetic loss in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

import numpy as np
from scipy.optimize import brentq

from .geometry import axis_angle_matrix, matrix_angle, matrix_to_rpy, rpy_matrix
from .tactile import SlipMetrics

TASK = "task"
COOR = "coor"
MODES = (TASK, COOR)

UNIT_TOL = 1e-9
DEGENERATE_NORM = 1e-9
DEFAULT_ROTATION_CAP = math.radians(3.0)


class ProbeAborted(RuntimeError):
    """The object was lost while the schedule was running."""


class DegenerateDirection(ArithmeticError):
    """The task direction collapsed to zero; carries the recovered state."""

    def __init__(self, message: str, state: OptimizerState):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class Probing:
    m: int  # component index, 0..2
    sign: int  # +1 or -1


@dataclass(frozen=True, eq=False)
class OptimizerState:
    q: np.ndarray
    alpha: float = 0.05
    epsilon: float = 0.1
    lambda0: float = 0.8
    mode: str = TASK
    rotation_cap: float = DEFAULT_ROTATION_CAP
    phase: Probing | None = None  # None is the normal phase
    last_gradient: np.ndarray = field(default_factory=lambda: np.zeros(3))
    last_loss: float | None = None
    increases: int = 0  # consecutive loss increases
    steps: int = 0
    alpha_min: float = 0.0  # floor for the halving rule

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(3)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        g = np.array(self.last_gradient, dtype=float).reshape(3)
        g.setflags(write=False)
        object.__setattr__(self, "last_gradient", g)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not (self.alpha > 0 and self.epsilon > 0 and self.lambda0 > 0):
            raise ValueError("alpha, epsilon and lambda0 must be positive")
        if not 0.0 <= self.alpha_min <= self.alpha:
            raise ValueError("need 0 <= alpha_min <= alpha")
        if self.mode == TASK and self.phase is None and abs(np.linalg.norm(q) - 1.0) > UNIT_TOL:
            raise ValueError("task direction must be a unit vector")

    @classmethod
    def for_task(cls, direction, **kw) -> OptimizerState:
        d = np.asarray(direction, dtype=float)
        return cls(d / np.linalg.norm(d), mode=TASK, **kw)

    @classmethod
    def for_coordination(cls, rpy=(0.0, 0.0, 0.0), **kw) -> OptimizerState:
        kw.setdefault("epsilon", math.radians(0.5))
        return cls(np.asarray(rpy, dtype=float), mode=COOR, **kw)


# -- loss and gradient -----------------------------------------------------------

def rotation_loss(sigma: float, lambda0: float) -> float:
    """Shaped rotation term: rewards rotation in the desired sense up to ``lambda0``."""
    if sigma > 0:
        return (lambda0 - sigma) ** 2 - lambda0 ** 2
    return sigma * sigma


def loss(s: SlipMetrics, lambda0: float, s2_sense: int = 1) -> float:
    return float(np.dot(s.s1, s.s1)) + rotation_loss(s2_sense * s.s2, lambda0)


def gradient(losses: Sequence[float], epsilon: float, detrend: bool = False) -> np.ndarray:
    """Central differences from ``(L+1, L-1, L+2, L-2, L+3, L-3)``.

    The six probes run on consecutive cycles, so a plant whose loss drifts
    linearly in time biases every component by the same amount. With
    ``detrend`` the per-cycle drift is estimated from the first and last
    probe pairs and removed before differencing.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    L = np.asarray(losses, dtype=float).reshape(3, 2)
    diff = L[:, 0] - L[:, 1]
    if detrend:
        drift = (L[2].sum() - L[0].sum()) / 8.0  # pair means sit four cycles apart
        diff = diff + drift
    return diff / (2.0 * epsilon)


# -- the executed action of a decision vector -------------------------------------

def cap_rotation(rpy, cap: float = DEFAULT_ROTATION_CAP) -> np.ndarray:
    """Scale an RPY triple so its rotation angle is at most ``cap``; direction kept."""
    r = np.asarray(rpy, dtype=float).reshape(3)
    if matrix_angle(rpy_matrix(r)) <= cap:
        return r.copy()
    s = brentq(lambda t: matrix_angle(rpy_matrix(t * r)) - cap, 0.0, 1.0, xtol=1e-15, rtol=1e-15)
    return s * r


def executed_vector(q, mode: str, rotation_cap: float = DEFAULT_ROTATION_CAP) -> np.ndarray:
    """Direction (task) or capped RPY increment (coor) that ``q`` commands."""
    q = np.asarray(q, dtype=float)
    if mode == TASK:
        n = np.linalg.norm(q)
        if n < DEGENERATE_NORM:
            raise ValueError("cannot execute a zero task direction")
        return q / n
    return cap_rotation(q, rotation_cap)


# -- update ----------------------------------------------------------------------

def update(opt: OptimizerState, g) -> OptimizerState:
    """One learning-rate step ``q <- q - alpha g`` with the mode's projection."""
    g = np.asarray(g, dtype=float).reshape(3)
    q = opt.q - opt.alpha * g
    if opt.mode == TASK:
        n = np.linalg.norm(q)
        if n < DEGENERATE_NORM:
            recovered = replace(opt, alpha=max(opt.alpha / 2.0, opt.alpha_min), phase=None, last_gradient=g)
            raise DegenerateDirection(f"task direction norm {n:.3g} after update", recovered)
        q = q / n
    else:
        q = cap_rotation(q, opt.rotation_cap)
    return replace(opt, q=q, phase=None, last_gradient=g, steps=opt.steps + 1)


def _track_loss(opt: OptimizerState, current: float) -> OptimizerState:
    # halve alpha after two consecutive increases of the probed loss level
    increases = opt.increases + 1 if opt.last_loss is not None and current > opt.last_loss else 0
    alpha = opt.alpha
    if increases >= 2:
        alpha, increases = max(alpha / 2.0, opt.alpha_min), 0
    return replace(opt, last_loss=current, increases=increases, alpha=alpha)


# -- probing -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProbePoint:
    phase: Probing
    q: np.ndarray  # perturbed decision vector
    action: np.ndarray  # what it executes: unit direction or capped RPY


def probe_schedule(opt: OptimizerState) -> list[ProbePoint]:
    """The six perturbed decision vectors, in execution order."""
    if opt.phase is not None:
        raise RuntimeError("a probe schedule is already running")
    points = []
    for m in range(3):
        for sign in (1, -1):
            q = opt.q.copy()
            q[m] += sign * opt.epsilon
            points.append(ProbePoint(Probing(m, sign), q, executed_vector(q, opt.mode, opt.rotation_cap)))
    return points


@dataclass(frozen=True, eq=False)
class Pose:
    rotation: np.ndarray  # 3x3, gripper to ground
    position: np.ndarray  # mm


def nominal_pose(start: Pose, opt: OptimizerState, v0: float, cycle_time: float) -> Pose:
    """Where a single nominal action from ``start`` would leave the gripper."""
    if opt.mode == TASK:
        return Pose(start.rotation, start.position + v0 * cycle_time * executed_vector(opt.q, TASK))
    inc = rpy_matrix(executed_vector(opt.q, COOR, opt.rotation_cap))
    return Pose(inc @ start.rotation, start.position.copy())


def restoration_moves(current: Pose, target: Pose, speed_limit: float, rotation_cap: float,
                      cycle_time: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-cycle ``(velocity, rpy)`` commands that take ``current`` to ``target``.

    The path is split evenly into as many cycles as needed to respect the
    speed limit and the per-cycle rotation cap (with a small margin so each
    RPY component also stays under the cap).
    """
    delta_p = target.position - current.position
    rel = target.rotation @ current.rotation.T
    angle = matrix_angle(rel)
    dist = float(np.linalg.norm(delta_p))
    if dist == 0.0 and angle == 0.0:
        return []
    n = max(1, math.ceil(dist / (speed_limit * cycle_time) - 1e-12),
            math.ceil(angle / (0.95 * rotation_cap) - 1e-12))
    velocity = delta_p / (n * cycle_time)
    if angle > 0.0:
        axis = np.array([rel[2, 1] - rel[1, 2], rel[0, 2] - rel[2, 0], rel[1, 0] - rel[0, 1]])
        # near pi the skew part vanishes; not reachable with capped increments
        axis /= np.linalg.norm(axis)
        piece = matrix_to_rpy(axis_angle_matrix(axis, angle / n))
    else:
        piece = np.zeros(3)
    return [(velocity.copy(), piece.copy()) for _ in range(n)]


class ProbeTarget(Protocol):
    """What :func:`optimize_step` needs from the plant."""

    def begin(self) -> Pose:
        """Mark the start of a schedule and return the current gripper pose."""

    def probe(self, point: ProbePoint) -> float:
        """Run one control cycle with the perturbed action; return its loss."""

    def pose(self) -> Pose:
        ...

    def move(self, velocity: np.ndarray, rpy: np.ndarray) -> None:
        """Run one restoration cycle with the given gripper motion."""


@dataclass(frozen=True, eq=False)
class OptimizerTrace:
    q_before: np.ndarray
    q_after: np.ndarray
    gradient: np.ndarray
    losses: np.ndarray  # (6,)
    alpha: float
    degenerate: bool = False


def optimize_step(target: ProbeTarget, opt: OptimizerState, *, v0: float, cycle_time: float,
                  speed_limit: float, enabled: bool = True,
                  detrend: bool = False) -> tuple[OptimizerState, OptimizerTrace | None]:
    """Probe, estimate the gradient, restore the pose and update ``q``.

    With ``enabled`` false nothing is executed and ``opt`` comes back as is.
    Simulator drops inside the schedule surface as :class:`ProbeAborted`.
    """
    if not enabled:
        return opt, None
    start = target.begin()
    losses = []
    for point in probe_schedule(opt):
        losses.append(target.probe(point))
    goal = nominal_pose(start, opt, v0, cycle_time)
    for velocity, rpy in restoration_moves(target.pose(), goal, speed_limit, opt.rotation_cap, cycle_time):
        target.move(velocity, rpy)

    g = gradient(losses, opt.epsilon, detrend)
    tracked = _track_loss(opt, float(np.mean(losses)))
    degenerate = False
    try:
        new = update(tracked, g)
    except DegenerateDirection as exc:
        new, degenerate = exc.state, True
    trace = OptimizerTrace(opt.q.copy(), new.q.copy(), g, np.asarray(losses), new.alpha, degenerate)
    return new, trace
