"""Fixed-step world: a prismatic object pinched between two compliant patches.

The object can only move in the gripper's x-z plane relative to the fingers
(translation plus pivot about the grasp axis); out-of-plane loads shift the
normal force between the two fingers. Each control cycle is integrated as a
number of 1 ms substeps by :mod:`._kernel`.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation as _SciRotation

from ..geometry import Frame, Rotation, axis_angle_matrix, matrix_angle, rot_y, rpy_matrix
from ..gripper import HAND_FROM_LEFT, HAND_FROM_RIGHT, HAND_FROM_SENSOR, GripperCommand, GripperState
from ..tactile import LEFT, RIGHT, MarkerField
from . import _kernel
from .objects import CableDisturbance, Environment, ObjectTemplate, resample_outline

GRAVITY = 9810.0  # mm/s^2
DEFAULT_DT = 0.001  # s
DEFAULT_SUBSTEPS = 33  # 33 ms control cycle
ENV_SAMPLE_SPACING = 4.0  # mm


class SimulationError(RuntimeError):
    pass


class Diverged(SimulationError):
    pass


class ObjectDropped(SimulationError):
    pass


@dataclass(frozen=True)
class TactileFrame:
    left: MarkerField
    right: MarkerField
    tick: int
    sim_time: float

    def field(self, finger: str) -> MarkerField:
        return self.left if finger == LEFT else self.right


class SimWorld:
    """Mutable simulator state. :meth:`step` advances one control cycle."""

    def __init__(
        self,
        template: ObjectTemplate,
        *,
        grasp_point=(0.0, 0.0),
        object_angle: float = 0.0,
        gripper_position=(0.0, 0.0, 0.0),
        gripper_rotation: Rotation | None = None,
        grip_force: float = 10.0,
        environment: Environment | None = None,
        disturbance: CableDisturbance | None = None,
        dt: float = DEFAULT_DT,
        substeps: int = DEFAULT_SUBSTEPS,
        seed: int = 0,
        gravity: bool = True,
        fixed_object: bool = False,
        v_max: float = 50.0,
        rotation_cap: float = math.radians(3.0),
        f_max: float = 40.0,
    ):
        if dt <= 0 or substeps < 1:
            raise ValueError("dt and substeps must be positive")
        if not 0 <= grip_force <= f_max:
            raise ValueError(f"grip force {grip_force} outside [0, {f_max}]")
        self.template = template
        self.environment = environment or Environment.empty()
        self.disturbance = disturbance
        self.dt = float(dt)
        self.substeps = int(substeps)
        self.seed = int(seed)
        self.gravity = bool(gravity)
        self.fixed_object = bool(fixed_object)
        self.v_max = float(v_max)
        self.rotation_cap = float(rotation_cap)
        self.f_max = float(f_max)

        self.gripper = GripperState(
            gripper_rotation or Rotation.identity(Frame.G, Frame.H),
            np.asarray(gripper_position, dtype=float),
            template.thickness,
            float(grip_force),
        )
        self.grasp_point = np.asarray(grasp_point, dtype=float)
        self.tick = 0
        self.time = 0.0

        patch = template.patch
        ref, normals = patch.markers()
        self._ref_c = ref
        self._normals_c = normals
        self._bases = np.ascontiguousarray(ref[:, :2])  # sensor x-y == hand x-z on the left finger
        self._n_pins = len(ref)

        self._outline = np.ascontiguousarray(template.outline - self.grasp_point)
        ring = resample_outline(self._outline, ENV_SAMPLE_SPACING)
        half = template.thickness / 2.0
        self._env_pts = np.ascontiguousarray(np.vstack([
            np.column_stack([ring[:, 0], np.full(len(ring), y), ring[:, 1]]) for y in (-half, half)
        ]))
        self._com = np.ascontiguousarray(template.com - self.grasp_point)
        self._inertia_c = float(template.inertia[1, 1]) / 1000.0
        self._mass = template.mass / 1000.0
        self._k_t = np.array([patch.k_t, patch.k_t])
        self._mu = np.array([patch.mu, patch.mu])
        # heavy damping: twice critical for the in-plane patch modes
        k_lin = 2.0 * patch.stiffness
        k_rot = 2.0 * patch.k_t * float(np.sum(self._bases ** 2))
        inertia_o = self._inertia_c + self._mass * float(self._com @ self._com)
        self._damp_lin = 4.0 * math.sqrt(k_lin * self._mass)
        self._damp_rot = 4.0 * math.sqrt(k_rot * inertia_o)

        self.q = np.array([0.0, 0.0, float(object_angle)])
        self.v = np.zeros(3)
        self.liquid = np.zeros(2)
        if template.liquid_radius > 0:
            # start settled under gravity in the initial pose
            g_body = rot_y(-object_angle) @ (self.gripper.rotation.matrix.T @ [0.0, 0.0, -1.0])
            gb = np.array([g_body[0], g_body[2]])
            if np.linalg.norm(gb) > 1e-9:
                self.liquid = template.liquid_radius * gb / np.linalg.norm(gb)
        self.anchors = np.zeros((2, self._n_pins, 2))
        c, s = math.cos(self.q[2]), math.sin(self.q[2])
        for f in range(2):
            bx, bz = self._bases[:, 0], self._bases[:, 1]
            self.anchors[f, :, 0] = c * bx - s * bz
            self.anchors[f, :, 1] = s * bx + c * bz
        self.slip = np.zeros(2)
        self.defl = np.zeros((2, self._n_pins, 2))
        self.active = np.zeros((2, self._n_pins), dtype=np.bool_)
        self.normal_force = np.array([grip_force, grip_force], dtype=float)
        self._fixed_R = np.eye(3)
        self._fixed_p = np.zeros(3)
        if self.fixed_object:
            self._fixed_R = self.object_matrix()
            self._fixed_p = self.object_origin()
        n = _kernel.update_pins(self.q, self.anchors, self._bases, self._outline, self.normal_force,
                                self._k_t, self._mu, patch.texture_amp, patch.texture_wavelength,
                                self.defl, self.active, self.slip)
        if n == 0:
            raise ObjectDropped("finger patches do not touch the object at the grasp point")

    # -- state queries -----------------------------------------------------------

    @property
    def cycle_time(self) -> float:
        return self.dt * self.substeps

    def copy(self) -> SimWorld:
        return copy.deepcopy(self)

    def in_hand_matrix(self) -> np.ndarray:
        return rot_y(self.q[2])

    def object_matrix(self) -> np.ndarray:
        return self.gripper.rotation.matrix @ rot_y(self.q[2])

    def object_origin(self) -> np.ndarray:
        """Ground position of the grasp point on the object, mm."""
        return self.gripper.position + self.gripper.rotation.matrix @ [self.q[0], 0.0, self.q[1]]

    def object_com(self) -> np.ndarray:
        c = self._com
        return self.object_origin() + self.object_matrix() @ [c[0], 0.0, c[1]]

    def object_rotation(self, frame: Frame = Frame.G) -> Rotation:
        """Object attitude relative to its reference pose, in ground or hand axes."""
        if frame is Frame.G:
            return Rotation(self.object_matrix(), Frame.G, Frame.G)
        if frame is Frame.H:
            return Rotation(self.in_hand_matrix(), Frame.H, Frame.H)
        raise ValueError("object attitude is reported in G or H")

    def object_pose7(self) -> np.ndarray:
        """(qw, qx, qy, qz, x, y, z) of the object for logging."""
        x, y, z, w = _SciRotation.from_matrix(self.object_matrix()).as_quat()
        return np.concatenate([[w, x, y, z], self.object_origin()])

    def hand_from_sensor(self, finger: str) -> Rotation:
        return HAND_FROM_SENSOR[finger]

    def energy(self) -> float:
        """Mechanical energy in joules: kinetic, gravity, pin and penalty springs."""
        m = self._mass
        c = rot_y(self.q[2])[[0, 2]][:, [0, 2]] @ self._com
        jc = np.array([c[1], -c[0]])
        M = np.array([
            [m, 0.0, m * jc[0]],
            [0.0, m, m * jc[1]],
            [m * jc[0], m * jc[1], self._inertia_c + m * c @ c],
        ])
        kinetic = 0.5 * self.v @ M @ self.v
        potential = (self.template.mass * GRAVITY / 1000.0) * self.object_com()[2] if self.gravity else 0.0
        pins = 0.5 * float(np.sum(self._k_t[:, None] * np.sum(self.defl ** 2, axis=2) * self.active))
        env = 0.0
        pts = self._env_world_points()
        env_k = self.environment.stiffness
        for nx, ny, nz, off in self.environment.planes:
            gap = pts @ [nx, ny, nz] - off
            env += 0.5 * env_k * float(np.sum(np.minimum(gap, 0.0) ** 2))
        return (kinetic + potential + pins + env) / 1000.0

    def _env_world_points(self) -> np.ndarray:
        r = rot_y(self.q[2])
        local = self._env_pts @ r.T + [self.q[0], 0.0, self.q[1]]
        return local @ self.gripper.rotation.matrix.T + self.gripper.position

    # -- stepping ------------------------------------------------------------------

    def _check_command(self, cmd: GripperCommand) -> np.ndarray:
        speed = float(np.linalg.norm(cmd.linear_velocity))
        if speed > self.v_max * (1 + 1e-9):
            raise ValueError(f"commanded speed {speed:.3f} mm/s exceeds {self.v_max}")
        inc = rpy_matrix(cmd.rpy_increment.as_array())
        if matrix_angle(inc) > self.rotation_cap * (1 + 1e-9) + 1e-15:
            raise ValueError("commanded rotation exceeds the per-cycle cap")
        if not 0 <= cmd.grip_force <= self.f_max * (1 + 1e-12):
            raise ValueError(f"grip force {cmd.grip_force} outside [0, {self.f_max}]")
        return inc

    def step(self, cmd: GripperCommand) -> TactileFrame:
        inc = self._check_command(cmd)
        n, dt = self.substeps, self.dt
        T = n * dt
        R0 = self.gripper.rotation.matrix
        p0 = self.gripper.position
        v_H = np.array(cmd.linear_velocity, dtype=float)
        angle = matrix_angle(inc)
        fractions = np.arange(1, n + 1) / n
        if angle > 0.0:
            axis = np.array([inc[2, 1] - inc[1, 2], inc[0, 2] - inc[2, 0], inc[1, 0] - inc[0, 1]])
            axis /= np.linalg.norm(axis)
            R_sub = np.stack([axis_angle_matrix(axis, angle * fr) @ R0 for fr in fractions[:-1]]
                             + [inc @ R0])
            w_H = axis * angle / T
        else:
            axis = np.zeros(3)
            R_sub = np.repeat(R0[None], n, axis=0)
            w_H = np.zeros(3)
        p_sub = p0[None, :] + v_H[None, :] * (dt * np.arange(1, n + 1))[:, None]
        p_end = p0 + v_H * T
        p_sub[-1] = p_end

        times = self.time + dt * np.arange(1, n + 1)
        if self.disturbance is not None:
            dist_force = np.ascontiguousarray(self.disturbance.force(times))
            point = np.array(self.disturbance.point, dtype=float)
            dist_point = point - [self.grasp_point[0], 0.0, self.grasp_point[1]]
        else:
            dist_force = np.zeros((n, 3))
            dist_point = np.zeros(3)

        patch = self.template.patch
        env = self.environment
        status = _kernel.advance(
            n, dt,
            np.ascontiguousarray(R_sub), np.ascontiguousarray(p_sub), v_H, w_H, float(cmd.grip_force),
            self.q, self.v, self.liquid, self.anchors, self.slip,
            self._mass, self._inertia_c, self._com, self._com, float(self.template.liquid_radius),
            float(self.template.liquid_tau),
            self._outline, self._env_pts,
            self._bases, self._k_t, self._mu, float(patch.texture_amp),
            float(patch.texture_wavelength), self._damp_lin, self._damp_rot,
            env.planes, env.boxes, float(env.stiffness), float(env.damping), float(env.mu),
            float(env.slip_velocity),
            dist_force, dist_point,
            self.gravity, self.fixed_object, self._fixed_R, self._fixed_p,
            self.defl, self.active, self.normal_force,
        )
        self.gripper = GripperState(Rotation(inc @ R0, Frame.G, Frame.H), p_end,
                                    self.gripper.finger_separation, float(cmd.grip_force))
        self.tick += 1
        self.time = self.tick * T
        if status == _kernel.DIVERGED:
            raise Diverged(f"object speed blew up at t={self.time:.3f}s")
        if status == _kernel.DROPPED:
            raise ObjectDropped(f"both finger contacts lost at t={self.time:.3f}s")
        return self.observe()

    # -- sensing -------------------------------------------------------------------

    def marker_field(self, finger: str) -> MarkerField:
        f = 0 if finger == LEFT else 1
        sign = 1.0 if finger == LEFT else -1.0
        d = self.defl[f]
        active = self.active[f]
        count = max(int(active.sum()), 1)
        compression = self.normal_force[f] / count / self.template.patch.k_n
        disp = np.zeros((self._n_pins, 3))
        disp[:, 0] = d[:, 0]
        disp[:, 1] = sign * d[:, 1]
        disp[:, 2] = np.where(active, -compression, 0.0)
        ref = self._ref_c.copy()
        ref[:, 1] *= sign
        normals = self._normals_c.copy()
        normals[:, 1] *= sign
        return MarkerField(finger, ref, disp, normals)

    def observe(self) -> TactileFrame:
        return TactileFrame(self.marker_field(LEFT), self.marker_field(RIGHT), self.tick, self.time)


def step(world: SimWorld, cmd: GripperCommand) -> tuple[SimWorld, TactileFrame]:
    """Functional form of :meth:`SimWorld.step`; the input world is left untouched."""
    nxt = world.copy()
    frame = nxt.step(cmd)
    return nxt, frame


def object_orientation_error(world: SimWorld, target: Rotation) -> float:
    """Geodesic angle in degrees between the object attitude and ``target``.

    ``target`` tagged ``(H, H)`` is compared with the in-hand attitude,
    ``(G, G)`` with the ground attitude.
    """
    if target.to_frame is not target.from_frame or target.to_frame not in (Frame.G, Frame.H):
        raise ValueError("target attitude must be tagged (G, G) or (H, H)")
    current = world.object_rotation(target.to_frame)
    return math.degrees(matrix_angle(current.matrix.T @ target.matrix))


def accumulated_tangential_slip(world: SimWorld) -> dict[str, float]:
    """Path length of kinetic slip per finger since the episode started, mm."""
    return {LEFT: float(world.slip[0]), RIGHT: float(world.slip[1])}
