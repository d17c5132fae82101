"""Frame-tagged rotations and vectors.

Rotations are stored as 3x3 matrices tagged with the frame they map *from*
and the frame they map *to*, so ``Rotation(m, to_frame=G, from_frame=H)``
is the gripper-to-ground rotation. Composition only type-checks along a
chain ``(G <- H) @ (H <- C) = (G <- C)``.

Angles are radians everywhere in this module.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation as _SciRotation


class Frame(enum.Enum):
    G = "G"  # ground
    H = "H"  # hand / gripper
    C_LEFT = "C_left"  # left tactile sensor
    C_RIGHT = "C_right"  # right tactile sensor


class FrameError(ValueError):
    """Raised when frame tags of composed quantities do not line up."""


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def axis_angle_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues formula for a rotation of ``angle`` about ``axis``."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def matrix_angle(m: np.ndarray) -> float:
    """Rotation angle of an orthonormal matrix, in [0, pi].

    Uses atan2 of the skew and symmetric parts, which stays accurate near 0
    where the plain arccos of the trace loses half the digits.
    """
    c = (np.trace(m) - 1.0) / 2.0
    s = 0.5 * np.linalg.norm([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
    return float(np.arctan2(s, c))


@dataclass(frozen=True, eq=False)
class Rotation:
    matrix: np.ndarray
    to_frame: Frame
    from_frame: Frame

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"rotation matrix must be 3x3, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, to_frame: Frame = Frame.G, from_frame: Frame | None = None) -> Rotation:
        return cls(np.eye(3), to_frame, to_frame if from_frame is None else from_frame)

    def __matmul__(self, other: Rotation) -> Rotation:
        if not isinstance(other, Rotation):
            return NotImplemented
        if self.from_frame is not other.to_frame:
            raise FrameError(
                f"cannot compose ({self.to_frame.value}<-{self.from_frame.value}) with "
                f"({other.to_frame.value}<-{other.from_frame.value})"
            )
        return Rotation(self.matrix @ other.matrix, self.to_frame, other.from_frame)

    def inverse(self) -> Rotation:
        return Rotation(self.matrix.T, self.from_frame, self.to_frame)

    def angle(self) -> float:
        return matrix_angle(self.matrix)

    def is_proper(self, tol: float = 1e-12) -> bool:
        m = self.matrix
        return bool(
            np.allclose(m.T @ m, np.eye(3), atol=tol, rtol=0.0)
            and abs(np.linalg.det(m) - 1.0) <= tol
        )


@dataclass(frozen=True, eq=False)
class Vector3:
    values: np.ndarray
    frame: Frame

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(3)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class RpyVector:
    """Yaw about G-Z, pitch about G-Y, roll about G-X (radians)."""

    theta1: float
    theta2: float
    theta3: float

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta3"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or abs(value) > np.pi:
                raise ValueError(f"{name}={value!r} outside [-pi, pi]")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, arr) -> RpyVector:
        a = np.asarray(arr, dtype=float).reshape(3)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    @classmethod
    def zero(cls) -> RpyVector:
        return cls(0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2, self.theta3])


def rpy_matrix(theta) -> np.ndarray:
    """``R(Z, t1) @ R(Y, t2) @ R(X, t3)`` as a plain matrix."""
    t1, t2, t3 = (float(t) for t in np.asarray(theta, dtype=float).reshape(3))
    return rot_z(t1) @ rot_y(t2) @ rot_x(t3)


def rpy_to_rotation(r: RpyVector) -> Rotation:
    # an increment about fixed ground axes, so it maps G to G
    return Rotation(rpy_matrix(r.as_array()), Frame.G, Frame.G)


def transform_vector(R: Rotation, v: Vector3) -> Vector3:
    if v.frame is not R.from_frame:
        raise FrameError(f"vector in {v.frame.value} but rotation maps from {R.from_frame.value}")
    return Vector3(R.matrix @ v.values, R.to_frame)


def geodesic_angle(a: Rotation, b: Rotation) -> float:
    """Angle of the relative rotation between two orientations of the same frames."""
    if a.to_frame is not b.to_frame or a.from_frame is not b.from_frame:
        raise FrameError("geodesic angle needs rotations with identical frame tags")
    return matrix_angle(a.matrix.T @ b.matrix)


def matrix_to_rpy(m: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rpy_matrix`: angles ``(t1, t2, t3)`` with |t2| <= pi/2."""
    # intrinsic Z-Y-X Euler angles compose exactly as R(Z) R(Y) R(X)
    return _SciRotation.from_matrix(np.asarray(m, dtype=float)).as_euler("ZYX")
