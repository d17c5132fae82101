"""Gripper state and the per-cycle command the controller emits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Frame, Rotation, RpyVector

# sensor-to-gripper mounting; fingers close along the gripper y axis, the left
# finger sits at +y and its sensor normal points along -y (towards the object)
HAND_FROM_LEFT = Rotation(np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]),
                          Frame.H, Frame.C_LEFT)
HAND_FROM_RIGHT = Rotation(np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]]),
                           Frame.H, Frame.C_RIGHT)
HAND_FROM_SENSOR = {"left": HAND_FROM_LEFT, "right": HAND_FROM_RIGHT}


@dataclass
class GripperState:
    rotation: Rotation  # gripper to ground
    position: np.ndarray  # mm, ground frame
    finger_separation: float  # mm
    grip_force: float  # N

    def __post_init__(self):
        if self.rotation.to_frame is not Frame.G or self.rotation.from_frame is not Frame.H:
            raise ValueError("gripper rotation must map H to G")
        self.position = np.array(self.position, dtype=float).reshape(3)
        if self.grip_force < 0:
            raise ValueError("grip force must be non-negative")

    def copy(self) -> GripperState:
        return GripperState(self.rotation, self.position.copy(), self.finger_separation, self.grip_force)


@dataclass
class GripperCommand:
    linear_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))  # mm/s, ground
    rpy_increment: RpyVector = field(default_factory=RpyVector.zero)
    grip_force: float = 0.0  # N

    def __post_init__(self):
        self.linear_velocity = np.array(self.linear_velocity, dtype=float).reshape(3)
