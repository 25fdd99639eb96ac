"""Poses and quaternion helpers shared across the navigation stack.

Quaternions are stored as (x, y, z, w) arrays. Frames: W is the fixed world
frame, R the robot body frame (+x forward, +z up), S the sensor frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_UNIT_TOL = 1e-9


def quat_identity() -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, 1.0])


def quat_from_yaw(yaw: float) -> np.ndarray:
    """Quaternion for a rotation of `yaw` radians about +z."""
    half = 0.5 * yaw
    return np.array([0.0, 0.0, math.sin(half), math.cos(half)])


def quat_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Hamilton product q1 * q2 (apply q2 first, then q1)."""
    x1, y1, z1, w1 = q1
    x2, y2, z2, w2 = q2
    return np.array(
        [
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        ]
    )


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return np.asarray(q, dtype=float) / np.linalg.norm(q)


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    """3x3 rotation matrix of a unit quaternion."""
    x, y, z, w = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def yaw_of(q: np.ndarray) -> float:
    """Yaw angle (rotation about +z) of a quaternion, in (-pi, pi]."""
    x, y, z, w = q
    return math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))


@dataclass
class Pose:
    """Position plus unit-quaternion orientation of a rigid body.

    `p` is a 3-vector in meters, `q` a unit quaternion (x, y, z, w). World
    frame unless stated otherwise by the caller.
    """

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=quat_identity)

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float).reshape(3)
        self.q = np.asarray(self.q, dtype=float).reshape(4)
        norm = np.linalg.norm(self.q)
        if abs(norm - 1.0) > _UNIT_TOL:
            raise ValueError(f"quaternion norm {norm} deviates from 1 by more than {_UNIT_TOL}")

    def rotation(self) -> np.ndarray:
        return rotation_matrix(self.q)

    def transform(self, local: np.ndarray) -> np.ndarray:
        """Map body-frame point(s) into the parent frame. Accepts (3,) or (N, 3)."""
        local = np.asarray(local, dtype=float)
        if local.ndim == 1:
            return self.p + self.rotation() @ local
        return self.p + local @ self.rotation().T

    def inverse_transform(self, world: np.ndarray) -> np.ndarray:
        """Map parent-frame point(s) into this body's frame."""
        world = np.asarray(world, dtype=float)
        if world.ndim == 1:
            return self.rotation().T @ (world - self.p)
        return (world - self.p) @ self.rotation()

    def yaw(self) -> float:
        return yaw_of(self.q)
