"""Rigid transforms, quaternions and angle arithmetic.

Quaternions are stored Hamilton-style as ``[w, x, y, z]``. A :class:`Pose`
``T`` maps points from a child frame into its parent frame:
``p_parent = R(q) @ p_child + t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(a):
    """Wrap an angle to (-pi, pi]. An input of exactly -pi maps to +pi."""
    a = float(a)
    if -math.pi < a <= math.pi:
        return a
    w = math.fmod(a + math.pi, TWO_PI)
    if w <= 0.0:
        w += TWO_PI
    return w - math.pi


def quat_normalize(q):
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if not np.isfinite(n) or n == 0.0:
        raise ValueError(f"cannot normalize quaternion {q}")
    q = q / n
    # q and -q are the same rotation; keep w >= 0 so outputs are canonical
    if q[0] < 0.0:
        q = -q
    return q


def quat_multiply(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    s = math.sin(0.5 * angle)
    return np.array([math.cos(0.5 * angle), *(s * axis)])


def quat_from_yaw(yaw):
    return np.array([math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw)])


def quat_from_euler(roll, pitch, yaw):
    """Intrinsic Z-Y-X (yaw, then pitch, then roll) to quaternion."""
    cr, sr = math.cos(0.5 * roll), math.sin(0.5 * roll)
    cp, sp = math.cos(0.5 * pitch), math.sin(0.5 * pitch)
    cy, sy = math.cos(0.5 * yaw), math.sin(0.5 * yaw)
    return np.array(
        [
            cr * cp * cy + sr * sp * sy,
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy,
        ]
    )


def yaw_from_quat(q):
    w, x, y, z = q
    return math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))


def roll_pitch_quat(q):
    """Strip the yaw from ``q``, keeping only its roll/pitch part."""
    yaw = yaw_from_quat(q)
    return quat_normalize(quat_multiply(quat_from_yaw(-yaw), quat_normalize(q)))


@dataclass(frozen=True)
class Pose:
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rotation", quat_normalize(self.rotation))
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(t)):
            raise ValueError(f"non-finite translation {t}")
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_xyz_rpy(cls, x, y, z, roll=0.0, pitch=0.0, yaw=0.0):
        return cls(quat_from_euler(roll, pitch, yaw), np.array([x, y, z], dtype=float))

    @property
    def matrix(self):
        return quat_to_matrix(self.rotation)

    @property
    def yaw(self):
        return yaw_from_quat(self.rotation)

    def homogeneous(self):
        T = np.eye(4)
        T[:3, :3] = self.matrix
        T[:3, 3] = self.translation
        return T

    def inverse(self):
        return inverse(self)

    def __matmul__(self, other):
        return compose(self, other)


def compose(a: Pose, b: Pose) -> Pose:
    """Pose that applies ``b`` first, then ``a``."""
    q = quat_multiply(a.rotation, b.rotation)
    t = a.matrix @ b.translation + a.translation
    return Pose(q, t)


def inverse(T: Pose) -> Pose:
    q = quat_conjugate(T.rotation)
    return Pose(q, -(quat_to_matrix(q) @ T.translation))


def transform_point(T: Pose, p):
    return T.matrix @ np.asarray(p, dtype=float) + T.translation


def transform_points(T: Pose, points):
    """Vectorised :func:`transform_point` for an (N, 3) array."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    return points @ T.matrix.T + T.translation


def rotate_vectors(T: Pose, vectors):
    vectors = np.asarray(vectors, dtype=float).reshape(-1, 3)
    return vectors @ T.matrix.T
