"""Planar and spatial rigid-body types shared by every subsystem.

Conventions: world frame is x-forward/y-left/z-up, angles in radians,
headings normalized to (-pi, pi]. All types are immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TAU = 2.0 * math.pi


def normalize_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    t = math.remainder(theta, TAU)
    if t <= -math.pi:
        t += TAU
    return t


@dataclass(frozen=True, slots=True)
class Pose2D:
    """Planar pose (x, y, heading). Heading is normalized on construction."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def compose(self, other: "Pose2D") -> "Pose2D":
        """Rigid-body composition self ⊕ other (other expressed in self's frame)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )

    def inverse(self) -> "Pose2D":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(-(c * self.x + s * self.y), -(-s * self.x + c * self.y), -self.theta)

    def transform_point(self, px: float, py: float) -> tuple[float, float]:
        """Map a point from this pose's frame into the parent frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (self.x + c * px - s * py, self.y + s * px + c * py)

    def inverse_transform_point(self, px: float, py: float) -> tuple[float, float]:
        """Map a parent-frame point into this pose's frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        dx, dy = px - self.x, py - self.y
        return (c * dx + s * dy, -s * dx + c * dy)

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def angle_to(self, other: "Pose2D") -> float:
        return abs(normalize_angle(self.theta - other.theta))


def compose(a: Pose2D, b: Pose2D) -> Pose2D:
    return a.compose(b)


@dataclass(frozen=True, slots=True)
class Twist2D:
    """Body-frame velocity command: forward speed and yaw rate.

    There is deliberately no lateral component; the base cannot translate
    sideways and the type does not let callers ask for it.
    """

    v: float = 0.0
    omega: float = 0.0

    def is_zero(self, tol: float = 0.0) -> bool:
        return abs(self.v) <= tol and abs(self.omega) <= tol


ZERO_TWIST = Twist2D(0.0, 0.0)


# --- quaternion helpers (w, x, y, z Hamilton convention) ---


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = float(np.linalg.norm(q))
    if n == 0.0:
        raise ValueError("zero quaternion")
    q = q / n
    # canonical sign keeps serialized transforms reproducible
    if q[0] < 0.0:
        q = -q
    return q


def quat_multiply(a, b) -> np.ndarray:
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


def quat_conjugate(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])

def quat_rotate(q, v) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion."""
    qv = np.asarray(q[1:], dtype=float)
    v = np.asarray(v, dtype=float)
    t = 2.0 * np.cross(qv, v)
    return v + q[0] * t + np.cross(qv, t)


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = float(np.linalg.norm(axis))
    if n == 0.0:
        raise ValueError("zero rotation axis")
    half = 0.5 * angle
    return quat_normalize(np.concatenate(([math.cos(half)], math.sin(half) / n * axis)))


def quat_log(q) -> np.ndarray:
    """Rotation vector (axis * angle) of a unit quaternion, angle in [0, pi]."""
    q = quat_normalize(q)
    w = min(1.0, max(-1.0, float(q[0])))
    s = float(np.linalg.norm(q[1:]))
    if s < 1e-12:
        return np.zeros(3)
    angle = 2.0 * math.atan2(s, w)
    return (angle / s) * np.asarray(q[1:], dtype=float)


def quat_from_matrix(m) -> np.ndarray:
    """Unit quaternion of a proper rotation matrix (Shepperd's method)."""
    m = np.asarray(m, dtype=float)
    t = float(np.trace(m))
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array([(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array([(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array([(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s])
    return quat_normalize(q)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


@dataclass(frozen=True)
class Transform3D:
    """Rigid transform: unit quaternion rotation plus translation (meters)."""

    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        q = quat_normalize(self.rotation)
        if abs(float(np.linalg.norm(q)) - 1.0) > 1e-9:
            raise ValueError("quaternion does not normalize")
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).copy())

    @staticmethod
    def identity() -> "Transform3D":
        return Transform3D()

    @staticmethod
    def from_axis_angle(axis, angle: float, translation=(0.0, 0.0, 0.0)) -> "Transform3D":
        return Transform3D(quat_from_axis_angle(axis, angle), np.asarray(translation, dtype=float))

    @staticmethod
    def from_translation(x: float, y: float, z: float) -> "Transform3D":
        return Transform3D(np.array([1.0, 0.0, 0.0, 0.0]), np.array([x, y, z]))

    @staticmethod
    def from_pose2d(pose: Pose2D, z: float = 0.0) -> "Transform3D":
        """Lift a planar pose to 3-D (rotation about +z)."""
        return Transform3D.from_axis_angle((0.0, 0.0, 1.0), pose.theta, (pose.x, pose.y, z))

    def compose(self, other: "Transform3D") -> "Transform3D":
        return Transform3D(
            quat_multiply(self.rotation, other.rotation),
            self.translation + quat_rotate(self.rotation, other.translation),
        )

    def inverse(self) -> "Transform3D":
        qinv = quat_conjugate(self.rotation)
        return Transform3D(qinv, -quat_rotate(qinv, self.translation))

    def apply(self, point) -> np.ndarray:
        return self.translation + quat_rotate(self.rotation, np.asarray(point, dtype=float))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def rotation_log(self) -> np.ndarray:
        return quat_log(self.rotation)

    def rotation_angle_to(self, other: "Transform3D") -> float:
        """Geodesic angle between the two rotations."""
        rel = quat_multiply(quat_conjugate(self.rotation), other.rotation)
        return float(np.linalg.norm(quat_log(rel)))

    def almost_equal(self, other: "Transform3D", pos_tol: float = 1e-9, rot_tol: float = 1e-9) -> bool:
        return (
            float(np.linalg.norm(self.translation - other.translation)) <= pos_tol
            and self.rotation_angle_to(other) <= rot_tol
        )
