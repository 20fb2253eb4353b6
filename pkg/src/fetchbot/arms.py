"""Dual 7-joint arm kinematics: FK, damped-least-squares IK, arm selection,
grasp sequencing, self-collision capsules, payload gate and the handover
force monitor.

All arm math happens in the robot base frame (x forward, y left, z up).
The shipped chain is a 1.0 m reach, 7-revolute arm mounted at shoulder
height; at q = 0 it extends straight out along its mount direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Transform3D, quat_conjugate, quat_from_matrix, quat_log, quat_multiply

PAYLOAD_LIMIT_KG = 2.2

IK_DAMPING = 0.1
IK_STEP_CLAMP = 0.2
IK_MAX_ITERS = 200
IK_RESTARTS = 3
IK_POS_TOL = 1e-3
IK_ROT_TOL = 1e-2

# end effector pointing straight down, knuckles forward
GRIPPER_DOWN = np.array([0.0, 1.0, 0.0, 0.0])

GRASP_APPROACH_OFFSET = 0.10  # meters above the grasp, both approach and retreat


@dataclass(frozen=True)
class Joint:
    offset_t: tuple  # fixed translation from previous frame
    axis: tuple      # unit rotation axis in this joint's frame
    q_min: float
    q_max: float


class KinematicChain:
    """Seven revolute joints hanging off a fixed mount transform."""

    def __init__(self, name: str, mount: Transform3D, joints: list[Joint], tool_t=(0.1, 0.0, 0.0),
                 capsule_radius: float = 0.05):
        if len(joints) != 7:
            raise ValueError("chain must have exactly 7 joints")
        for j in joints:
            if not j.q_min < j.q_max:
                raise ValueError("joint limits must satisfy q_min < q_max")
        self.name = name
        self.mount = mount
        self.joints = list(joints)
        self.tool_t = np.asarray(tool_t, dtype=float)
        self.capsule_radius = float(capsule_radius)
        self._mount_R = mount.rotation_matrix()
        self._mount_p = mount.translation
        self._offsets = np.array([j.offset_t for j in joints], dtype=float)
        self._axes = np.array([j.axis for j in joints], dtype=float)
        self.q_min = np.array([j.q_min for j in joints])
        self.q_max = np.array([j.q_max for j in joints])

    @property
    def reach(self) -> float:
        return float(np.sum(np.linalg.norm(self._offsets, axis=1)) + np.linalg.norm(self.tool_t))

    @property
    def shoulder(self) -> np.ndarray:
        return self._mount_p

    def clamp(self, q) -> np.ndarray:
        return np.clip(np.asarray(q, dtype=float), self.q_min, self.q_max)

    def within_limits(self, q, tol: float = 1e-9) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.q_min - tol) and np.all(q <= self.q_max + tol))

    def random_configuration(self, rng: np.random.Generator, margin: float = 0.1) -> np.ndarray:
        span = self.q_max - self.q_min
        lo = self.q_min + margin * span
        hi = self.q_max - margin * span
        return rng.uniform(lo, hi)

    def link_points(self, q) -> np.ndarray:
        """Capsule spine: the 7 joint origins plus the tool point, (8, 3)."""
        origins, _, _, p_ee = _fk_frames(self, q)
        return np.vstack([origins, p_ee])


def _axis_angle_matrix(axis, angle: float) -> np.ndarray:
    x, y, z = axis
    c = math.cos(angle)
    s = math.sin(angle)
    t = 1.0 - c
    return np.array(
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    )


def _fk_frames(chain: KinematicChain, q):
    q = np.asarray(q, dtype=float)
    R = chain._mount_R
    p = chain._mount_p
    origins = np.empty((7, 3))
    axes = np.empty((7, 3))
    for i in range(7):
        p = p + R @ chain._offsets[i]
        origins[i] = p
        a = R @ chain._axes[i]
        axes[i] = a
        R = R @ _axis_angle_matrix(chain._axes[i], q[i])
    p_ee = p + R @ chain.tool_t
    return origins, axes, R, p_ee


def forward_kinematics(chain: KinematicChain, q) -> Transform3D:
    """End-effector pose in the robot base frame."""
    _, _, R, p = _fk_frames(chain, q)
    return Transform3D(quat_from_matrix(R), p)


def jacobian(chain: KinematicChain, q) -> np.ndarray:
    """Geometric Jacobian (6x7): rows are [v; omega] per unit joint rate."""
    origins, axes, _, p_ee = _fk_frames(chain, q)
    J = np.empty((6, 7))
    for i in range(7):
        J[:3, i] = np.cross(axes[i], p_ee - origins[i])
        J[3:, i] = axes[i]
    return J


def _pose_error(target_q, target_p, R, p):
    e = np.empty(6)
    e[:3] = target_p - p
    rel = quat_multiply(target_q, quat_conjugate(quat_from_matrix(R)))
    e[3:] = quat_log(rel)
    return e


def solve_ik(chain: KinematicChain, target: Transform3D, seed, max_iters: int = IK_MAX_ITERS,
             restarts: int = IK_RESTARTS) -> np.ndarray | None:
    """Damped-least-squares IK; returns a joint vector or None when unreachable.

    Each iteration solves (J J^T + lambda^2 I) y = e, steps q by J^T y with a
    per-joint clamp, and projects onto the joint limits. Failed solves retry
    from deterministic perturbations of the seed.
    """
    target_p = target.translation
    target_quat = target.rotation
    if float(np.linalg.norm(target_p - chain.shoulder)) > chain.reach + IK_POS_TOL:
        return None

    seed = chain.clamp(seed)
    rng = np.random.default_rng(0xF7)  # fixed: identical retries for identical calls
    lam_sq = IK_DAMPING * IK_DAMPING
    eye6 = np.eye(6)

    for attempt in range(restarts + 1):
        q = seed if attempt == 0 else chain.clamp(seed + rng.uniform(-0.3, 0.3, 7))
        for _ in range(max_iters):
            origins, axes, R, p_ee = _fk_frames(chain, q)
            e = _pose_error(target_quat, target_p, R, p_ee)
            if np.linalg.norm(e[:3]) < IK_POS_TOL and np.linalg.norm(e[3:]) < IK_ROT_TOL:
                return q
            J = np.empty((6, 7))
            for i in range(7):
                J[:3, i] = np.cross(axes[i], p_ee - origins[i])
                J[3:, i] = axes[i]
            y = np.linalg.solve(J @ J.T + lam_sq * eye6, e)
            dq = J.T @ y
            np.clip(dq, -IK_STEP_CLAMP, IK_STEP_CLAMP, out=dq)
            q = chain.clamp(q + dq)
        # fall through to restart
    return None


def select_arm(left: KinematicChain, right: KinematicChain, object_pose: Transform3D) -> str | None:
    """Pick the arm whose shoulder is closer, if the target is in its reach.

    Exact ties go to the right arm; returns None when neither can reach.
    """
    p = object_pose.translation
    scores = {}
    for chain in (left, right):
        d = float(np.linalg.norm(p - chain.shoulder))
        scores[chain.name] = d if d <= chain.reach else math.inf
    if scores["left"] == scores["right"] == math.inf:
        return None
    return "left" if scores["left"] < scores["right"] else "right"


class GraspInfeasible(Exception):
    """IK failed for one of the grasp waypoints; carries the waypoint name."""

    def __init__(self, waypoint: str):
        super().__init__(f"no IK solution for {waypoint} waypoint")
        self.waypoint = waypoint


@dataclass(frozen=True)
class GraspPlan:
    arm: str
    object_id: str
    object_mass: float
    object_pose: Transform3D
    intermediate: np.ndarray = field(repr=False)
    grasp: np.ndarray = field(repr=False)
    retreat: np.ndarray = field(repr=False)

    @property
    def waypoints(self):
        return [("intermediate", self.intermediate), ("grasp", self.grasp), ("retreat", self.retreat)]


def plan_grasp(chain: KinematicChain, object_id: str, object_pose: Transform3D, mass: float,
               seed_q=None) -> GraspPlan:
    """Three-waypoint grasp: descend from one intermediate point, close,
    retreat straight back up. Raises GraspInfeasible naming the waypoint
    whose IK failed."""
    seed = np.zeros(7) if seed_q is None else np.asarray(seed_q, dtype=float)
    grasp_pose = Transform3D(GRIPPER_DOWN, object_pose.translation)
    lift = np.array([0.0, 0.0, GRASP_APPROACH_OFFSET])
    above = Transform3D(GRIPPER_DOWN, grasp_pose.translation + lift)

    q_mid = solve_ik(chain, above, seed)
    if q_mid is None:
        raise GraspInfeasible("intermediate")
    q_grasp = solve_ik(chain, grasp_pose, q_mid)
    if q_grasp is None:
        raise GraspInfeasible("grasp")
    q_retreat = solve_ik(chain, above, q_grasp)
    if q_retreat is None:
        raise GraspInfeasible("retreat")
    return GraspPlan(chain.name, object_id, mass, object_pose, q_mid, q_grasp, q_retreat)


def monitor_target(plan: GraspPlan, latest_pose: Transform3D, pos_tol: float = 0.03,
                   rot_tol: float = 0.1) -> str:
    """'keep' while the object stays where the plan expects it, else 'replan'."""
    dp = float(np.linalg.norm(latest_pose.translation - plan.object_pose.translation))
    da = plan.object_pose.rotation_angle_to(latest_pose)
    return "replan" if (dp > pos_tol or da > rot_tol) else "keep"


def _segment_distance(p1, q1, p2, q2) -> float:
    """Minimum distance between segments p1-q1 and p2-q2 (Ericson 5.1.9)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    if a <= 1e-12 and e <= 1e-12:
        return float(np.linalg.norm(r))
    if a <= 1e-12:
        s, t = 0.0, min(1.0, max(0.0, f / e))
    else:
        c = float(d1 @ r)
        if e <= 1e-12:
            t, s = 0.0, min(1.0, max(0.0, -c / a))
        else:
            b = float(d1 @ d2)
            denom = a * e - b * b
            s = min(1.0, max(0.0, (b * f - c * e) / denom)) if denom > 1e-12 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t = 1.0
                s = min(1.0, max(0.0, (b - c) / a))
    c1 = p1 + s * d1
    c2 = p2 + t * d2
    return float(np.linalg.norm(c1 - c2))


def check_self_collision(left: KinematicChain, right: KinematicChain, left_q, right_q,
                         margin: float = 0.02) -> tuple[int, int] | None:
    """Capsule-vs-capsule clearance between the two arms.

    Returns None when clear, else the (left_link, right_link) index pair
    with the smallest clearance below the margin.
    """
    lp = left.link_points(left_q)
    rp = right.link_points(right_q)
    rad = left.capsule_radius + right.capsule_radius
    worst = None
    worst_d = margin
    for i in range(7):
        for j in range(7):
            d = _segment_distance(lp[i], lp[i + 1], rp[j], rp[j + 1]) - rad
            if d < worst_d:
                worst_d = d
                worst = (i, j)
    return worst


def check_payload(mass_kg: float) -> bool:
    """True when the mass is liftable by one arm (limit inclusive)."""
    if mass_kg < 0:
        raise ValueError("mass cannot be negative")
    return mass_kg <= PAYLOAD_LIMIT_KG


class HandoverMonitor:
    """Debounced release trigger: a sustained pull on the wrist lets go.

    update() returns True once the axial force magnitude has met the
    threshold for the required number of consecutive ticks.
    """

    def __init__(self, threshold_n: float = 5.0, consecutive_ticks: int = 3):
        self.threshold_n = threshold_n
        self.consecutive_ticks = consecutive_ticks
        self._streak = 0
        self.released = False

    def update(self, f_z: float) -> bool:
        if self.released:
            return True
        if abs(f_z) >= self.threshold_n:
            self._streak += 1
        else:
            self._streak = 0
        if self._streak >= self.consecutive_ticks:
            self.released = True
        return self.released


def _default_joints() -> list[Joint]:
    z, y, x = (0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0)
    return [
        Joint((0.0, 0.0, 0.0), z, -2.6, 2.6),
        Joint((0.10, 0.0, 0.0), y, -2.0, 2.0),
        Joint((0.15, 0.0, 0.0), x, -2.6, 2.6),
        Joint((0.15, 0.0, 0.0), y, -2.3, 2.3),
        Joint((0.20, 0.0, 0.0), x, -2.6, 2.6),
        Joint((0.20, 0.0, 0.0), y, -2.0, 2.0),
        Joint((0.10, 0.0, 0.0), x, -2.6, 2.6),
    ]


def default_chain(side: str, lateral_offset: float = 0.25, height: float = 1.0,
                  mount_yaw: float = 0.3) -> KinematicChain:
    """Shipped arm geometry: 1.0 m reach, shoulders +-0.25 m lateral at 1.0 m,
    mounts yawed outward so the q=0 pose extends forward-outward."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    sign = 1.0 if side == "left" else -1.0
    mount = Transform3D.from_axis_angle((0, 0, 1), sign * mount_yaw, (0.0, sign * lateral_offset, height))
    return KinematicChain(side, mount, _default_joints())


# folded-in configuration used while the arm is not grasping
PARKED_Q = np.array([0.0, 0.9, 0.0, 1.4, 0.0, -0.6, 0.0])
