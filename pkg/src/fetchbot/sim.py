"""Deterministic ground-truth world: differential-drive kinematics, LIDAR
raycasting, marker sensing, wrist force, dynamic obstacles and the fixed
20 Hz clock.

All randomness flows through one seeded generator owned by the world, and
tick() touches it in a fixed order, so identical seeds plus identical
command sequences reproduce every sensor reading bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import arms as arms_mod
from . import kernels
from .geometry import Pose2D, Transform3D, Twist2D, quat_multiply, quat_from_axis_angle
from .grid import Footprint

TICK_DT = 0.05


def step_drive(pose: Pose2D, cmd: Twist2D, dt: float) -> Pose2D:
    """Exact unicycle arc integration; straight-line limit for tiny omega."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    v, w = cmd.v, cmd.omega
    if abs(w) < 1e-9:
        return Pose2D(
            pose.x + v * dt * math.cos(pose.theta),
            pose.y + v * dt * math.sin(pose.theta),
            pose.theta + w * dt,
        )
    # chord form of the arc: length v*dt*sinc(w*dt/2) along theta + w*dt/2,
    # stable for arbitrarily small turn rates
    half = 0.5 * w * dt
    chord = v * dt * (math.sin(half) / half)
    return Pose2D(
        pose.x + chord * math.cos(pose.theta + half),
        pose.y + chord * math.sin(pose.theta + half),
        pose.theta + w * dt,
    )


@dataclass(frozen=True)
class LidarParams:
    beams: int = 360
    span: float = math.radians(270.0)
    max_range: float = 10.0
    sigma: float = 0.01

    def beam_angles(self) -> np.ndarray:
        """Sensor-frame beam directions: -span/2 stepping by span/beams."""
        return -0.5 * self.span + np.arange(self.beams) * (self.span / self.beams)


@dataclass(frozen=True)
class LidarScan:
    beam_count: int
    span: float
    max_range: float
    ranges: np.ndarray

    def beam_angles(self) -> np.ndarray:
        return -0.5 * self.span + np.arange(self.beam_count) * (self.span / self.beam_count)


@dataclass(frozen=True)
class MarkerParams:
    max_range: float = 1.5
    cone_half_angle: float = math.radians(60.0)
    sigma_pos: float = 0.005
    sigma_rot: float = 0.01


@dataclass(frozen=True)
class WristForce:
    f_z: float


@dataclass(frozen=True)
class Wall:
    ax: float
    ay: float
    bx: float
    by: float
    map_only: bool = False  # present in the built map but absent from ground truth


@dataclass
class DiscObstacle:
    x: float
    y: float
    radius: float
    vx: float = 0.0
    vy: float = 0.0
    spawn_tick: int = 0
    label: str = ""


@dataclass
class SceneObject:
    object_id: str
    marker_id: int
    pose: Transform3D
    mass: float
    held_by: str | None = None
    grasp_offset: Transform3D | None = None


class ArmSim:
    """Kinematic arm: joints slew toward the commanded target at a rate limit."""

    def __init__(self, q, rate_limit: float = 1.5):
        self.q = np.asarray(q, dtype=float).copy()
        self.target = self.q.copy()
        self.rate_limit = rate_limit

    def step(self, dt: float) -> None:
        delta = np.clip(self.target - self.q, -self.rate_limit * dt, self.rate_limit * dt)
        self.q = self.q + delta

    def at_target(self, tol: float = 1e-6) -> bool:
        return bool(np.max(np.abs(self.target - self.q)) <= tol)


@dataclass(frozen=True)
class SensorBundle:
    tick: int
    time_s: float
    scan: LidarScan
    markers: dict
    wrist: WristForce
    collision: bool
    collided_with: tuple


class WorldModel:
    """Ground truth for one scenario run; tick() is the only mutator."""

    def __init__(self, walls, obstacles, objects, start_pose: Pose2D, footprint: Footprint | None = None,
                 lidar: LidarParams | None = None, marker: MarkerParams | None = None, seed: int = 0,
                 chains: dict | None = None, arm_rate_limit: float = 1.5):
        self.walls = list(walls)
        self.obstacles = list(obstacles)
        self.objects = {obj.object_id: obj for obj in objects}
        self.base_pose = start_pose
        self.footprint = footprint or Footprint.regular_hexagon()
        self.lidar = lidar or LidarParams()
        self.marker = marker or MarkerParams()
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.chains = chains or {
            "left": arms_mod.default_chain("left"),
            "right": arms_mod.default_chain("right"),
        }
        self.arms = {
            side: ArmSim(arms_mod.PARKED_Q, arm_rate_limit) for side in ("left", "right")
        }
        self.tick_index = 0
        self.time_s = 0.0
        self._tug_force = 0.0
        self._tug_ticks_left = 0

    # --- world composition helpers ---

    def active_obstacles(self) -> list[DiscObstacle]:
        return [o for o in self.obstacles if o.spawn_tick <= self.tick_index]

    def wall_segments(self, include_map_only: bool = False) -> np.ndarray:
        rows = [
            (w.ax, w.ay, w.bx, w.by)
            for w in self.walls
            if include_map_only or not w.map_only
        ]
        return np.array(rows, dtype=float).reshape(-1, 4)

    def obstacle_discs(self) -> np.ndarray:
        rows = [(o.x, o.y, o.radius) for o in self.active_obstacles()]
        return np.array(rows, dtype=float).reshape(-1, 3)

    def add_obstacle(self, obstacle: DiscObstacle) -> None:
        self.obstacles.append(obstacle)

    def apply_tug(self, f_z: float, ticks: int = 5) -> None:
        """Inject a sustained axial pull on the gripper for the next ticks."""
        self._tug_force = f_z
        self._tug_ticks_left = ticks

    # --- arm/object attachment ---

    def gripper_pose(self, side: str) -> Transform3D:
        """World pose of a gripper: base pose composed with arm FK."""
        base3d = Transform3D.from_pose2d(self.base_pose)
        return base3d.compose(arms_mod.forward_kinematics(self.chains[side], self.arms[side].q))

    def attach_object(self, object_id: str, side: str) -> None:
        obj = self.objects[object_id]
        obj.held_by = side
        obj.grasp_offset = self.gripper_pose(side).inverse().compose(obj.pose)

    def release_object(self, object_id: str) -> None:
        obj = self.objects[object_id]
        obj.held_by = None
        obj.grasp_offset = None


def cast_lidar(world: WorldModel, pose: Pose2D, params: LidarParams | None = None,
               walls_only: bool = False) -> LidarScan:
    """One scan from the given pose against ground-truth walls and discs.

    Gaussian range noise (seeded) applies to hits only; misses read exactly
    max_range so downstream code can recognize them.
    """
    p = params or world.lidar
    angles = pose.theta + p.beam_angles()
    segs = world.wall_segments(include_map_only=False)
    discs = np.zeros((0, 3)) if walls_only else world.obstacle_discs()
    ranges = kernels.raycast(pose.x, pose.y, angles, segs, discs, p.max_range)
    ranges = np.asarray(ranges, dtype=float)
    hit = ranges < p.max_range
    if p.sigma > 0.0:
        noise = world.rng.normal(0.0, p.sigma, p.beams)
        ranges = np.where(hit, ranges + noise, ranges)
    # scan ranges live in (0, max_range]
    ranges = np.where(hit, np.clip(ranges, 1e-6, p.max_range), ranges)
    return LidarScan(p.beams, p.span, p.max_range, ranges)


def sense_marker(world: WorldModel, object_id: str) -> Transform3D | None:
    """Fiducial reading: the object's pose in the robot base frame, or None
    when outside the camera range/cone. Unknown ids are a caller bug."""
    if object_id not in world.objects:
        raise KeyError(f"unknown object id: {object_id}")
    obj = world.objects[object_id]
    base3d = Transform3D.from_pose2d(world.base_pose)
    rel = base3d.inverse().compose(obj.pose)
    planar_range = math.hypot(rel.translation[0], rel.translation[1])
    bearing = math.atan2(rel.translation[1], rel.translation[0])
    mp = world.marker
    if planar_range > mp.max_range or abs(bearing) > mp.cone_half_angle:
        return None
    noisy_t = rel.translation + world.rng.normal(0.0, mp.sigma_pos, 3)
    axis = world.rng.normal(0.0, 1.0, 3)
    axis_norm = float(np.linalg.norm(axis))
    if axis_norm < 1e-12:
        axis = np.array([0.0, 0.0, 1.0])
        axis_norm = 1.0
    angle = float(world.rng.normal(0.0, mp.sigma_rot))
    if mp.sigma_pos == 0.0:
        noisy_t = rel.translation
    if mp.sigma_rot == 0.0 or angle == 0.0:
        noisy_q = rel.rotation
    else:
        noisy_q = quat_multiply(quat_from_axis_angle(axis / axis_norm, angle), rel.rotation)
    return Transform3D(noisy_q, noisy_t)


def tick(world: WorldModel, base_cmd: Twist2D, arm_targets: dict | None = None,
         dt: float = TICK_DT) -> SensorBundle:
    """Advance the world one step and emit the tick's sensor bundle.

    Order is fixed: obstacles, base, arms, held objects, then sensors
    (scan, markers by id, wrist force) and the collision check.
    """
    for obs in world.active_obstacles():
        obs.x += obs.vx * dt
        obs.y += obs.vy * dt

    world.base_pose = step_drive(world.base_pose, base_cmd, dt)

    if arm_targets:
        for side, target in arm_targets.items():
            world.arms[side].target = np.asarray(target, dtype=float).copy()
    for side in ("left", "right"):
        world.arms[side].step(dt)

    for obj in world.objects.values():
        if obj.held_by is not None:
            obj.pose = world.gripper_pose(obj.held_by).compose(obj.grasp_offset)

    world.tick_index += 1
    world.time_s += dt

    scan = cast_lidar(world, world.base_pose)
    markers = {}
    for object_id in sorted(world.objects):
        markers[object_id] = sense_marker(world, object_id)

    if world._tug_ticks_left > 0:
        f_z = world._tug_force
        world._tug_ticks_left -= 1
    else:
        f_z = 0.0

    collided = []
    for idx, obs in enumerate(world.active_obstacles()):
        if world.footprint.intersects_disc(world.base_pose, obs.x, obs.y, obs.radius):
            collided.append(obs.label or f"obstacle:{idx}")
    for idx, wall in enumerate(world.walls):
        if wall.map_only:
            continue
        if world.footprint.intersects_segment(world.base_pose, wall.ax, wall.ay, wall.bx, wall.by):
            collided.append(f"wall:{idx}")

    return SensorBundle(
        tick=world.tick_index,
        time_s=world.time_s,
        scan=scan,
        markers=markers,
        wrist=WristForce(f_z),
        collision=bool(collided),
        collided_with=tuple(collided),
    )
