"""Scenario files: the single structured-text input that defines a run.

A scenario carries the world (walls, obstacles, tagged objects), robot
parameters, sensor models, mapping/localization/planner settings, the
interaction setup (grammar, face gallery, probe identity) and a command
script of (tick, command) pairs injected through the same path as live
operator commands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .control import DriveLimits
from .faces import FaceGallery
from .geometry import Pose2D, Transform3D
from .grammar import CommandGrammar, compile_grammar
from .grid import Footprint
from .localization import MclConfig
from .nav_teb import TebConfig, TebLimits, TebWeights
from .sim import DiscObstacle, LidarParams, MarkerParams, SceneObject, Wall, WorldModel


class ConfigError(Exception):
    pass


@dataclass
class TaskConfig:
    warehouse_goal: Pose2D
    user_goal: Pose2D
    handover_tug_delay_ticks: int = 20
    handover_tug_force: float = 6.0
    handover_auto_tug: bool = True


@dataclass
class RobotConfig:
    start: Pose2D
    footprint: Footprint
    limits: DriveLimits
    pid_kp: float = 3.0
    pid_ki: float = 0.2
    pid_kd: float = 0.3
    watchdog_timeout: float = 0.5
    arm_rate_limit: float = 1.5
    goal_pos_tol: float = 0.12
    goal_heading_tol: float = 0.15


@dataclass
class MapConfig:
    resolution: float = 0.05
    inflation_radius: float = 0.10
    margin: float = 0.3
    build_sigma: float = 0.0
    sweep_spacing: float = 0.75
    file: str | None = None  # prebuilt map prefix; built from the world when absent


@dataclass
class InteractionConfig:
    grammar: CommandGrammar
    gallery: FaceGallery
    probe_identity: str = "alice"
    probe_sigma: float = 0.02
    probe_period_ticks: int = 10
    person_proximity: float = 1.5


@dataclass
class Scenario:
    name: str
    seed: int
    max_ticks: int
    walls: list
    obstacles: list
    objects: list
    robot: RobotConfig
    lidar: LidarParams
    marker: MarkerParams
    map: MapConfig
    mcl: MclConfig
    mcl_init_half_xy: float
    mcl_init_half_theta: float
    teb: TebConfig
    teb_refine: tuple
    interaction: InteractionConfig
    task: TaskConfig
    script: list = field(default_factory=list)

    def make_world(self, seed) -> WorldModel:
        """Fresh ground-truth world for one run; seed may be an int or a
        numpy SeedSequence."""
        walls = [Wall(*w[:4], map_only=w[4]) for w in self.walls]
        obstacles = [
            DiscObstacle(o["x"], o["y"], o["r"], o.get("vx", 0.0), o.get("vy", 0.0),
                         o.get("spawn_tick", 0), o.get("label", ""))
            for o in self.obstacles
        ]
        objects = [
            SceneObject(
                obj["id"], int(obj["marker"]),
                Transform3D.from_axis_angle((0, 0, 1), obj.get("yaw", 0.0),
                                            (obj["x"], obj["y"], obj["z"])),
                float(obj["mass"]),
            )
            for obj in self.objects
        ]
        return WorldModel(
            walls, obstacles, objects, self.robot.start,
            footprint=self.robot.footprint, lidar=self.lidar, marker=self.marker,
            seed=seed, arm_rate_limit=self.robot.arm_rate_limit,
        )


def _require(mapping, key, where):
    if key not in mapping:
        raise ConfigError(f"{where}: missing required key '{key}'")
    return mapping[key]


def _pose(value, where) -> Pose2D:
    try:
        x, y, theta = value
        return Pose2D(float(x), float(y), float(theta))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: expected [x, y, theta], got {value!r}") from exc


def _load_text(name_or_path: str, base_dir: Path) -> str:
    if name_or_path.startswith("builtin:"):
        resource = name_or_path.split(":", 1)[1]
        return resources.files("fetchbot.data").joinpath(resource).read_text(encoding="utf-8")
    path = Path(name_or_path)
    if not path.is_absolute():
        path = base_dir / path
    if not path.exists():
        builtin = resources.files("fetchbot.data").joinpath(name_or_path)
        if builtin.is_file():
            return builtin.read_text(encoding="utf-8")
        raise ConfigError(f"file not found: {name_or_path}")
    return path.read_text(encoding="utf-8")


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file; raises ConfigError with context."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"scenario file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: scenario must be a mapping")
    return scenario_from_dict(raw, base_dir=path.parent)


def builtin_scenario(name: str) -> Scenario:
    text = resources.files("fetchbot.data").joinpath(name).read_text(encoding="utf-8")
    return scenario_from_dict(yaml.safe_load(text), base_dir=Path("."))


def scenario_from_dict(raw: dict, base_dir: Path | None = None) -> Scenario:
    base_dir = base_dir or Path(".")

    world = _require(raw, "world", "scenario")
    walls = []
    for i, w in enumerate(_require(world, "walls", "world")):
        where = f"world.walls[{i}]"
        if isinstance(w, dict):
            a = _require(w, "a", where)
            b = _require(w, "b", where)
            walls.append((float(a[0]), float(a[1]), float(b[0]), float(b[1]),
                          bool(w.get("map_only", False))))
        else:
            if len(w) != 4:
                raise ConfigError(f"{where}: expected [ax, ay, bx, by]")
            walls.append((float(w[0]), float(w[1]), float(w[2]), float(w[3]), False))

    obstacles = []
    for i, o in enumerate(world.get("obstacles", [])):
        where = f"world.obstacles[{i}]"
        center = _require(o, "center", where)
        vel = o.get("velocity", [0.0, 0.0])
        obstacles.append({
            "x": float(center[0]), "y": float(center[1]),
            "r": float(_require(o, "radius", where)),
            "vx": float(vel[0]), "vy": float(vel[1]),
            "spawn_tick": int(o.get("spawn_tick", 0)),
            "label": str(o.get("label", "")),
        })

    objects = []
    for i, obj in enumerate(world.get("objects", [])):
        where = f"world.objects[{i}]"
        pos = _require(obj, "position", where)
        objects.append({
            "id": str(_require(obj, "id", where)),
            "marker": int(obj.get("marker", i)),
            "x": float(pos[0]), "y": float(pos[1]), "z": float(pos[2]),
            "yaw": float(obj.get("yaw", 0.0)),
            "mass": float(_require(obj, "mass", where)),
        })

    robot_raw = _require(raw, "robot", "scenario")
    lim = robot_raw.get("limits", {})
    limits = DriveLimits(
        v_max=float(lim.get("v_max", 0.5)),
        omega_max=float(lim.get("omega_max", 1.0)),
        a_max=float(lim.get("a_max", 0.5)),
        alpha_max=float(lim.get("alpha_max", 1.0)),
    )
    pid = robot_raw.get("pid", {})
    tol = robot_raw.get("goal_tolerance", {})
    robot = RobotConfig(
        start=_pose(_require(robot_raw, "start", "robot"), "robot.start"),
        footprint=Footprint.regular_hexagon(float(robot_raw.get("footprint_circumradius", 0.35))),
        limits=limits,
        pid_kp=float(pid.get("kp", 3.0)),
        pid_ki=float(pid.get("ki", 0.2)),
        pid_kd=float(pid.get("kd", 0.3)),
        watchdog_timeout=float(robot_raw.get("watchdog_timeout", 0.5)),
        arm_rate_limit=float(robot_raw.get("arm_rate_limit", 1.5)),
        goal_pos_tol=float(tol.get("position", 0.12)),
        goal_heading_tol=float(tol.get("heading", 0.15)),
    )

    sensors = raw.get("sensors", {})
    lidar_raw = sensors.get("lidar", {})
    lidar = LidarParams(
        beams=int(lidar_raw.get("beams", 360)),
        span=math.radians(float(lidar_raw.get("span_deg", 270.0))),
        max_range=float(lidar_raw.get("max_range", 10.0)),
        sigma=float(lidar_raw.get("sigma", 0.01)),
    )
    marker_raw = sensors.get("marker", {})
    marker = MarkerParams(
        max_range=float(marker_raw.get("max_range", 1.5)),
        cone_half_angle=math.radians(float(marker_raw.get("cone_deg", 60.0))),
        sigma_pos=float(marker_raw.get("sigma_pos", 0.005)),
        sigma_rot=float(marker_raw.get("sigma_rot", 0.01)),
    )

    map_raw = raw.get("map", {})
    map_cfg = MapConfig(
        resolution=float(map_raw.get("resolution", 0.05)),
        inflation_radius=float(map_raw.get("inflation_radius", 0.10)),
        margin=float(map_raw.get("margin", 0.3)),
        build_sigma=float(map_raw.get("build_sigma", 0.0)),
        sweep_spacing=float(map_raw.get("sweep_spacing", 0.75)),
        file=map_raw.get("file"),
    )

    loc_raw = raw.get("localization", {})
    mcl = MclConfig(
        n_particles=int(loc_raw.get("particles", 500)),
        sigma_xy=float(loc_raw.get("sigma_xy", 0.01)),
        sigma_theta=float(loc_raw.get("sigma_theta", 0.01)),
        sigma_hit=float(loc_raw.get("sigma_hit", 0.1)),
        beam_decimation=int(loc_raw.get("beam_decimation", 8)),
    )
    init_half_xy = float(loc_raw.get("init_half_xy", 0.5))
    init_half_theta = math.radians(float(loc_raw.get("init_half_theta_deg", 10.0)))

    teb_raw = raw.get("teb", {})
    weights_raw = teb_raw.get("weights", {})
    teb = TebConfig(
        weights=TebWeights(
            time=float(weights_raw.get("time", 1.0)),
            obstacle=float(weights_raw.get("obstacle", 50.0)),
            kinematics=float(weights_raw.get("kinematics", 1000.0)),
            velocity=float(weights_raw.get("velocity", 2.0)),
            acceleration=float(weights_raw.get("acceleration", 1.0)),
        ),
        limits=TebLimits(v_max=limits.v_max, omega_max=limits.omega_max, a_max=limits.a_max),
        min_obstacle_distance=float(teb_raw.get("min_obstacle_distance", 0.25)),
        obstacle_association_radius=float(teb_raw.get("association_radius", 1.0)),
        penalty_stiffness=float(teb_raw.get("penalty_stiffness", 20.0)),
    )
    refine_raw = teb_raw.get("refine", {})
    teb_refine = (int(refine_raw.get("outer", 1)), int(refine_raw.get("inner", 8)))

    inter_raw = raw.get("interaction", {})
    grammar_src = inter_raw.get("grammar_file", "builtin:default.gram")
    gallery_src = inter_raw.get("gallery_file", "builtin:gallery.yaml")
    try:
        grammar = compile_grammar(_load_text(grammar_src, base_dir))
    except Exception as exc:
        raise ConfigError(f"interaction.grammar_file: {exc}") from exc
    gallery_text = _load_text(gallery_src, base_dir)
    try:
        gallery = FaceGallery(yaml.safe_load(gallery_text),
                              threshold=float(inter_raw.get("threshold", 0.6)))
    except Exception as exc:
        raise ConfigError(f"interaction.gallery_file: {exc}") from exc
    interaction = InteractionConfig(
        grammar=grammar,
        gallery=gallery,
        probe_identity=str(inter_raw.get("probe_identity", "alice")),
        probe_sigma=float(inter_raw.get("probe_sigma", 0.02)),
        probe_period_ticks=int(inter_raw.get("probe_period_ticks", 10)),
        person_proximity=float(inter_raw.get("person_proximity", 1.5)),
    )

    task_raw = _require(raw, "task", "scenario")
    tug_raw = task_raw.get("handover_tug", {})
    task = TaskConfig(
        warehouse_goal=_pose(_require(task_raw, "warehouse_goal", "task"), "task.warehouse_goal"),
        user_goal=_pose(_require(task_raw, "user_goal", "task"), "task.user_goal"),
        handover_tug_delay_ticks=int(tug_raw.get("delay_ticks", 20)),
        handover_tug_force=float(tug_raw.get("f_z", 6.0)),
        handover_auto_tug=bool(tug_raw.get("enabled", True)),
    )

    script = []
    for i, entry in enumerate(raw.get("script", [])):
        where = f"script[{i}]"
        tick = int(_require(entry, "tick", where))
        command = _require(entry, "command", where)
        if not isinstance(command, dict) or "type" not in command:
            raise ConfigError(f"{where}: command must be a mapping with a 'type'")
        script.append((tick, dict(command)))
    script.sort(key=lambda e: e[0])

    return Scenario(
        name=str(raw.get("name", "unnamed")),
        seed=int(raw.get("seed", 0)),
        max_ticks=int(raw.get("max_ticks", 4000)),
        walls=walls,
        obstacles=obstacles,
        objects=objects,
        robot=robot,
        lidar=lidar,
        marker=marker,
        map=map_cfg,
        mcl=mcl,
        mcl_init_half_xy=init_half_xy,
        mcl_init_half_theta=init_half_theta,
        teb=teb,
        teb_refine=teb_refine,
        interaction=interaction,
        task=task,
        script=script,
    )
