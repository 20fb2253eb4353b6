"""The scenario driver: wires sensors, perception, planning, control and
the state machine into the fixed 20 Hz tick loop.

One ScenarioRunner owns one run. Commands (scripted or live) enter a
serialized queue drained once per tick; every applied command is recorded
as (tick, command) so a served session can be replayed headless.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import arms as arms_mod
from . import mapping, nav_global, nav_teb, sim
from .control import Pid, SafetyState, scale_and_smooth
from .faces import match_face, noisy_probe
from .fsm import STATE_TIMEOUTS, Event, EventKind, RobotState, TaskMachine
from .geometry import Pose2D, Twist2D, normalize_angle
from .grammar import Intent, IntentAction, parse_command
from .grid import load_grid_pgm
from .localization import DistanceField, ParticleFilter
from .scenario import Scenario
from .trace import TraceWriter

OBJECT_LOST_TICKS = 20
MAX_GRASP_REPLANS = 3


@dataclass
class RunResult:
    completed: bool
    fault: str | None
    final_state: str
    ticks: int
    collisions: int
    replans: int

    @property
    def exit_code(self) -> int:
        return 0 if self.completed else 2


class _GraspExecutor:
    """Drives one grasp attempt: arm choice, payload gate, waypoint
    execution with target monitoring and self-collision screening."""

    def __init__(self, world: sim.WorldModel, object_id: str):
        self.world = world
        self.object_id = object_id
        self.plan = None
        self.arm = None
        self.stage = 0  # index into plan waypoints
        self.attached = False
        self.lost_ticks = 0
        self.replans = 0
        self.failed: str | None = None

    def start(self, object_pose_base) -> str | None:
        """Build the grasp plan; returns a failure reason or None."""
        world = self.world
        obj = world.objects[self.object_id]
        if not arms_mod.check_payload(obj.mass):
            return f"object mass {obj.mass} kg exceeds the payload limit"
        side = arms_mod.select_arm(world.chains["left"], world.chains["right"], object_pose_base)
        if side is None:
            return "object out of reach of both arms"
        chain = world.chains[side]
        try:
            plan = arms_mod.plan_grasp(chain, self.object_id, object_pose_base, obj.mass,
                                       seed_q=world.arms[side].q)
        except arms_mod.GraspInfeasible as exc:
            return str(exc)
        other = world.chains["left" if side == "right" else "right"]
        other_q = arms_mod.PARKED_Q
        for name, q in plan.waypoints:
            pair = (arms_mod.check_self_collision(chain, other, q, other_q)
                    if side == "left" else
                    arms_mod.check_self_collision(other, chain, other_q, q))
            if pair is not None:
                return f"{name} waypoint collides with the idle arm (links {pair})"
        self.plan = plan
        self.arm = side
        self.stage = 0
        return None

    def arm_targets(self) -> dict:
        if self.plan is None:
            return {}
        name, q = self.plan.waypoints[self.stage]
        return {self.arm: q}

    def advance(self, bundle) -> list[Event]:
        """Per-tick bookkeeping; emits FSM events as the grasp progresses."""
        events: list[Event] = []
        if self.plan is None or self.failed:
            return events
        latest = bundle.markers.get(self.object_id) if bundle else None

        if not self.attached:
            if latest is None:
                self.lost_ticks += 1
                if self.lost_ticks > OBJECT_LOST_TICKS:
                    self.plan = None
                    events.append(Event(EventKind.OBJECT_LOST))
                    return events
            else:
                self.lost_ticks = 0
                if arms_mod.monitor_target(self.plan, latest) == "replan":
                    self.replans += 1
                    if self.replans > MAX_GRASP_REPLANS:
                        self.failed = "object keeps moving"
                        events.append(Event(EventKind.GRASP_FAILED))
                        return events
                    reason = self.start(latest)
                    if reason is not None:
                        self.failed = reason
                        events.append(Event(EventKind.GRASP_FAILED))
                        return events

        if self.world.arms[self.arm].at_target(1e-3):
            name, _ = self.plan.waypoints[self.stage]
            if name == "grasp" and not self.attached:
                self.world.attach_object(self.object_id, self.arm)
                self.attached = True
            if self.stage + 1 < len(self.plan.waypoints):
                self.stage += 1
            else:
                events.append(Event(EventKind.GRASP_SUCCEEDED))
        return events


class ScenarioRunner:
    def __init__(self, scenario: Scenario, seed: int | None = None,
                 trace: TraceWriter | None = None, static_grid=None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        ss = np.random.SeedSequence(self.seed)
        world_ss, mcl_ss, probe_ss = ss.spawn(3)

        self.world = scenario.make_world(world_ss)
        self.trace = trace or TraceWriter()

        if static_grid is not None:
            self.static_grid = static_grid
        elif scenario.map.file:
            self.static_grid = load_grid_pgm(scenario.map.file + ".pgm",
                                             scenario.map.file + ".meta.yaml")
        else:
            self.static_grid = mapping.build_static_map(
                self.world, resolution=scenario.map.resolution, margin=scenario.map.margin,
                scan_sigma=scenario.map.build_sigma, sweep_spacing=scenario.map.sweep_spacing)

        self.dist_field = DistanceField(self.static_grid)
        self.layer = mapping.DynamicLayer()
        self.costmap = mapping.inflate(self.static_grid, self.layer, scenario.map.inflation_radius)
        self._lethal_points = self.costmap.lethal_cell_centers()

        self.pf = ParticleFilter(scenario.mcl, np.random.default_rng(mcl_ss))
        self.pf.initialize_uniform(self.world.base_pose, scenario.mcl_init_half_xy,
                                   scenario.mcl_init_half_theta)
        self.probe_rng = np.random.default_rng(probe_ss)

        self.machine = TaskMachine()
        self.safety = SafetyState(timeout=scenario.robot.watchdog_timeout)
        self.heading_pid = Pid(scenario.robot.pid_kp, scenario.robot.pid_ki, scenario.robot.pid_kd,
                               u_max=scenario.robot.limits.omega_max, angular=True)

        self.prev_cmd = Twist2D(0.0, 0.0)
        self.prev_true_pose = self.world.base_pose
        self.estimate = self.pf.estimate()
        self.last_bundle = None

        self.nav_goal: Pose2D | None = None
        self.band: nav_teb.TebTrajectory | None = None
        self.force_replan = False
        self.last_breakdown: dict | None = None
        self.slow_ticks = 0
        self.path_check_period = 20  # ticks between global-path consistency checks
        self.replan_cooldown = 10    # min ticks between clearance-triggered re-seeds
        self.last_replan_tick = -1000

        self.grasp: _GraspExecutor | None = None
        self.handover = arms_mod.HandoverMonitor()
        self.task_object: str | None = None
        self.handover_completed = False
        self.task_aborted = False
        self.held_object: str | None = None

        self.pending_events: deque[Event] = deque()
        self.command_queue: deque[dict] = deque()
        self.command_log: list[tuple[int, dict]] = []
        self._script = list(scenario.script)
        self._scheduled: list[tuple[int, dict]] = []

        self.state_entered_tick = 0
        self.collisions = 0
        self.replans = 0
        self.tick_notes: list[str] = []
        self.finished: RunResult | None = None

    # ------------------------------------------------------------------
    # command intake

    def submit_command(self, command: dict) -> None:
        """Queue a live command; it takes effect at the next tick."""
        self.command_queue.append(dict(command))

    def _drain_commands(self, tick: int) -> list[str]:
        notes = []
        while self._script and self._script[0][0] <= tick:
            _, cmd = self._script.pop(0)
            self.command_queue.append(cmd)
        keep = []
        for when, cmd in self._scheduled:
            if when <= tick:
                self.command_queue.append(cmd)
            else:
                keep.append((when, cmd))
        self._scheduled = keep
        while self.command_queue:
            cmd = self.command_queue.popleft()
            self.command_log.append((tick, dict(cmd)))
            notes.extend(self._apply_command(cmd))
        return notes

    def _apply_command(self, cmd: dict) -> list[str]:
        kind = cmd.get("type")
        notes = [f"command:{kind}"]
        if kind == "say":
            text = str(cmd.get("text", ""))
            if self.machine.state is RobotState.LISTENING:
                intent = parse_command(self.scenario.interaction.grammar, text)
                if intent is None:
                    self.pending_events.append(Event(EventKind.NO_PARSE))
                else:
                    self.pending_events.append(Event(EventKind.COMMAND_PARSED, intent=intent))
            else:
                notes.append("say_ignored:not_listening")
        elif kind == "fetch":
            obj = str(cmd.get("object", ""))
            if self.machine.state is RobotState.LISTENING:
                self.pending_events.append(
                    Event(EventKind.COMMAND_PARSED, intent=Intent(IntentAction.FETCH, obj)))
            else:
                notes.append("fetch_ignored:not_listening")
        elif kind == "add_obstacle":
            self.world.add_obstacle(sim.DiscObstacle(
                float(cmd["x"]), float(cmd["y"]), float(cmd.get("r", 0.2)),
                float(cmd.get("vx", 0.0)), float(cmd.get("vy", 0.0)),
                spawn_tick=self.world.tick_index, label="injected"))
        elif kind == "tug":
            self.world.apply_tug(float(cmd.get("f_z", 6.0)), ticks=5)
        elif kind == "estop":
            self.safety.estop()
            self.pending_events.append(Event(EventKind.ESTOP))
        elif kind == "reset":
            self.safety.reset()
            self.pending_events.append(Event(EventKind.RESET))
        elif kind == "set_pose":
            pose = Pose2D(float(cmd["x"]), float(cmd["y"]), float(cmd.get("theta", 0.0)))
            self.world.base_pose = pose
            self.prev_true_pose = pose  # keep the next odometry delta clean
            self.pf.initialize_at(pose)
        else:
            notes.append(f"unknown_command:{kind}")
        return notes

    # ------------------------------------------------------------------
    # perception-driven events

    def _state_events(self, tick: int) -> None:
        state = self.machine.state
        inter = self.scenario.interaction

        if state is RobotState.IDLE:
            dock = self.scenario.robot.start
            for obs in self.world.active_obstacles():
                if math.hypot(obs.x - dock.x, obs.y - dock.y) <= inter.person_proximity:
                    self.pending_events.append(Event(EventKind.PERSON_DETECTED))
                    break

        elif state is RobotState.IDENTIFYING:
            in_state = tick - self.state_entered_tick
            if in_state % inter.probe_period_ticks == inter.probe_period_ticks // 2:
                probe = noisy_probe(inter.gallery, inter.probe_identity, self.probe_rng,
                                    inter.probe_sigma)
                identity = match_face(inter.gallery, probe)
                if identity is None:
                    self.pending_events.append(Event(EventKind.FACE_UNKNOWN))
                else:
                    self.pending_events.append(Event(EventKind.FACE_RECOGNIZED, identity=identity))

        elif state is RobotState.LOCATING_OBJECT:
            if self.last_bundle is not None and self.task_object:
                markers = self.last_bundle.markers
                pose = markers.get(self.task_object)
                if pose is not None:
                    self.pending_events.append(
                        Event(EventKind.OBJECT_LOCATED, payload={"pose": pose}))

        elif state is RobotState.GRASPING:
            if self.grasp is not None:
                for event in self.grasp.advance(self.last_bundle):
                    self.pending_events.append(event)

        elif state is RobotState.HANDOVER:
            if self.last_bundle is not None and not self.handover.released:
                if self.handover.update(self.last_bundle.wrist.f_z):
                    self.pending_events.append(Event(EventKind.FORCE_DETECTED))

        timeout = STATE_TIMEOUTS.get(state)
        if timeout is not None and (tick - self.state_entered_tick) * sim.TICK_DT > timeout:
            self.pending_events.append(Event(EventKind.TIMEOUT))

    # ------------------------------------------------------------------
    # FSM dispatch and state entry effects

    def _dispatch_events(self, tick: int) -> list[str]:
        labels = []
        guard = 0
        while self.pending_events and guard < 32:
            guard += 1
            event = self.pending_events.popleft()
            labels.append(event.label())
            new_state, actions, changed = self.machine.handle(event)
            for action in actions:
                labels.append(f"{action.kind}:{action.text}" if action.text else action.kind)
                if action.kind == "release" and self.held_object:
                    self.world.release_object(self.held_object)
                    self.held_object = None
                    self.handover_completed = True
            if changed:
                self.state_entered_tick = tick
                self._on_enter(new_state, event, labels)
        return labels

    def _on_enter(self, state: RobotState, event: Event, labels: list[str]) -> None:
        scenario = self.scenario
        if state is RobotState.NAVIGATING_TO_WAREHOUSE:
            if event.intent is not None and event.intent.object:
                self.task_object = event.intent.object
            self.nav_goal = scenario.task.warehouse_goal
            self._start_navigation(labels)
        elif state is RobotState.NAVIGATING_TO_USER:
            self.nav_goal = scenario.task.user_goal
            self._start_navigation(labels)
        elif state is RobotState.GRASPING:
            pose = event.payload.get("pose") if event.payload else None
            self.grasp = _GraspExecutor(self.world, self.task_object)
            reason = self.grasp.start(pose) if pose is not None else "no object pose"
            if reason is not None:
                labels.append(f"grasp_infeasible:{reason}")
                self.grasp = None
                self.pending_events.append(Event(EventKind.GRASP_FAILED))
        elif state is RobotState.RECOVERY:
            self.task_aborted = True
        elif state is RobotState.HANDOVER:
            self.handover = arms_mod.HandoverMonitor()
            if scenario.task.handover_auto_tug:
                when = self.world.tick_index + scenario.task.handover_tug_delay_ticks
                self._scheduled.append((when, {"type": "tug", "f_z": scenario.task.handover_tug_force}))
        elif state is RobotState.IDLE:
            for side in ("left", "right"):
                self.world.arms[side].target = arms_mod.PARKED_Q.copy()
            self.band = None
            self.nav_goal = None

    def _start_navigation(self, labels: list[str]) -> None:
        self.band = None
        self.force_replan = False
        self.heading_pid.reset()

    # ------------------------------------------------------------------
    # navigation pipeline

    def _refresh_costmap(self) -> None:
        est = self.estimate
        scan = self.last_bundle.scan if self.last_bundle else None
        # fast rotation skews the heading estimate enough to smear wall
        # returns into phantom obstacles; hold the layer until it settles
        if scan is not None and abs(self.prev_cmd.omega) <= 0.5:
            before = set(self.layer.ages)
            self.layer.update(self.static_grid, est, scan)
            if set(self.layer.ages) != before:
                self.costmap = mapping.inflate(self.static_grid, self.layer,
                                               self.scenario.map.inflation_radius)
                self._lethal_points = self.costmap.lethal_cell_centers()

    def _navigation_command(self, tick: int) -> Twist2D:
        est = self.estimate
        goal = self.nav_goal
        scenario = self.scenario
        if goal is None:
            return Twist2D(0.0, 0.0)

        # goal test on the estimated pose; align heading before declaring done
        dist = est.distance_to(goal)
        if dist <= scenario.robot.goal_pos_tol:
            if abs(est.angle_to(goal)) <= scenario.robot.goal_heading_tol:
                self.pending_events.append(Event(EventKind.GOAL_REACHED))
                return Twist2D(0.0, 0.0)
            omega = self.heading_pid.step(goal.theta, est.theta, sim.TICK_DT)
            return Twist2D(0.0, omega)

        # terminal approach: a two-pose band cannot turn-and-translate, so
        # close the last stretch with direct position control
        if dist <= 0.35:
            self.band = None
            bearing = math.atan2(goal.y - est.y, goal.x - est.x)
            err = normalize_angle(bearing - est.theta)
            if abs(err) > 0.3:
                omega = self.heading_pid.step(bearing, est.theta, sim.TICK_DT)
                return Twist2D(0.0, omega)
            v = min(scenario.robot.limits.v_max, 1.5 * dist)
            return Twist2D(v, 2.0 * err)

        obstacles = self._obstacle_array()
        if self.band is not None and tick % self.path_check_period == 0:
            # re-seed when the band has drifted far from the best global route
            # (e.g. after bending around an obstacle that has since moved on)
            if self._band_detour_excessive(est, goal):
                self.force_replan = True
        if self.band is not None and self.slow_ticks > 60:
            self.force_replan = True
            self.slow_ticks = 0
        cooled_down = tick - self.last_replan_tick >= self.replan_cooldown
        if (self.band is None or self.force_replan
                or (cooled_down and nav_teb.needs_replan(self.band, obstacles, goal, scenario.teb))):
            if not self._replan(est, goal):
                return Twist2D(0.0, 0.0)
            self.last_replan_tick = tick
            iterations = None  # full optimization on a fresh band
        else:
            self.band = _advance_band(self.band, est, scenario.teb, self.prev_cmd.v)
            if self.band is None:
                return Twist2D(0.0, 0.0)
            iterations = scenario.teb_refine

        self.band, info = nav_teb.optimize(
            self.band, obstacles, scenario.teb, iterations=iterations,
            v_start=self.prev_cmd.v, stop_at_goal=True)
        self.last_breakdown = info.final_terms

        cmd = nav_teb.next_command(self.band)

        # when the base points well away from the band's direction of travel
        # the arc constraint degenerates into a creep; rotate in place first
        seg_dir = _band_direction(self.band, est)
        if seg_dir is not None and abs(normalize_angle(seg_dir - est.theta)) > 0.6:
            omega = self.heading_pid.step(seg_dir, est.theta, sim.TICK_DT)
            return Twist2D(0.0, omega)

        if cmd.v < -1e-9:
            self.force_replan = True
            return Twist2D(0.0, cmd.omega)

        # creep past nearby obstacles: tighter arcs and less tracking slip
        clear = self._estimate_clearance(est, obstacles)
        v_cap = scenario.teb.limits.v_max
        if clear < 1.0:
            span = max(clear - scenario.teb.min_obstacle_distance, 0.0)
            v_cap = max(0.15, v_cap * (0.3 + 0.7 * span / (1.0 - scenario.teb.min_obstacle_distance)))
        if cmd.v > v_cap:
            cmd = Twist2D(v_cap, cmd.omega)
        return cmd

    def _band_detour_excessive(self, est: Pose2D, goal: Pose2D) -> bool:
        try:
            path = nav_global.plan(self.costmap, est, goal)
        except nav_global.StartInCollision:
            return False
        if path is None or len(path) < 2:
            return False
        pts = np.asarray(path)
        fresh_len = float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))
        seg = np.diff(self.band.poses[:, :2], axis=0)
        band_len = float(np.sum(np.hypot(seg[:, 0], seg[:, 1])))
        return band_len > 1.25 * fresh_len + 0.3

    def _replan(self, est: Pose2D, goal: Pose2D) -> bool:
        was_replan = self.band is not None or self.force_replan
        self.force_replan = False
        try:
            path = nav_global.plan(self.costmap, est, goal)
        except nav_global.StartInCollision:
            path = None
        if path is None:
            self.band = None
            self.pending_events.append(Event(EventKind.PLAN_FAILED))
            return False
        if was_replan:
            self.replans += 1
            self.tick_notes.append("replan")
        self.band = nav_teb.initialize(path, self.scenario.teb, start_pose=est,
                                       goal_heading=goal.theta)
        return True

    def _obstacle_array(self) -> np.ndarray:
        return nav_teb.as_obstacle_array(self._lethal_points)

    @staticmethod
    def _estimate_clearance(est: Pose2D, obstacles: np.ndarray) -> float:
        if not len(obstacles):
            return math.inf
        d = np.hypot(obstacles[:, 0] - est.x, obstacles[:, 1] - est.y) - obstacles[:, 2]
        return float(d.min())

    # ------------------------------------------------------------------
    # main loop

    def step(self) -> bool:
        """Run one tick; returns False once the run has finished."""
        if self.finished is not None:
            return False
        scenario = self.scenario
        tick = self.world.tick_index

        labels = self._drain_commands(tick)
        self._state_events(tick)
        labels.extend(self._dispatch_events(tick))

        state = self.machine.state
        breakdown_this_tick = None
        if state in (RobotState.NAVIGATING_TO_WAREHOUSE, RobotState.NAVIGATING_TO_USER):
            raw = self._navigation_command(tick)
            breakdown_this_tick = self.last_breakdown
        else:
            raw = Twist2D(0.0, 0.0)
        cmd = scale_and_smooth(raw, self.prev_cmd, scenario.robot.limits, sim.TICK_DT)
        self.safety.command_received(self.world.time_s)
        cmd = self.safety.check(self.world.time_s, cmd)
        self.prev_cmd = cmd

        navigating = state in (RobotState.NAVIGATING_TO_WAREHOUSE, RobotState.NAVIGATING_TO_USER)
        if (navigating and self.nav_goal is not None
                and self.estimate.distance_to(self.nav_goal) > 2 * scenario.robot.goal_pos_tol
                and abs(cmd.v) < 0.05 and abs(cmd.omega) < 0.3):
            self.slow_ticks += 1
        else:
            self.slow_ticks = 0

        if self.grasp is not None and state is RobotState.GRASPING:
            arm_targets = self.grasp.arm_targets()
            if self.grasp.attached and self.held_object is None:
                self.held_object = self.grasp.object_id
        else:
            arm_targets = {}

        bundle = sim.tick(self.world, cmd, arm_targets)
        self.last_bundle = bundle
        if bundle.collision:
            self.collisions += 1
            labels.append("collision:" + ",".join(bundle.collided_with))

        odom = self.prev_true_pose.inverse().compose(self.world.base_pose)
        self.prev_true_pose = self.world.base_pose
        self.pf.motion_update(odom)
        if self.pf.measurement_update(bundle.scan, self.dist_field):
            labels.append("localization_diverged")
        self.pf.resample()
        self.estimate = self.pf.estimate()
        self._refresh_costmap()

        if self.tick_notes:
            labels.extend(self.tick_notes)
            self.tick_notes = []

        record = {
            "tick": self.world.tick_index,
            "time_s": round(self.world.time_s, 6),
            "state": self.machine.state.value,
            "pose": {"x": self.world.base_pose.x, "y": self.world.base_pose.y,
                     "theta": self.world.base_pose.theta},
            "twist": {"v": cmd.v, "omega": cmd.omega},
            "events": labels,
        }
        if breakdown_this_tick:
            record["cost_breakdown"] = {k: float(v) for k, v in breakdown_this_tick.items()}
        self.trace.write(record)

        if self.handover_completed and self.machine.state is RobotState.IDLE:
            self.finished = RunResult(True, None, self.machine.state.value,
                                      self.world.tick_index, self.collisions, self.replans)
            return False
        if self.task_aborted and self.machine.state is RobotState.IDLE:
            self.finished = RunResult(False, "task aborted after recovery", self.machine.state.value,
                                      self.world.tick_index, self.collisions, self.replans)
            return False
        if self.world.tick_index >= scenario.max_ticks:
            self.finished = RunResult(False, "step budget exhausted", self.machine.state.value,
                                      self.world.tick_index, self.collisions, self.replans)
            return False
        return True

    def run(self, max_ticks: int | None = None) -> RunResult:
        if max_ticks is not None:
            self.scenario.max_ticks = max_ticks
        while self.step():
            pass
        self.trace.close()
        return self.finished


def _band_direction(band: nav_teb.TebTrajectory, est: Pose2D) -> float | None:
    """Travel direction a short way along the band, None when degenerate."""
    poses = band.poses
    for i in range(1, len(poses)):
        dx = poses[i, 0] - est.x
        dy = poses[i, 1] - est.y
        if math.hypot(dx, dy) >= 0.15:
            return math.atan2(dy, dx)
    return None


def _advance_band(band: nav_teb.TebTrajectory, est: Pose2D, cfg: nav_teb.TebConfig,
                  current_v: float) -> nav_teb.TebTrajectory | None:
    """Re-anchor the band on the current pose estimate, dropping poses the
    robot has already passed and re-fitting the leading duration so the
    commanded speed stays continuous across the re-anchor."""
    poses = band.poses
    k = min(4, len(poses) - 1)
    d = np.hypot(poses[:k, 0] - est.x, poses[:k, 1] - est.y)
    i = int(np.argmin(d))
    if i >= len(poses) - 1:
        return None
    # also drop overshot poses: close behind the robot's heading
    hx, hy = math.cos(est.theta), math.sin(est.theta)
    while i < len(poses) - 2:
        dx = poses[i + 1, 0] - est.x
        dy = poses[i + 1, 1] - est.y
        if dx * hx + dy * hy >= 0.0 or math.hypot(dx, dy) > 0.25:
            break
        i += 1
    poses = poses[i:].copy()
    dts = band.dts[i:].copy()
    poses[0] = (est.x, est.y, est.theta)
    if len(poses) < 2:
        return None
    lead = float(np.hypot(poses[1, 0] - poses[0, 0], poses[1, 1] - poses[0, 1]))
    v_ref = max(abs(current_v), 0.1 * cfg.limits.v_max)
    dts[0] = min(cfg.dt_max, max(cfg.dt_min, lead / v_ref))
    return nav_teb.TebTrajectory(poses, dts)
