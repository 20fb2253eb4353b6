"""Elastic-band local planner over timed pose sequences.

A trajectory is poses s0..sn plus per-segment durations. Optimization
minimizes a weighted sum of travel time, obstacle proximity, differential-
drive feasibility (arc constraint plus forward-only progress) and velocity/
acceleration limit violations. Start and goal poses stay fixed; interior
poses and all durations are free.

The solver is damped Gauss-Newton on the residual vector (declared
implementation choice). A step is accepted only when it does not increase
total cost, so accepted costs are non-increasing between band resizes.
Limit violations are multiplied by a stiffness factor inside the square,
which keeps the soft constraints close to hard ones under the default
weights; the obstacle term is the plain hinge square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose2D, Twist2D


@dataclass(frozen=True)
class TebWeights:
    time: float = 1.0
    obstacle: float = 50.0
    kinematics: float = 1000.0
    velocity: float = 2.0
    acceleration: float = 1.0


@dataclass(frozen=True)
class TebLimits:
    v_max: float = 0.5
    omega_max: float = 1.0
    a_max: float = 0.5


@dataclass(frozen=True)
class TebConfig:
    weights: TebWeights = field(default_factory=TebWeights)
    limits: TebLimits = field(default_factory=TebLimits)
    min_obstacle_distance: float = 0.25   # hinge reference clearance
    obstacle_association_radius: float = 1.0
    penalty_stiffness: float = 20.0       # limit-violation scale inside the square
    dt_min: float = 0.01
    dt_max: float = 1.0
    spacing: float = 0.2                  # initial pose spacing along the seed path
    segment_insert_above: float = 0.4
    segment_remove_below: float = 0.1
    max_poses: int = 100
    outer_iterations: int = 5
    inner_iterations: int = 20
    v_ref_fraction: float = 0.8
    replan_clearance_fraction: float = 0.8
    goal_moved_tolerance: float = 0.1


class TebTrajectory:
    """Pose sequence with elastic time intervals; poses (m, 3), dts (m-1,)."""

    def __init__(self, poses, dts):
        poses = np.asarray(poses, dtype=float)
        dts = np.asarray(dts, dtype=float)
        if poses.ndim != 2 or poses.shape[1] != 3 or len(poses) < 2:
            raise ValueError("trajectory needs at least two (x, y, theta) poses")
        if len(poses) > 100:
            raise ValueError("trajectory exceeds the 100-pose cap")
        if len(dts) != len(poses) - 1:
            raise ValueError("need exactly one duration per segment")
        if np.any(dts <= 0.0):
            raise ValueError("durations must be positive")
        self.poses = poses
        self.dts = dts

    @property
    def n_poses(self) -> int:
        return len(self.poses)

    def total_time(self) -> float:
        return float(self.dts.sum())

    def start_pose(self) -> Pose2D:
        return Pose2D(*self.poses[0])

    def goal_pose(self) -> Pose2D:
        return Pose2D(*self.poses[-1])

    def copy(self) -> "TebTrajectory":
        return TebTrajectory(self.poses.copy(), self.dts.copy())


def as_obstacle_array(obstacles) -> np.ndarray:
    """Normalize obstacle input to (M, 3) rows of [x, y, radius]."""
    if obstacles is None:
        return np.zeros((0, 3))
    arr = np.asarray(obstacles, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 3))
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.shape[1] == 2:
        arr = np.hstack([arr, np.zeros((len(arr), 1))])
    return arr


def initialize(path_points, config: TebConfig, start_pose: Pose2D | None = None,
               goal_heading: float | None = None) -> TebTrajectory:
    """Seed a band from a global path: poses every `spacing` meters along the
    polyline, headings along the tangent, durations sized for v_ref."""
    pts = np.asarray(path_points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("cannot initialize from an empty path")
    v_ref = max(config.v_ref_fraction * config.limits.v_max, 1e-6)

    diffs = np.diff(pts, axis=0) if len(pts) > 1 else np.zeros((0, 2))
    total = float(np.sum(np.hypot(diffs[:, 0], diffs[:, 1]))) if len(diffs) else 0.0
    if total < 1e-12:
        theta = goal_heading if goal_heading is not None else (start_pose.theta if start_pose else 0.0)
        base = np.array([pts[0][0], pts[0][1], theta])
        poses = np.vstack([base, base])
        if start_pose is not None:
            poses[0] = (start_pose.x, start_pose.y, start_pose.theta)
        return TebTrajectory(poses, np.array([config.dt_min]))

    seg_len = np.hypot(diffs[:, 0], diffs[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    n_seg = max(1, int(math.ceil(total / config.spacing)))
    stations = np.linspace(0.0, total, n_seg + 1)
    xy = np.empty((n_seg + 1, 2))
    xy[:, 0] = np.interp(stations, cum, pts[:, 0])
    xy[:, 1] = np.interp(stations, cum, pts[:, 1])

    d = np.diff(xy, axis=0)
    theta = np.empty(n_seg + 1)
    theta[:-1] = np.arctan2(d[:, 1], d[:, 0])
    theta[-1] = goal_heading if goal_heading is not None else theta[-2]

    poses = np.column_stack([xy, theta])
    if start_pose is not None:
        poses[0] = (start_pose.x, start_pose.y, start_pose.theta)
    lengths = np.hypot(d[:, 0], d[:, 1])
    dts = np.clip(lengths / v_ref, config.dt_min, config.dt_max)
    return TebTrajectory(poses, dts)


def _wrap(a):
    out = np.remainder(np.asarray(a, dtype=float) + math.pi, 2.0 * math.pi) - math.pi
    return np.where(out <= -math.pi, out + 2.0 * math.pi, out)


@dataclass
class _Block:
    group: str
    r: np.ndarray
    entries: list  # (cols, vals) pairs, each aligned with r


def _build_blocks(poses, dts, obstacles, cfg: TebConfig, v_start, stop_at_goal,
                  with_jacobian: bool) -> list[_Block]:
    w = cfg.weights
    lim = cfg.limits
    kappa = cfg.penalty_stiffness
    m = len(poses)
    n = m - 1

    X, Y, TH = poses[:, 0], poses[:, 1], poses[:, 2]
    ca, sa = np.cos(TH), np.sin(TH)
    dx = X[1:] - X[:-1]
    dy = Y[1:] - Y[:-1]
    A = ca[:-1] + ca[1:]
    B = sa[:-1] + sa[1:]
    h = A * dy - B * dx
    f = dx * ca[:-1] + dy * sa[:-1]
    v = f / dts
    om = _wrap(TH[1:] - TH[:-1]) / dts

    seg = np.arange(n)
    cx, cy, cth, cdt = seg, m + seg, 2 * m + seg, 3 * m + seg
    cx1, cy1, cth1 = seg + 1, m + seg + 1, 2 * m + seg + 1
    df_th = -dx * sa[:-1] + dy * ca[:-1]

    blocks: list[_Block] = []

    # --- time ---
    st = math.sqrt(w.time)
    blocks.append(_Block("time", st * np.sqrt(dts),
                         [(cdt, 0.5 * st / np.sqrt(dts))] if with_jacobian else []))

    # --- obstacles ---
    obs = obstacles
    if len(obs):
        so = math.sqrt(w.obstacle)
        pdx = X[:, None] - obs[:, 0][None, :]
        pdy = Y[:, None] - obs[:, 1][None, :]
        rho = np.maximum(np.hypot(pdx, pdy), 1e-9)
        g = cfg.min_obstacle_distance - (rho - obs[:, 2][None, :])
        ip, jo = np.nonzero(g > 0.0)
        r_obs = so * g[ip, jo]
        entries = []
        if with_jacobian and len(ip):
            entries = [(ip, -so * pdx[ip, jo] / rho[ip, jo]),
                       (m + ip, -so * pdy[ip, jo] / rho[ip, jo])]
        blocks.append(_Block("obstacle", r_obs, entries))

    # --- kinematics: arc residual ---
    sk = math.sqrt(w.kinematics) * kappa
    ent_h = []
    if with_jacobian:
        ent_h = [
            (cx, sk * B), (cx1, -sk * B),
            (cy, -sk * A), (cy1, sk * A),
            (cth, sk * (-sa[:-1] * dy - ca[:-1] * dx)),
            (cth1, sk * (-sa[1:] * dy - ca[1:] * dx)),
        ]
    blocks.append(_Block("kinematics", sk * h, ent_h))

    # --- kinematics: forward-only hinge ---
    p_fwd = np.maximum(0.0, -f)
    act_f = (p_fwd > 0.0).astype(float)
    ent_f = []
    if with_jacobian:
        ent_f = [
            (cx, sk * ca[:-1] * act_f), (cx1, -sk * ca[:-1] * act_f),
            (cy, sk * sa[:-1] * act_f), (cy1, -sk * sa[:-1] * act_f),
            (cth, -sk * df_th * act_f),
        ]
    blocks.append(_Block("kinematics", sk * p_fwd, ent_f))

    # chain rule slots for v_k over its six variables
    inv_dt = 1.0 / dts
    v_chain = [
        (cx, -ca[:-1] * inv_dt), (cx1, ca[:-1] * inv_dt),
        (cy, -sa[:-1] * inv_dt), (cy1, sa[:-1] * inv_dt),
        (cth, df_th * inv_dt), (cdt, -v * inv_dt),
    ]

    # --- velocity limits ---
    sv = math.sqrt(w.velocity) * kappa
    viol_v = np.maximum(0.0, np.abs(v) - lim.v_max)
    act_v = sv * np.sign(v) * (viol_v > 0.0)
    ent_v = [(cols, act_v * vals) for cols, vals in v_chain] if with_jacobian else []
    blocks.append(_Block("velocity", sv * viol_v, ent_v))

    viol_w = np.maximum(0.0, np.abs(om) - lim.omega_max)
    act_w = sv * np.sign(om) * (viol_w > 0.0)
    ent_w = []
    if with_jacobian:
        ent_w = [(cth, -act_w * inv_dt), (cth1, act_w * inv_dt), (cdt, -act_w * om * inv_dt)]
    blocks.append(_Block("velocity", sv * viol_w, ent_w))

    # --- acceleration limits ---
    sacc = math.sqrt(w.acceleration) * kappa
    if n >= 2:
        denom = dts[:-1] + dts[1:]
        a = 2.0 * (v[1:] - v[:-1]) / denom
        viol_a = np.maximum(0.0, np.abs(a) - lim.a_max)
        act_a = sacc * np.sign(a) * (viol_a > 0.0)
        ent_a = []
        if with_jacobian:
            lead = -2.0 / denom   # ∂a/∂v_k
            lag = 2.0 / denom     # ∂a/∂v_{k+1}
            for cols, vals in v_chain:
                ent_a.append((cols[:-1], act_a * lead * vals[:-1]))
                ent_a.append((cols[1:], act_a * lag * vals[1:]))
            ent_a.append((cdt[:-1], act_a * (-a / denom)))
            ent_a.append((cdt[1:], act_a * (-a / denom)))
        blocks.append(_Block("acceleration", sacc * viol_a, ent_a))

    if v_start is not None:
        a_s = (v[0] - v_start) / dts[0]
        viol = max(0.0, abs(a_s) - lim.a_max)
        act = sacc * math.copysign(1.0, a_s) * (1.0 if viol > 0.0 else 0.0)
        ent = []
        if with_jacobian:
            ent = [(np.array([cols[0]]), np.array([act * vals[0] / dts[0]])) for cols, vals in v_chain]
            ent.append((np.array([cdt[0]]), np.array([act * (-a_s / dts[0])])))
        blocks.append(_Block("acceleration", np.array([sacc * viol]), ent))

    if stop_at_goal:
        a_e = -v[-1] / dts[-1]
        viol = max(0.0, abs(a_e) - lim.a_max)
        act = sacc * math.copysign(1.0, a_e) * (1.0 if viol > 0.0 else 0.0)
        ent = []
        if with_jacobian:
            ent = [(np.array([cols[-1]]), np.array([act * (-vals[-1] / dts[-1])])) for cols, vals in v_chain]
            ent.append((np.array([cdt[-1]]), np.array([act * (-a_e / dts[-1])])))
        blocks.append(_Block("acceleration", np.array([sacc * viol]), ent))

    return blocks


def _assemble(blocks, m: int, n: int):
    rows = sum(len(b.r) for b in blocks)
    r = np.empty(rows)
    J = np.zeros((rows, 3 * m + n))
    spans: dict[str, list[tuple[int, int]]] = {}
    cursor = 0
    for b in blocks:
        k = len(b.r)
        r[cursor:cursor + k] = b.r
        sub = J[cursor:cursor + k]
        idx = np.arange(k)
        for cols, vals in b.entries:
            np.add.at(sub, (idx, cols), vals)
        spans.setdefault(b.group, []).append((cursor, cursor + k))
        cursor += k
    return r, J, spans


def cost(traj: TebTrajectory, obstacles, config: TebConfig | None = None,
         v_start: float | None = None, stop_at_goal: bool = False):
    """Total cost and the per-term breakdown dict."""
    cfg = config or TebConfig()
    obs = as_obstacle_array(obstacles)
    blocks = _build_blocks(traj.poses, traj.dts, obs, cfg, v_start, stop_at_goal, False)
    terms = {g: 0.0 for g in ("time", "obstacle", "kinematics", "velocity", "acceleration")}
    for b in blocks:
        terms[b.group] += float(b.r @ b.r)
    total = float(sum(terms.values()))
    if not math.isfinite(total):
        bad = [g for g, val in terms.items() if not math.isfinite(val)]
        raise FloatingPointError(f"non-finite trajectory cost in term(s): {', '.join(bad)}")
    terms["total"] = total
    return total, terms


def cost_and_gradient(traj: TebTrajectory, obstacles, config: TebConfig | None = None,
                      v_start: float | None = None, stop_at_goal: bool = False):
    """Cost, per-term breakdown, and analytic gradients.

    Returns (total, terms, grad_poses (m,3), grad_dts (n,), per_term_grads)
    where per_term_grads maps term name to a flat gradient over
    [x.. y.. theta.. dt..] columns.
    """
    cfg = config or TebConfig()
    obs = as_obstacle_array(obstacles)
    m, n = len(traj.poses), len(traj.dts)
    blocks = _build_blocks(traj.poses, traj.dts, obs, cfg, v_start, stop_at_goal, True)
    r, J, spans = _assemble(blocks, m, n)
    terms = {g: 0.0 for g in ("time", "obstacle", "kinematics", "velocity", "acceleration")}
    per_term = {g: np.zeros(3 * m + n) for g in terms}
    for g, ranges in spans.items():
        for lo, hi in ranges:
            terms[g] += float(r[lo:hi] @ r[lo:hi])
            per_term[g] += 2.0 * (J[lo:hi].T @ r[lo:hi])
    total = float(sum(terms.values()))
    terms["total"] = total
    grad = 2.0 * (J.T @ r)
    grad_poses = np.column_stack([grad[0:m], grad[m:2 * m], grad[2 * m:3 * m]])
    grad_dts = grad[3 * m:]
    return total, terms, grad_poses, grad_dts, per_term


@dataclass
class OptimizeInfo:
    cost_history: list          # list of per-phase accepted-cost sequences
    final_cost: float
    final_terms: dict
    monotone: bool
    iterations: int


def _resize(traj: TebTrajectory, cfg: TebConfig) -> TebTrajectory:
    """Insert midpoints into long segments, drop poses ending short ones."""
    src_dts = traj.dts.copy()
    poses = [traj.poses[0].copy()]
    dts: list[float] = []
    for i in range(len(src_dts)):
        p0 = poses[-1]
        p1 = traj.poses[i + 1]
        dt = float(src_dts[i])
        length = math.hypot(p1[0] - p0[0], p1[1] - p0[1])
        last = i == len(src_dts) - 1
        if length < cfg.segment_remove_below and not last:
            # drop p1, folding this segment's time into the next
            src_dts[i + 1] = min(cfg.dt_max, src_dts[i + 1] + dt)
            continue
        if length > cfg.segment_insert_above and len(poses) + (len(traj.poses) - i) < cfg.max_poses:
            mid_th = p0[2] + 0.5 * float(_wrap(p1[2] - p0[2]))
            poses.append(np.array([0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1]), mid_th]))
            half = max(cfg.dt_min, 0.5 * dt)
            dts.extend([half, half])
            poses.append(p1.copy())
            continue
        poses.append(p1.copy())
        dts.append(dt)
    if len(poses) < 2:
        return traj
    return TebTrajectory(np.vstack(poses), np.array(dts))


def _prune_obstacles(poses: np.ndarray, obs: np.ndarray, radius: float) -> np.ndarray:
    if not len(obs):
        return obs
    d = np.hypot(poses[:, 0][:, None] - obs[:, 0][None, :],
                 poses[:, 1][:, None] - obs[:, 1][None, :]) - obs[:, 2][None, :]
    return obs[d.min(axis=0) <= radius]


def _break_symmetry(poses: np.ndarray, obs: np.ndarray, cfg: TebConfig) -> None:
    """Nudge in-zone poses off an obstacle's radial line.

    A pose exactly on the line through an obstacle center feels a purely
    longitudinal hinge gradient, so the band would slide along itself
    instead of bowing out. A deterministic 1 mm sideways offset (to the
    pose's left) gives the solver a lateral direction to amplify."""
    if not len(obs):
        return
    for i in range(1, len(poses) - 1):
        px, py, th = poses[i]
        for ox, oy, orad in obs:
            rho = math.hypot(px - ox, py - oy)
            if rho - orad >= cfg.min_obstacle_distance:
                continue
            lateral = math.cos(th) * (py - oy) - math.sin(th) * (px - ox)
            if abs(lateral) < 1e-3:
                poses[i, 0] += -math.sin(th) * 1e-3
                poses[i, 1] += math.cos(th) * 1e-3
            break


def optimize(traj: TebTrajectory, obstacles, config: TebConfig | None = None,
             iterations: tuple[int, int] | None = None, v_start: float | None = None,
             stop_at_goal: bool = True) -> tuple[TebTrajectory, OptimizeInfo]:
    """Damped Gauss-Newton refinement of interior poses and all durations.

    Bands are resized between outer iterations, which re-bases the cost;
    within each phase every accepted step lowers the cost.
    """
    cfg = config or TebConfig()
    outer, inner = iterations or (cfg.outer_iterations, cfg.inner_iterations)
    obs_all = as_obstacle_array(obstacles)
    current = traj.copy()
    history: list[list[float]] = []
    monotone = True
    total_iters = 0

    for phase in range(outer):
        if phase > 0:
            current = _resize(current, cfg)
        m, n = len(current.poses), len(current.dts)
        problem_obs = _prune_obstacles(current.poses, obs_all, cfg.obstacle_association_radius)
        _break_symmetry(current.poses, problem_obs, cfg)

        interior = np.arange(1, m - 1)
        free = np.concatenate([interior, m + interior, 2 * m + interior, 3 * m + np.arange(n)])

        def eval_cost(poses, dts):
            blocks = _build_blocks(poses, dts, problem_obs, cfg, v_start, stop_at_goal, False)
            c = 0.0
            for b in blocks:
                c += float(b.r @ b.r)
            return c

        poses = current.poses
        dts = current.dts
        cur_cost = eval_cost(poses, dts)
        if not math.isfinite(cur_cost):
            cost(current, problem_obs, cfg, v_start, stop_at_goal)  # raises naming the term
        phase_hist = [cur_cost]
        mu = None

        for _ in range(inner):
            blocks = _build_blocks(poses, dts, problem_obs, cfg, v_start, stop_at_goal, True)
            r, J, _ = _assemble(blocks, m, n)
            Jf = J[:, free]
            JtJ = Jf.T @ Jf
            g = Jf.T @ r
            if float(np.max(np.abs(g))) < 1e-12:
                break
            if mu is None:
                mu = 1e-3 * float(np.max(np.diag(JtJ))) + 1e-12
            accepted = False
            for _trial in range(10):
                try:
                    dz = np.linalg.solve(JtJ + mu * np.eye(len(free)), -g)
                except np.linalg.LinAlgError:
                    mu *= 4.0
                    continue
                z = np.concatenate([poses[:, 0], poses[:, 1], poses[:, 2], dts])
                z[free] += dz
                new_poses = np.column_stack([z[0:m], z[m:2 * m], z[2 * m:3 * m]])
                new_dts = np.clip(z[3 * m:], cfg.dt_min, cfg.dt_max)
                new_cost = eval_cost(new_poses, new_dts)
                if math.isfinite(new_cost) and new_cost <= cur_cost:
                    poses, dts = new_poses, new_dts
                    cur_cost = new_cost
                    phase_hist.append(cur_cost)
                    mu = max(mu / 3.0, 1e-12)
                    accepted = True
                    total_iters += 1
                    break
                mu *= 4.0
            if not accepted:
                break
        current = TebTrajectory(poses, dts)
        history.append(phase_hist)

    final_cost, final_terms = cost(current, _prune_obstacles(current.poses, obs_all,
                                                             cfg.obstacle_association_radius),
                                   cfg, v_start, stop_at_goal)
    for phase_hist in history:
        for a, b in zip(phase_hist, phase_hist[1:]):
            if b > a + 1e-12:
                monotone = False
    info = OptimizeInfo(history, final_cost, final_terms, monotone, total_iters)
    return current, info


def next_command(traj: TebTrajectory) -> Twist2D:
    """Velocity command for the first band segment: forward-projected
    displacement over dt0 and heading change over dt0. Negative v means the
    band begins with backward motion; callers treat that as a replan cue."""
    p0, p1 = traj.poses[0], traj.poses[1]
    dt0 = float(traj.dts[0])
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    fwd = dx * math.cos(p0[2]) + dy * math.sin(p0[2])
    dth = float(_wrap(p1[2] - p0[2]))
    return Twist2D(fwd / dt0, dth / dt0)


def min_clearance(traj: TebTrajectory, obstacles) -> float:
    obs = as_obstacle_array(obstacles)
    if not len(obs):
        return math.inf
    d = np.hypot(traj.poses[:, 0][:, None] - obs[:, 0][None, :],
                 traj.poses[:, 1][:, None] - obs[:, 1][None, :]) - obs[:, 2][None, :]
    return float(d.min())


def needs_replan(traj: TebTrajectory, obstacles, goal: Pose2D | None = None,
                 config: TebConfig | None = None) -> bool:
    """True when the band runs too close to current obstacles, the goal
    moved, or the band is numerically unusable."""
    cfg = config or TebConfig()
    if not (np.all(np.isfinite(traj.poses)) and np.all(np.isfinite(traj.dts))):
        return True
    if min_clearance(traj, obstacles) < cfg.replan_clearance_fraction * cfg.min_obstacle_distance:
        return True
    if goal is not None:
        end = traj.goal_pose()
        if math.hypot(end.x - goal.x, end.y - goal.y) > cfg.goal_moved_tolerance:
            return True
    return False
