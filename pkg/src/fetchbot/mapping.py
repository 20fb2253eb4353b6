"""Static map building, the short-lived dynamic obstacle layer, and costmap
inflation (the safety cushion around every obstacle).

The static map is built from scans taken at known poses; runtime pose
estimation is the localization module's job.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .geometry import Pose2D
from .grid import COST_INSCRIBED, COST_LETHAL, LOG_ODDS_MAX, LOG_ODDS_MIN, Costmap, OccupancyGrid
from .sim import LidarParams, LidarScan, WorldModel, cast_lidar

L_FREE = -0.4
L_OCC = 0.85

DEFAULT_INFLATION_RADIUS = 0.10
COST_DECAY_RATE = 5.0
DEFAULT_DECAY_TICKS = 40


def _scan_cell_coords(grid: OccupancyGrid, pose: Pose2D, scan: LidarScan):
    """Start and endpoint positions of each beam in continuous cell units."""
    if abs(grid.origin.theta) > 1e-12:
        raise ValueError("scan integration requires an axis-aligned grid")
    res = grid.resolution
    angles = pose.theta + scan.beam_angles()
    ex = (pose.x + scan.ranges * np.cos(angles) - grid.origin.x) / res
    ey = (pose.y + scan.ranges * np.sin(angles) - grid.origin.y) / res
    sx = (pose.x - grid.origin.x) / res
    sy = (pose.y - grid.origin.y) / res
    return sx, sy, ex, ey


def integrate_scan(grid: OccupancyGrid, pose: Pose2D, scan: LidarScan) -> OccupancyGrid:
    """Log-odds update for one scan taken at a known pose.

    Every cell a beam traverses gains L_FREE; the endpoint cell gains L_OCC
    unless the beam read max_range (a miss has no endpoint). Updates
    saturate at the grid's clamping bounds. The grid is updated in place
    and returned.
    """
    sx, sy, ex, ey = _scan_cell_coords(grid, pose, scan)
    hit = scan.ranges < scan.max_range
    kernels.integrate_scan_grid(grid.cells, sx, sy, ex, ey, hit, L_FREE, L_OCC, LOG_ODDS_MIN, LOG_ODDS_MAX)
    return grid


class DynamicLayer:
    """Cells seen occupied by recent scans but free in the static map.

    Entries age by one per update and expire after decay_ticks updates
    without re-observation; re-observation resets the age to zero. Endpoint
    cells within min_static_clearance of a static obstacle are ignored so
    that range noise on wall returns does not smear phantom obstacles along
    every wall.
    """

    def __init__(self, decay_ticks: int = DEFAULT_DECAY_TICKS,
                 min_static_clearance: float = 0.075, max_insert_range: float = 3.0):
        self.decay_ticks = decay_ticks
        self.min_static_clearance = min_static_clearance
        self.max_insert_range = max_insert_range
        self.ages: dict[tuple[int, int], int] = {}
        self._static_dist = None

    def update(self, static_grid: OccupancyGrid, pose: Pose2D, scan: LidarScan) -> None:
        if self._static_dist is None:
            dsq = kernels.edt_sq(static_grid.occupied_mask())
            self._static_dist = np.sqrt(dsq.astype(np.float64)) * static_grid.resolution
        for cell in self.ages:
            self.ages[cell] += 1
        sx, sy, ex, ey = _scan_cell_coords(static_grid, pose, scan)
        # long returns amplify heading-estimate error into lateral smear,
        # so only nearby endpoints may seed obstacles
        hit = (scan.ranges < scan.max_range) & (scan.ranges <= self.max_insert_range)
        w, h = static_grid.width, static_grid.height
        for i in np.nonzero(hit)[0]:
            ix = math.floor(ex[i])
            iy = math.floor(ey[i])
            if (0 <= ix < w and 0 <= iy < h
                    and self._static_dist[iy, ix] > self.min_static_clearance):
                self.ages[(ix, iy)] = 0
        self.ages = {c: a for c, a in self.ages.items() if a < self.decay_ticks}

    def occupied_cells(self) -> list[tuple[int, int]]:
        return sorted(self.ages)

    def __len__(self) -> int:
        return len(self.ages)


def occupancy_with_layer(static_grid: OccupancyGrid, layer: DynamicLayer | None) -> np.ndarray:
    occ = static_grid.occupied_mask()
    if layer is not None and len(layer):
        occ = occ.copy()
        for ix, iy in layer.ages:
            occ[iy, ix] = True
    return occ


def inflate(static_grid: OccupancyGrid, layer: DynamicLayer | None = None,
            inflation_radius: float = DEFAULT_INFLATION_RADIUS) -> Costmap:
    """Costmap of the static map plus dynamic layer.

    Occupied cells are lethal; cells whose center lies within
    inflation_radius of an occupied cell center get the inscribed cost;
    beyond that the cost decays as 252 * exp(-5 * (d - r)).
    """
    occ = occupancy_with_layer(static_grid, layer)
    res = static_grid.resolution
    dsq = kernels.edt_sq(occ)  # exact squared distance, cell units
    r_cells_sq = (inflation_radius / res) ** 2 + 1e-9
    d_m = np.sqrt(dsq.astype(np.float64)) * res

    costs = np.floor(252.0 * np.exp(-COST_DECAY_RATE * (d_m - inflation_radius))).astype(np.int64)
    np.clip(costs, 0, 252, out=costs)
    costs[dsq <= r_cells_sq] = COST_INSCRIBED
    costs[occ] = COST_LETHAL
    return Costmap(res, static_grid.origin, costs.astype(np.uint8))


def distance_field_m(static_grid: OccupancyGrid) -> np.ndarray:
    """Meters to the nearest statically-occupied cell center, per cell."""
    dsq = kernels.edt_sq(static_grid.occupied_mask())
    return np.sqrt(dsq.astype(np.float64)) * static_grid.resolution


def _rasterize_segment(grid: OccupancyGrid, ax: float, ay: float, bx: float, by: float,
                       value: float) -> None:
    length = math.hypot(bx - ax, by - ay)
    steps = max(1, int(math.ceil(length / (grid.resolution * 0.25))))
    for k in range(steps + 1):
        t = k / steps
        cell = grid.world_to_grid(ax + t * (bx - ax), ay + t * (by - ay))
        if cell is not None:
            grid.cells[cell[1], cell[0]] = value


def sweep_poses(world: WorldModel, spacing: float = 0.5, clearance: float = 0.3,
                headings=(0.0, math.pi / 2, math.pi, -math.pi / 2)) -> list[Pose2D]:
    """Grid of collision-free survey poses covering the walled area."""
    segs = world.wall_segments(include_map_only=False)
    if len(segs) == 0:
        return [Pose2D(0, 0, h) for h in headings]
    min_x, max_x = segs[:, [0, 2]].min(), segs[:, [0, 2]].max()
    min_y, max_y = segs[:, [1, 3]].min(), segs[:, [1, 3]].max()
    poses = []
    y = min_y + spacing * 0.5
    while y < max_y:
        x = min_x + spacing * 0.5
        while x < max_x:
            if _wall_clearance(segs, x, y) >= clearance:
                for h in headings:
                    poses.append(Pose2D(x, y, h))
            x += spacing
        y += spacing
    return poses


def _wall_clearance(segs: np.ndarray, px: float, py: float) -> float:
    a = segs[:, 0:2]
    d = segs[:, 2:4] - a
    rel = np.array([px, py]) - a
    denom = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.divide(np.einsum("ij,ij->i", rel, d), np.where(denom == 0, 1.0, denom)), 0.0, 1.0)
    closest = a + t[:, None] * d
    return float(np.min(np.hypot(px - closest[:, 0], py - closest[:, 1])))


def build_static_map(world: WorldModel, resolution: float = 0.05, margin: float = 0.3,
                     scan_sigma: float = 0.0, sweep_spacing: float = 0.5) -> OccupancyGrid:
    """Survey the walled world into a static occupancy grid.

    Scans are cast against walls only (dynamic discs are ephemeral) from
    ground-truth sweep poses. Walls flagged map-only are invisible to the
    ray caster and stamped directly into the finished map instead. A world
    with no walls yields a small all-free map around the origin.
    """
    segs_all = world.wall_segments(include_map_only=True)
    if len(segs_all) == 0:
        min_x, max_x, min_y, max_y = -2.0, 2.0, -2.0, 2.0
    else:
        min_x, max_x = float(segs_all[:, [0, 2]].min()), float(segs_all[:, [0, 2]].max())
        min_y, max_y = float(segs_all[:, [1, 3]].min()), float(segs_all[:, [1, 3]].max())
    origin = Pose2D(min_x - margin, min_y - margin, 0.0)
    width = int(math.ceil((max_x - min_x + 2 * margin) / resolution))
    height = int(math.ceil((max_y - min_y + 2 * margin) / resolution))
    grid = OccupancyGrid(resolution, origin, width, height)

    params = LidarParams(
        beams=world.lidar.beams,
        span=world.lidar.span,
        max_range=world.lidar.max_range,
        sigma=scan_sigma,
    )
    for pose in sweep_poses(world, spacing=sweep_spacing):
        scan = cast_lidar(world, pose, params=params, walls_only=True)
        integrate_scan(grid, pose, scan)

    for wall in world.walls:
        if wall.map_only:
            _rasterize_segment(grid, wall.ax, wall.ay, wall.bx, wall.by, LOG_ODDS_MAX)
    return grid
