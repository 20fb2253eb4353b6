"""Occupancy grids, costmaps and the base footprint polygon.

Grids store log-odds occupancy per cell; costmaps store traversal cost in
0..255 where 253 marks the inflated safety cushion and 255 an obstacle.
Cell indices are (ix, iy) pairs addressing ``cells[iy, ix]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import yaml

from .geometry import Pose2D

LOG_ODDS_MIN = -4.0
LOG_ODDS_MAX = 4.0

COST_LETHAL = 255
COST_INSCRIBED = 253


class OccupancyGrid:
    """Log-odds occupancy lattice with a world-frame origin pose.

    ``origin`` locates the corner of cell (0, 0); world_to_grid applies the
    full inverse origin transform, so rotated grids work for geometry
    queries even though mapping only ever builds axis-aligned ones.
    """

    def __init__(self, resolution: float, origin: Pose2D, width: int, height: int, cells=None):
        if resolution <= 0:
            raise ValueError("resolution must be positive")
        if width <= 0 or height <= 0:
            raise ValueError("grid dimensions must be positive")
        self.resolution = float(resolution)
        self.origin = origin
        self.width = int(width)
        self.height = int(height)
        if cells is None:
            self.cells = np.zeros((self.height, self.width), dtype=np.float64)
        else:
            cells = np.asarray(cells, dtype=np.float64)
            if cells.shape != (self.height, self.width):
                raise ValueError(f"cells shape {cells.shape} != {(self.height, self.width)}")
            self.cells = cells

    def world_to_grid(self, x: float, y: float) -> tuple[int, int] | None:
        """Cell containing a world point, or None when out of bounds."""
        gx, gy = self.origin.inverse_transform_point(x, y)
        ix = math.floor(gx / self.resolution)
        iy = math.floor(gy / self.resolution)
        if 0 <= ix < self.width and 0 <= iy < self.height:
            return (ix, iy)
        return None

    def grid_to_world(self, ix: int, iy: int) -> tuple[float, float]:
        """World position of the cell's lower corner."""
        return self.origin.transform_point(ix * self.resolution, iy * self.resolution)

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return self.origin.transform_point((ix + 0.5) * self.resolution, (iy + 0.5) * self.resolution)

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def clamp_log_odds(self) -> None:
        np.clip(self.cells, LOG_ODDS_MIN, LOG_ODDS_MAX, out=self.cells)

    def occupied_mask(self) -> np.ndarray:
        """Boolean (height, width) mask of cells believed occupied."""
        return self.cells > 0.0

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.resolution, self.origin, self.width, self.height, self.cells.copy())


@dataclass(frozen=True)
class Costmap:
    """Inflated traversal-cost layer on the same lattice as its source grid."""

    resolution: float
    origin: Pose2D
    costs: np.ndarray  # uint8 (height, width)

    @property
    def width(self) -> int:
        return self.costs.shape[1]

    @property
    def height(self) -> int:
        return self.costs.shape[0]

    def world_to_grid(self, x: float, y: float) -> tuple[int, int] | None:
        gx, gy = self.origin.inverse_transform_point(x, y)
        ix = math.floor(gx / self.resolution)
        iy = math.floor(gy / self.resolution)
        if 0 <= ix < self.width and 0 <= iy < self.height:
            return (ix, iy)
        return None

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return self.origin.transform_point((ix + 0.5) * self.resolution, (iy + 0.5) * self.resolution)

    def cost_at(self, x: float, y: float, default: int = COST_LETHAL) -> int:
        cell = self.world_to_grid(x, y)
        if cell is None:
            return default
        return int(self.costs[cell[1], cell[0]])

    def lethal_cell_centers(self) -> np.ndarray:
        """World coordinates (k, 2) of every lethal cell center."""
        ys, xs = np.nonzero(self.costs == COST_LETHAL)
        if len(xs) == 0:
            return np.zeros((0, 2))
        pts = np.stack([(xs + 0.5) * self.resolution, (ys + 0.5) * self.resolution], axis=1)
        c, s = math.cos(self.origin.theta), math.sin(self.origin.theta)
        rot = np.array([[c, -s], [s, c]])
        return pts @ rot.T + np.array([self.origin.x, self.origin.y])


class Footprint:
    """Convex collision polygon of the base, vertices in the body frame."""

    def __init__(self, vertices):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
            raise ValueError("footprint needs at least 3 planar vertices")
        if not _is_convex_ccw(verts):
            verts = verts[::-1].copy()
            if not _is_convex_ccw(verts):
                raise ValueError("footprint must be convex")
        if not _contains_origin(verts):
            raise ValueError("footprint must contain the body origin")
        self.vertices = verts

    @staticmethod
    def regular_hexagon(circumradius: float = 0.35) -> "Footprint":
        angles = np.arange(6) * (math.pi / 3.0)
        return Footprint(np.stack([circumradius * np.cos(angles), circumradius * np.sin(angles)], axis=1))

    @property
    def circumradius(self) -> float:
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))

    @property
    def inradius(self) -> float:
        dists = []
        n = len(self.vertices)
        for i in range(n):
            a, b = self.vertices[i], self.vertices[(i + 1) % n]
            dists.append(_point_segment_distance(0.0, 0.0, a, b))
        return float(min(dists))

    def world_vertices(self, pose: Pose2D) -> np.ndarray:
        c, s = math.cos(pose.theta), math.sin(pose.theta)
        rot = np.array([[c, -s], [s, c]])
        return self.vertices @ rot.T + np.array([pose.x, pose.y])

    def _world_vertex_list(self, pose: Pose2D) -> list[tuple[float, float]]:
        c, s = math.cos(pose.theta), math.sin(pose.theta)
        return [
            (pose.x + c * vx - s * vy, pose.y + s * vx + c * vy)
            for vx, vy in self.vertices
        ]

    def distance_to_point(self, pose: Pose2D, px: float, py: float) -> float:
        """Distance from the posed polygon to a point; 0 when inside."""
        verts = self._world_vertex_list(pose)
        if _point_in_convex(verts, px, py):
            return 0.0
        n = len(verts)
        return min(_point_segment_distance(px, py, verts[i], verts[(i + 1) % n]) for i in range(n))

    def intersects_disc(self, pose: Pose2D, cx: float, cy: float, radius: float) -> bool:
        return self.distance_to_point(pose, cx, cy) <= radius

    def intersects_segment(self, pose: Pose2D, ax: float, ay: float, bx: float, by: float) -> bool:
        verts = self._world_vertex_list(pose)
        if _point_in_convex(verts, ax, ay) or _point_in_convex(verts, bx, by):
            return True
        n = len(verts)
        return any(
            _segments_intersect(verts[i], verts[(i + 1) % n], (ax, ay), (bx, by))
            for i in range(n)
        )


def _is_convex_ccw(verts: np.ndarray) -> bool:
    n = len(verts)
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        cx, cy = verts[(i + 2) % n]
        if (bx - ax) * (cy - by) - (by - ay) * (cx - bx) < -1e-12:
            return False
    return True


def _contains_origin(verts: np.ndarray) -> bool:
    return _point_in_convex([(float(x), float(y)) for x, y in verts], 0.0, 0.0)


def _point_in_convex(verts, px: float, py: float) -> bool:
    n = len(verts)
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        if (bx - ax) * (py - ay) - (by - ay) * (px - ax) < -1e-12:
            return False
    return True


def _point_segment_distance(px: float, py: float, a, b) -> float:
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    abx, aby = bx - ax, by - ay
    denom = abx * abx + aby * aby
    if denom == 0.0:
        return math.hypot(px - ax, py - ay)
    t = min(1.0, max(0.0, ((px - ax) * abx + (py - ay) * aby) / denom))
    return math.hypot(px - (ax + t * abx), py - (ay + t * aby))


def _cross(ox, oy, ax, ay, bx, by) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _segments_intersect(p1, p2, p3, p4) -> bool:
    d1 = _cross(p3[0], p3[1], p4[0], p4[1], p1[0], p1[1])
    d2 = _cross(p3[0], p3[1], p4[0], p4[1], p2[0], p2[1])
    d3 = _cross(p1[0], p1[1], p2[0], p2[1], p3[0], p3[1])
    d4 = _cross(p1[0], p1[1], p2[0], p2[1], p4[0], p4[1])
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    if d1 == 0.0 and _on_segment(p3, p4, p1):
        return True
    if d2 == 0.0 and _on_segment(p3, p4, p2):
        return True
    if d3 == 0.0 and _on_segment(p1, p2, p3):
        return True
    if d4 == 0.0 and _on_segment(p1, p2, p4):
        return True
    return False


def _on_segment(a, b, p) -> bool:
    return (
        min(a[0], b[0]) - 1e-12 <= p[0] <= max(a[0], b[0]) + 1e-12
        and min(a[1], b[1]) - 1e-12 <= p[1] <= max(a[1], b[1]) + 1e-12
    )


# --- PGM persistence ---

_PGM_OCCUPIED = 0
_PGM_FREE = 255
_PGM_UNKNOWN = 128


def save_grid_pgm(grid: OccupancyGrid, pgm_path, meta_path=None) -> None:
    """Write a trinary P5 graymap (0 occupied / 255 free / 128 unknown) plus
    a sidecar metadata file carrying resolution and origin."""
    pgm_path = str(pgm_path)
    if meta_path is None:
        meta_path = pgm_path.rsplit(".", 1)[0] + ".meta.yaml"
    img = np.full((grid.height, grid.width), _PGM_UNKNOWN, dtype=np.uint8)
    img[grid.cells > 0.0] = _PGM_OCCUPIED
    img[grid.cells < 0.0] = _PGM_FREE
    # image rows run top-down; grid rows run bottom-up
    img = img[::-1]
    with open(pgm_path, "wb") as fh:
        fh.write(f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    meta = {
        "resolution": float(grid.resolution),
        "origin": [float(grid.origin.x), float(grid.origin.y), float(grid.origin.theta)],
    }
    with open(meta_path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(meta, fh, sort_keys=True)


def load_grid_pgm(pgm_path, meta_path=None) -> OccupancyGrid:
    """Load a grid saved by save_grid_pgm; cells map to saturated log-odds."""
    pgm_path = str(pgm_path)
    if meta_path is None:
        meta_path = pgm_path.rsplit(".", 1)[0] + ".meta.yaml"
    with open(pgm_path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError(f"{pgm_path}: not a binary PGM (P5) file")
        dims = fh.readline().split()
        while dims and dims[0].startswith(b"#"):
            dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        if maxval != 255:
            raise ValueError(f"{pgm_path}: expected maxval 255, got {maxval}")
        raw = np.frombuffer(fh.read(width * height), dtype=np.uint8).reshape(height, width)
    with open(meta_path, "r", encoding="utf-8") as fh:
        meta = yaml.safe_load(fh)
    ox, oy, otheta = meta["origin"]
    img = raw[::-1]
    cells = np.zeros((height, width), dtype=np.float64)
    cells[img < _PGM_UNKNOWN] = LOG_ODDS_MAX
    cells[img > _PGM_UNKNOWN] = LOG_ODDS_MIN
    return OccupancyGrid(float(meta["resolution"]), Pose2D(ox, oy, otheta), width, height, cells)
