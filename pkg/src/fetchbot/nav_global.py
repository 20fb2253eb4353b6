"""Global path planning: deterministic A* over the inflated costmap.

8-connected lattice; entering a cell costs step_length * (1 + cost/64),
step_length 1 or sqrt(2) in cells. Cells at or above the inscribed cost
are untraversable. Returned waypoints are world-frame cell centers with
collinear runs removed.
"""

from __future__ import annotations

import heapq
import math

from .geometry import Pose2D
from .grid import COST_INSCRIBED, Costmap

SQRT2 = math.sqrt(2.0)

_NEIGHBORS = (
    (1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
    (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2),
)


class StartInCollision(Exception):
    """The robot's current cell is untraversable; planning is meaningless."""


def _octile(ax: int, ay: int, bx: int, by: int) -> float:
    dx = abs(ax - bx)
    dy = abs(ay - by)
    return max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy)


def plan(costmap: Costmap, start: Pose2D, goal: Pose2D) -> list[tuple[float, float]] | None:
    """Waypoint list from start to goal, or None when the goal is unreachable."""
    start_cell = costmap.world_to_grid(start.x, start.y)
    if start_cell is None:
        raise StartInCollision(f"start ({start.x:.2f}, {start.y:.2f}) is off the map")
    goal_cell = costmap.world_to_grid(goal.x, goal.y)
    costs = costmap.costs
    if costs[start_cell[1], start_cell[0]] >= COST_INSCRIBED:
        raise StartInCollision(f"start cell {start_cell} has cost {costs[start_cell[1], start_cell[0]]}")
    if goal_cell is None or costs[goal_cell[1], goal_cell[0]] >= COST_INSCRIBED:
        return None

    cells = plan_cells(costmap, start_cell, goal_cell)
    if cells is None:
        return None
    return [costmap.cell_center(ix, iy) for ix, iy in _simplify_collinear(cells)]


def plan_cells(costmap: Costmap, start_cell: tuple[int, int], goal_cell: tuple[int, int]):
    """A* over cell indices; exposed separately for oracle comparisons."""
    if start_cell == goal_cell:
        return [start_cell]
    costs = costmap.costs
    h, w = costs.shape
    sx, sy = start_cell
    gx, gy = goal_cell

    g_score = {start_cell: 0.0}
    came_from: dict[tuple[int, int], tuple[int, int]] = {}
    counter = 0
    h0 = _octile(sx, sy, gx, gy)
    open_heap = [(h0, h0, counter, start_cell)]
    closed = set()

    while open_heap:
        _, _, _, current = heapq.heappop(open_heap)
        if current in closed:
            continue
        if current == goal_cell:
            path = [current]
            while current in came_from:
                current = came_from[current]
                path.append(current)
            path.reverse()
            return path
        closed.add(current)
        cx, cy = current
        gc = g_score[current]
        for dx, dy, step in _NEIGHBORS:
            nx, ny = cx + dx, cy + dy
            if not (0 <= nx < w and 0 <= ny < h):
                continue
            cell_cost = costs[ny, nx]
            if cell_cost >= COST_INSCRIBED:
                continue
            neighbor = (nx, ny)
            tentative = gc + step * (1.0 + cell_cost / 64.0)
            if tentative < g_score.get(neighbor, math.inf) - 1e-12:
                g_score[neighbor] = tentative
                came_from[neighbor] = current
                hn = _octile(nx, ny, gx, gy)
                counter += 1
                heapq.heappush(open_heap, (tentative + hn, hn, counter, neighbor))
    return None


def path_cost(costmap: Costmap, cells) -> float:
    """Traversal cost of a cell path under the planner's cost model."""
    total = 0.0
    for (ax, ay), (bx, by) in zip(cells, cells[1:]):
        step = SQRT2 if (ax != bx and ay != by) else 1.0
        total += step * (1.0 + costmap.costs[by, bx] / 64.0)
    return total


def _simplify_collinear(cells):
    if len(cells) <= 2:
        return cells
    kept = [cells[0]]
    for i in range(1, len(cells) - 1):
        ax, ay = kept[-1]
        bx, by = cells[i]
        cx, cy = cells[i + 1]
        if (bx - ax) * (cy - by) == (by - ay) * (cx - bx):
            continue
        kept.append(cells[i])
    kept.append(cells[-1])
    return kept
