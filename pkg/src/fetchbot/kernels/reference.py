"""Pure-Python (numpy/scipy) implementations of the hot per-tick kernels.

Semantics here are the contract; the compiled backend mirrors them
cell-for-cell. Integer work (ray traversal) is bit-identical across
backends, float work agrees to rounding order.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

BACKEND_NAME = "reference"


def raycast(px: float, py: float, angles, segments, discs, max_range: float) -> np.ndarray:
    """Range per beam to the nearest wall segment or disc, else max_range.

    angles are absolute world-frame beam directions. segments is (m, 4)
    rows [ax, ay, bx, by]; discs is (k, 3) rows [cx, cy, r].
    """
    angles = np.asarray(angles, dtype=np.float64)
    n = len(angles)
    dx = np.cos(angles)
    dy = np.sin(angles)
    best = np.full(n, float(max_range))

    segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    if len(segments):
        ax, ay = segments[:, 0], segments[:, 1]
        ex, ey = segments[:, 2] - ax, segments[:, 3] - ay
        # solve p + t*d = a + u*e for each beam/segment pair
        denom = dx[:, None] * ey[None, :] - dy[:, None] * ex[None, :]
        rel_x = ax[None, :] - px
        rel_y = ay[None, :] - py
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (rel_x * ey[None, :] - rel_y * ex[None, :]) / denom
            u = (rel_x * dy[:, None] - rel_y * dx[:, None]) / denom
        valid = (np.abs(denom) > 1e-15) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
        t = np.where(valid, t, np.inf)
        best = np.minimum(best, t.min(axis=1))

    discs = np.asarray(discs, dtype=np.float64).reshape(-1, 3)
    if len(discs):
        cx = discs[:, 0][None, :] - px
        cy = discs[:, 1][None, :] - py
        r = discs[:, 2][None, :]
        b = dx[:, None] * cx + dy[:, None] * cy  # projection of center onto ray
        c = cx * cx + cy * cy - r * r
        disc = b * b - c
        with np.errstate(invalid="ignore"):
            sq = np.sqrt(np.maximum(disc, 0.0))
            t1 = b - sq
            t2 = b + sq
        t_hit = np.where(t1 >= 0.0, t1, np.where(t2 >= 0.0, 0.0, np.inf))
        t_hit = np.where(disc >= 0.0, t_hit, np.inf)
        best = np.minimum(best, t_hit.min(axis=1))

    return np.minimum(best, max_range)


def integrate_scan_grid(cells, sx: float, sy: float, ex, ey, hit, l_free: float, l_occ: float,
                        l_min: float, l_max: float) -> None:
    """Apply one scan's log-odds updates in place.

    Coordinates are in continuous cell units. Each beam traverses the grid
    with an exact DDA (only cells the true ray interior crosses): every
    traversed cell gains l_free, then the endpoint cell gains l_occ when
    hit[i] is true. A beam ending exactly on a cell boundary never
    free-marks the cell beyond it. Updates clamp to [l_min, l_max];
    out-of-bounds cells are skipped.
    """
    h, w = cells.shape
    x0 = int(np.floor(sx))
    y0 = int(np.floor(sy))
    ex = np.asarray(ex, dtype=np.float64)
    ey = np.asarray(ey, dtype=np.float64)
    hit = np.asarray(hit, dtype=bool)
    for i in range(len(ex)):
        x1 = int(np.floor(ex[i]))
        y1 = int(np.floor(ey[i]))
        dx = ex[i] - sx
        dy = ey[i] - sy
        ix, iy = x0, y0
        if dx > 0.0:
            step_x, t_max_x, t_dx = 1, (ix + 1 - sx) / dx, 1.0 / dx
        elif dx < 0.0:
            step_x, t_max_x, t_dx = -1, (ix - sx) / dx, -1.0 / dx
        else:
            step_x, t_max_x, t_dx = 0, np.inf, np.inf
        if dy > 0.0:
            step_y, t_max_y, t_dy = 1, (iy + 1 - sy) / dy, 1.0 / dy
        elif dy < 0.0:
            step_y, t_max_y, t_dy = -1, (iy - sy) / dy, -1.0 / dy
        else:
            step_y, t_max_y, t_dy = 0, np.inf, np.inf

        while not (ix == x1 and iy == y1):
            if 0 <= ix < w and 0 <= iy < h:
                cells[iy, ix] = min(l_max, max(l_min, cells[iy, ix] + l_free))
            if min(t_max_x, t_max_y) >= 1.0:
                break
            if t_max_x < t_max_y:
                ix += step_x
                t_max_x += t_dx
            elif t_max_y < t_max_x:
                iy += step_y
                t_max_y += t_dy
            else:
                ix += step_x
                iy += step_y
                t_max_x += t_dx
                t_max_y += t_dy
        if hit[i] and 0 <= x1 < w and 0 <= y1 < h:
            cells[y1, x1] = min(l_max, max(l_min, cells[y1, x1] + l_occ))


def edt_sq(occupied) -> np.ndarray:
    """Exact squared Euclidean distance (cell units) to the nearest occupied cell."""
    occupied = np.asarray(occupied, dtype=bool)
    h, w = occupied.shape
    if not occupied.any():
        far = (h + w) * (h + w)
        return np.full((h, w), far, dtype=np.int64)
    d = ndimage.distance_transform_edt(~occupied)
    return np.rint(d * d).astype(np.int64)


def likelihood_logsum(px, py, ptheta, rel_angles, ranges, dist_field, ox: float, oy: float,
                      resolution: float, sigma_hit: float, oob_distance: float,
                      distance_cap: float) -> np.ndarray:
    """Per-particle log-likelihood of scan endpoints under a distance field.

    dist_field holds meters-to-nearest-obstacle on an axis-aligned lattice
    with corner (ox, oy). Endpoints landing outside the field score as if
    oob_distance meters from the nearest obstacle. Distances are capped so
    beams striking unmapped obstacles cost every particle the same bounded
    penalty instead of dominating the weight.
    """
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    ptheta = np.asarray(ptheta, dtype=np.float64)
    rel_angles = np.asarray(rel_angles, dtype=np.float64)
    ranges = np.asarray(ranges, dtype=np.float64)
    h, w = dist_field.shape

    ang = ptheta[:, None] + rel_angles[None, :]
    exs = px[:, None] + ranges[None, :] * np.cos(ang)
    eys = py[:, None] + ranges[None, :] * np.sin(ang)
    ix = np.floor((exs - ox) / resolution).astype(np.int64)
    iy = np.floor((eys - oy) / resolution).astype(np.int64)
    inside = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    d = np.full(ix.shape, oob_distance, dtype=np.float64)
    d[inside] = dist_field[iy[inside], ix[inside]]
    np.minimum(d, distance_cap, out=d)
    return (-0.5 / (sigma_hit * sigma_hit)) * np.sum(d * d, axis=1)
