# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the per-tick hot kernels.

Semantics mirror kernels.reference exactly: integer traversal is
bit-identical, float results agree to summation-order rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, fabs, floor, llround, sin, sqrt

cnp.import_array()

BACKEND_NAME = "native"

cdef double INF = float("inf")


def raycast(double px, double py, angles, segments, discs, double max_range):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ang = np.ascontiguousarray(angles, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] segs = np.ascontiguousarray(
        np.asarray(segments, dtype=np.float64).reshape(-1, 4))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dsc = np.ascontiguousarray(
        np.asarray(discs, dtype=np.float64).reshape(-1, 3))
    cdef Py_ssize_t n = ang.shape[0]
    cdef Py_ssize_t m = segs.shape[0]
    cdef Py_ssize_t k = dsc.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)

    cdef Py_ssize_t i, j
    cdef double dx, dy, ax, ay, ex, ey, rel_x, rel_y, denom, t, u, best
    cdef double cx, cy, r, b, c, disc, sq, t1, t2, t_hit

    for i in range(n):
        dx = cos(ang[i])
        dy = sin(ang[i])
        best = max_range
        for j in range(m):
            ax = segs[j, 0]
            ay = segs[j, 1]
            ex = segs[j, 2] - ax
            ey = segs[j, 3] - ay
            denom = dx * ey - dy * ex
            if fabs(denom) <= 1e-15:
                continue
            rel_x = ax - px
            rel_y = ay - py
            t = (rel_x * ey - rel_y * ex) / denom
            u = (rel_x * dy - rel_y * dx) / denom
            if t >= 0.0 and 0.0 <= u <= 1.0 and t < best:
                best = t
        for j in range(k):
            cx = dsc[j, 0] - px
            cy = dsc[j, 1] - py
            r = dsc[j, 2]
            b = dx * cx + dy * cy
            c = cx * cx + cy * cy - r * r
            disc = b * b - c
            if disc < 0.0:
                continue
            sq = sqrt(disc if disc > 0.0 else 0.0)
            t1 = b - sq
            t2 = b + sq
            if t1 >= 0.0:
                t_hit = t1
            elif t2 >= 0.0:
                t_hit = 0.0
            else:
                continue
            if t_hit < best:
                best = t_hit
        out[i] = best if best < max_range else max_range
    return out


def integrate_scan_grid(cells, double sx, double sy, ex, ey, hit, double l_free, double l_occ,
                        double l_min, double l_max):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grid = cells
    cdef cnp.ndarray[cnp.float64_t, ndim=1] exa = np.ascontiguousarray(ex, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] eya = np.ascontiguousarray(ey, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] hita = np.ascontiguousarray(hit, dtype=np.uint8)
    cdef Py_ssize_t h = grid.shape[0]
    cdef Py_ssize_t w = grid.shape[1]
    cdef Py_ssize_t nbeams = exa.shape[0]
    cdef Py_ssize_t i
    cdef long x0 = <long>floor(sx)
    cdef long y0 = <long>floor(sy)
    cdef long x1, y1, ix, iy, step_x, step_y
    cdef double dx, dy, t_max_x, t_max_y, t_dx, t_dy, val

    for i in range(nbeams):
        x1 = <long>floor(exa[i])
        y1 = <long>floor(eya[i])
        dx = exa[i] - sx
        dy = eya[i] - sy
        ix = x0
        iy = y0
        if dx > 0.0:
            step_x = 1
            t_max_x = (ix + 1 - sx) / dx
            t_dx = 1.0 / dx
        elif dx < 0.0:
            step_x = -1
            t_max_x = (ix - sx) / dx
            t_dx = -1.0 / dx
        else:
            step_x = 0
            t_max_x = INF
            t_dx = INF
        if dy > 0.0:
            step_y = 1
            t_max_y = (iy + 1 - sy) / dy
            t_dy = 1.0 / dy
        elif dy < 0.0:
            step_y = -1
            t_max_y = (iy - sy) / dy
            t_dy = -1.0 / dy
        else:
            step_y = 0
            t_max_y = INF
            t_dy = INF

        while not (ix == x1 and iy == y1):
            if 0 <= ix < w and 0 <= iy < h:
                val = grid[iy, ix] + l_free
                if val < l_min:
                    val = l_min
                elif val > l_max:
                    val = l_max
                grid[iy, ix] = val
            if (t_max_x if t_max_x < t_max_y else t_max_y) >= 1.0:
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
        if hita[i] and 0 <= x1 < w and 0 <= y1 < h:
            val = grid[y1, x1] + l_occ
            if val < l_min:
                val = l_min
            elif val > l_max:
                val = l_max
            grid[y1, x1] = val


cdef void _dt1d(double* f, Py_ssize_t n, double* d, Py_ssize_t* v, double* z):
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t q
    cdef double s
    v[0] = 0
    z[0] = -INF
    z[1] = INF
    for q in range(1, n):
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = INF
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d[q] = (q - v[k]) * (q - v[k]) + f[v[k]]


def edt_sq(occupied):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] occ = np.ascontiguousarray(
        np.asarray(occupied, dtype=bool), dtype=np.uint8)
    cdef Py_ssize_t h = occ.shape[0]
    cdef Py_ssize_t w = occ.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] out = np.empty((h, w), dtype=np.int64)
    cdef Py_ssize_t x, y, n
    cdef bint any_occ = False
    for y in range(h):
        for x in range(w):
            if occ[y, x]:
                any_occ = True
                break
        if any_occ:
            break
    if not any_occ:
        out[:, :] = <long long>((h + w) * (h + w))
        return out

    cdef double big = 1e15
    cdef cnp.ndarray[cnp.float64_t, ndim=2] work = np.empty((h, w), dtype=np.float64)
    n = h if h > w else w
    cdef cnp.ndarray[cnp.float64_t, ndim=1] f = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] v = np.empty(n, dtype=np.intp)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z = np.empty(n + 1, dtype=np.float64)

    # columns first
    for x in range(w):
        for y in range(h):
            f[y] = 0.0 if occ[y, x] else big
        _dt1d(&f[0], h, &d[0], <Py_ssize_t*>&v[0], &z[0])
        for y in range(h):
            work[y, x] = d[y]
    # then rows
    for y in range(h):
        for x in range(w):
            f[x] = work[y, x]
        _dt1d(&f[0], w, &d[0], <Py_ssize_t*>&v[0], &z[0])
        for x in range(w):
            out[y, x] = llround(d[x])
    return out


def likelihood_logsum(px, py, ptheta, rel_angles, ranges, dist_field, double ox, double oy,
                      double resolution, double sigma_hit, double oob_distance,
                      double distance_cap):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pxa = np.ascontiguousarray(px, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pya = np.ascontiguousarray(py, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pta = np.ascontiguousarray(ptheta, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rel = np.ascontiguousarray(rel_angles, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rng = np.ascontiguousarray(ranges, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] field = np.ascontiguousarray(dist_field, dtype=np.float64)
    cdef Py_ssize_t n = pxa.shape[0]
    cdef Py_ssize_t b = rel.shape[0]
    cdef Py_ssize_t h = field.shape[0]
    cdef Py_ssize_t w = field.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double coeff = -0.5 / (sigma_hit * sigma_hit)
    cdef double ang, exs, eys, dist, acc
    cdef long ix, iy

    for i in range(n):
        acc = 0.0
        for j in range(b):
            ang = pta[i] + rel[j]
            exs = pxa[i] + rng[j] * cos(ang)
            eys = pya[i] + rng[j] * sin(ang)
            ix = <long>floor((exs - ox) / resolution)
            iy = <long>floor((eys - oy) / resolution)
            if 0 <= ix < w and 0 <= iy < h:
                dist = field[iy, ix]
            else:
                dist = oob_distance
            if dist > distance_cap:
                dist = distance_cap
            acc += dist * dist
        out[i] = coeff * acc
    return out
