# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: two-level-grid nearest-neighbor voting.

The sliding-window vote search issues ~(windows x slots) single-NN queries
against a few thousand box points per cube side. The kernel beats a k-d
tree by exploiting the workload shape: consecutive windows displace a query
by one lattice step, so the previous answer bounds the new search to a
small ball, and a coarse occupancy level skips the empty space that
dominates the box around a thin surface. Exact distance ties resolve to the
lower point index.
"""

import multiprocessing

import numpy as np

cimport numpy as cnp
from cython.parallel cimport parallel, prange, threadid
from libc.math cimport ceil, floor, sqrt

cnp.import_array()


cdef struct Grid:
    const double* pts          # (m, 3) row-major
    const long* cell_start     # fine-cell CSR offsets
    const long* cell_order     # point ids grouped by fine cell
    const long* coarse_count   # points per coarse cell
    double ox, oy, oz          # grid origin
    double cell                # fine cell size
    double ccell               # coarse cell size = cell * factor
    long nx, ny, nz            # fine dims
    long ncx, ncy, ncz         # coarse dims
    long factor                # fine cells per coarse cell per axis
    long m                     # point count


cdef inline long _clampl(long v, long lo, long hi) noexcept nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


cdef inline double _axis_gap2(double q, double lo, double size) noexcept nogil:
    """Squared distance from coordinate q to the slab [lo, lo + size]."""
    cdef double gap
    if q < lo:
        gap = lo - q
    elif q > lo + size:
        gap = q - lo - size
    else:
        return 0.0
    return gap * gap


cdef inline void _scan_fine(const Grid* g, double qx, double qy, double qz,
                            long ix, long iy, long iz,
                            long* best, double* best_d2) noexcept nogil:
    cdef long c = (ix * g.ny + iy) * g.nz + iz
    cdef long s = g.cell_start[c]
    cdef long e = g.cell_start[c + 1]
    if s == e:
        return
    # strict > keeps exact-tie points reachable so the index rule stays exact
    cdef double gap2 = (_axis_gap2(qx, g.ox + ix * g.cell, g.cell)
                        + _axis_gap2(qy, g.oy + iy * g.cell, g.cell)
                        + _axis_gap2(qz, g.oz + iz * g.cell, g.cell))
    if gap2 > best_d2[0]:
        return
    cdef long j, p
    cdef double dx, dy, dz, d2
    for j in range(s, e):
        p = g.cell_order[j]
        dx = g.pts[3 * p] - qx
        dy = g.pts[3 * p + 1] - qy
        dz = g.pts[3 * p + 2] - qz
        d2 = dx * dx + dy * dy + dz * dz
        if d2 < best_d2[0] or (d2 == best_d2[0] and p < best[0]):
            best_d2[0] = d2
            best[0] = p


cdef long _nn_seeded(const Grid* g, double qx, double qy, double qz,
                     long seed, double* best_d2_out) noexcept nogil:
    """Exact NN given a warm-start point: scan only the seed-distance ball.

    The true neighbor is at most as far as the seed, so every candidate lies
    inside the ball around q of the seed distance (plus one ulp so boundary
    ties stay reachable; floor is monotone, so their cells stay in range).
    """
    cdef double dx = g.pts[3 * seed] - qx
    cdef double dy = g.pts[3 * seed + 1] - qy
    cdef double dz = g.pts[3 * seed + 2] - qz
    cdef long best = seed
    cdef double best_d2 = dx * dx + dy * dy + dz * dz
    cdef double reach = sqrt(best_d2) * (1.0 + 1e-15) + 1e-300

    cdef long cx0 = _clampl(<long>floor((qx - reach - g.ox) / g.ccell), 0, g.ncx - 1)
    cdef long cx1 = _clampl(<long>floor((qx + reach - g.ox) / g.ccell), 0, g.ncx - 1)
    cdef long cy0 = _clampl(<long>floor((qy - reach - g.oy) / g.ccell), 0, g.ncy - 1)
    cdef long cy1 = _clampl(<long>floor((qy + reach - g.oy) / g.ccell), 0, g.ncy - 1)
    cdef long cz0 = _clampl(<long>floor((qz - reach - g.oz) / g.ccell), 0, g.ncz - 1)
    cdef long cz1 = _clampl(<long>floor((qz + reach - g.oz) / g.ccell), 0, g.ncz - 1)

    cdef long fx0 = _clampl(<long>floor((qx - reach - g.ox) / g.cell), 0, g.nx - 1)
    cdef long fx1 = _clampl(<long>floor((qx + reach - g.ox) / g.cell), 0, g.nx - 1)
    cdef long fy0 = _clampl(<long>floor((qy - reach - g.oy) / g.cell), 0, g.ny - 1)
    cdef long fy1 = _clampl(<long>floor((qy + reach - g.oy) / g.cell), 0, g.ny - 1)
    cdef long fz0 = _clampl(<long>floor((qz - reach - g.oz) / g.cell), 0, g.nz - 1)
    cdef long fz1 = _clampl(<long>floor((qz + reach - g.oz) / g.cell), 0, g.nz - 1)

    cdef long cx, cy, cz, ix, iy, iz, ix0, ix1, iy0, iy1, iz0, iz1, c
    cdef double gap_x, gap_xy, gap2
    for cx in range(cx0, cx1 + 1):
        gap_x = _axis_gap2(qx, g.ox + cx * g.ccell, g.ccell)
        if gap_x > best_d2:
            continue
        for cy in range(cy0, cy1 + 1):
            gap_xy = gap_x + _axis_gap2(qy, g.oy + cy * g.ccell, g.ccell)
            if gap_xy > best_d2:
                continue
            for cz in range(cz0, cz1 + 1):
                c = (cx * g.ncy + cy) * g.ncz + cz
                if g.coarse_count[c] == 0:
                    continue
                gap2 = gap_xy + _axis_gap2(qz, g.oz + cz * g.ccell, g.ccell)
                if gap2 > best_d2:
                    continue
                ix0 = cx * g.factor
                iy0 = cy * g.factor
                iz0 = cz * g.factor
                ix1 = ix0 + g.factor - 1
                iy1 = iy0 + g.factor - 1
                iz1 = iz0 + g.factor - 1
                if ix0 < fx0: ix0 = fx0
                if iy0 < fy0: iy0 = fy0
                if iz0 < fz0: iz0 = fz0
                if ix1 > fx1: ix1 = fx1
                if iy1 > fy1: iy1 = fy1
                if iz1 > fz1: iz1 = fz1
                for ix in range(ix0, ix1 + 1):
                    for iy in range(iy0, iy1 + 1):
                        for iz in range(iz0, iz1 + 1):
                            _scan_fine(g, qx, qy, qz, ix, iy, iz,
                                       &best, &best_d2)
    best_d2_out[0] = best_d2
    return best


cdef long _nn_brute(const Grid* g, double qx, double qy, double qz,
                    double* best_d2_out) noexcept nogil:
    """Full scan for seedless queries (one per slot); lowest index wins ties."""
    cdef long best = -1
    cdef double best_d2 = 1e308
    cdef long p
    cdef double dx, dy, dz, d2
    for p in range(g.m):
        dx = g.pts[3 * p] - qx
        dy = g.pts[3 * p + 1] - qy
        dz = g.pts[3 * p + 2] - qz
        d2 = dx * dx + dy * dy + dz * dz
        if d2 < best_d2:
            best_d2 = d2
            best = p
    best_d2_out[0] = best_d2
    return best


def window_vote_counts(double[:, ::1] box_points, double[:, ::1] rel_known,
                       double[:, ::1] centers, double half_window):
    """Same contract as kernels.reference.window_vote_counts."""
    cdef long m = box_points.shape[0]
    cdef long s = rel_known.shape[0]
    cdef long w = centers.shape[0]
    votes_arr = np.zeros(w, dtype=np.int64)
    cdef long[::1] votes = votes_arr
    if m == 0 or s == 0 or w == 0:
        return votes_arr
    cdef Grid g
    g.pts = &box_points[0, 0]
    g.factor = 4
    g.m = m

    cdef double min_x = g.pts[0], max_x = g.pts[0]
    cdef double min_y = g.pts[1], max_y = g.pts[1]
    cdef double min_z = g.pts[2], max_z = g.pts[2]
    cdef long i
    for i in range(m):
        if g.pts[3 * i] < min_x: min_x = g.pts[3 * i]
        if g.pts[3 * i] > max_x: max_x = g.pts[3 * i]
        if g.pts[3 * i + 1] < min_y: min_y = g.pts[3 * i + 1]
        if g.pts[3 * i + 1] > max_y: max_y = g.pts[3 * i + 1]
        if g.pts[3 * i + 2] < min_z: min_z = g.pts[3 * i + 2]
        if g.pts[3 * i + 2] > max_z: max_z = g.pts[3 * i + 2]
    g.ox, g.oy, g.oz = min_x, min_y, min_z

    # Fine cell size: a couple of points per cell whether the cloud fills the
    # box (volume estimate) or hugs a surface (largest-face-area estimate).
    cdef double e0 = max_x - min_x, e1 = max_y - min_y, e2 = max_z - min_z
    cdef double t
    if e0 < e1: t = e0; e0 = e1; e1 = t
    if e1 < e2: t = e1; e1 = e2; e2 = t
    if e0 < e1: t = e0; e0 = e1; e1 = t
    cdef double cell = 0.0
    if e0 * e1 * e2 > 0:
        cell = (e0 * e1 * e2 / m) ** (1.0 / 3.0)
    if e0 * e1 > 0:
        t = sqrt(e0 * e1 / m)
        if t > cell:
            cell = t
    if e0 / m > cell:
        cell = e0 / m
    cell *= 1.5
    if cell <= 0:
        cell = 1.0
    g.cell = cell
    g.ccell = cell * g.factor

    g.nx = <long>ceil((max_x - min_x) / cell) if max_x > min_x else 1
    g.ny = <long>ceil((max_y - min_y) / cell) if max_y > min_y else 1
    g.nz = <long>ceil((max_z - min_z) / cell) if max_z > min_z else 1
    if g.nx < 1: g.nx = 1
    if g.ny < 1: g.ny = 1
    if g.nz < 1: g.nz = 1
    g.ncx = (g.nx + g.factor - 1) / g.factor
    g.ncy = (g.ny + g.factor - 1) / g.factor
    g.ncz = (g.nz + g.factor - 1) / g.factor

    # counting-sort points into fine cells (CSR layout) + coarse occupancy
    cdef long n_cells = g.nx * g.ny * g.nz
    cdef long n_coarse = g.ncx * g.ncy * g.ncz
    start_arr = np.zeros(n_cells + 1, dtype=np.int64)
    order_arr = np.empty(m, dtype=np.int64)
    cell_of_arr = np.empty(m, dtype=np.int64)
    coarse_arr = np.zeros(n_coarse, dtype=np.int64)
    cdef long[::1] cell_start_mv = start_arr
    cdef long[::1] cell_order_mv = order_arr
    cdef long[::1] cell_of = cell_of_arr
    cdef long[::1] coarse_mv = coarse_arr
    cdef long* cell_start = &cell_start_mv[0]
    cdef long* cell_order = &cell_order_mv[0]
    cdef long gx, gy, gz, c
    for i in range(m):
        gx = _clampl(<long>floor((g.pts[3 * i] - min_x) / cell), 0, g.nx - 1)
        gy = _clampl(<long>floor((g.pts[3 * i + 1] - min_y) / cell), 0, g.ny - 1)
        gz = _clampl(<long>floor((g.pts[3 * i + 2] - min_z) / cell), 0, g.nz - 1)
        c = (gx * g.ny + gy) * g.nz + gz
        cell_of[i] = c
        cell_start[c + 1] += 1
        coarse_mv[((gx / g.factor) * g.ncy + gy / g.factor) * g.ncz
                  + gz / g.factor] += 1
    for c in range(n_cells):
        cell_start[c + 1] += cell_start[c]
    fill_arr = np.zeros(n_cells, dtype=np.int64)
    cdef long[::1] fill = fill_arr
    for i in range(m):
        c = cell_of[i]
        cell_order[cell_start[c] + fill[c]] = i
        fill[c] += 1
    g.cell_start = cell_start
    g.cell_order = cell_order
    g.coarse_count = &coarse_mv[0]

    cdef const double* rel = &rel_known[0, 0]
    cdef const double* ctr = &centers[0, 0]
    cdef long iw, js, best, prev, tid, nthreads
    cdef double qx, qy, qz, ux, uy, uz, d2
    nthreads = min(multiprocessing.cpu_count(), 8)
    local_arr = np.zeros((nthreads, w), dtype=np.int64)
    cdef long[:, ::1] local = local_arr
    # slot-major iteration: the previous window's neighbor warm-starts the
    # next (centers arrive serpentine-ordered); slots are independent, so the
    # per-thread tallies sum to an order-independent exact count
    with nogil, parallel(num_threads=nthreads):
        for js in prange(s, schedule="static"):
            tid = threadid()
            prev = -1
            for iw in range(w):
                qx = rel[3 * js] + ctr[3 * iw]
                qy = rel[3 * js + 1] + ctr[3 * iw + 1]
                qz = rel[3 * js + 2] + ctr[3 * iw + 2]
                if prev >= 0:
                    best = _nn_seeded(&g, qx, qy, qz, prev, &d2)
                else:
                    best = _nn_brute(&g, qx, qy, qz, &d2)
                prev = best
                ux = ctr[3 * iw]
                uy = ctr[3 * iw + 1]
                uz = ctr[3 * iw + 2]
                if (g.pts[3 * best] - ux <= half_window and
                        ux - g.pts[3 * best] <= half_window and
                        g.pts[3 * best + 1] - uy <= half_window and
                        uy - g.pts[3 * best + 1] <= half_window and
                        g.pts[3 * best + 2] - uz <= half_window and
                        uz - g.pts[3 * best + 2] <= half_window):
                    local[tid, iw] += 1
    votes_arr[:] = local_arr.sum(axis=0)
    return votes_arr
