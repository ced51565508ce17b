# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel implementations; semantics mirror _py.py one for one."""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, ceil, cos, exp, fabs, floor, fmod, hypot, log, log2, sin, sqrt

cnp.import_array()

SIGMA_COEFF = 0.0012

cdef double PI = 3.141592653589793
cdef double TWO_PI = 6.283185307179586


cdef inline double _wrap_pm_pi(double b) nogil:
    # floor-mod wrap to [-pi, pi), matching np.remainder(b + pi, 2 pi) - pi
    cdef double w = fmod(b + PI, TWO_PI)
    if w < 0:
        w += TWO_PI
    return w - PI


cdef inline double _sigmoid(double x) nogil:
    return 1.0 / (1.0 + exp(-x))


cdef inline double _logit(double p) nogil:
    return log(p / (1.0 - p))


cdef inline bint _in_sector(
    double dx, double dy, double r, double psi, double half_fov,
    double cos_psi, double sin_psi, double cos_half,
) nogil:
    # |wrapped bearing| <= half_fov, decided by the heading-projection test
    # along >= r cos(half_fov) away from the sector edge; within a 1e-9
    # relative band of the edge, fall back to the exact atan2 expression so
    # the included cell set is bit-identical to the plain formulation.
    cdef double along = dx * cos_psi + dy * sin_psi
    cdef double thr = r * cos_half
    cdef double band = 1e-9 * r
    if along > thr + band:
        return True
    if along < thr - band:
        return False
    return fabs(_wrap_pm_pi(atan2(dy, dx) - psi)) <= half_fov


def fov_cells(
    int rows,
    int cols,
    double cell_dx,
    double cell_dy,
    double origin_x,
    double origin_y,
    double px,
    double py,
    double psi,
    double max_range,
    double half_fov,
):
    """Indices (ii, jj) and ranges of all cells whose center lies in the fov.

    Range and bearing limits are inclusive; a cell center coincident with the
    sensor (range 0) counts as visible.
    """
    cdef int j_lo = max(0, <int>floor((px - max_range - origin_x) / cell_dx - 0.5))
    cdef int j_hi = min(cols - 1, <int>ceil((px + max_range - origin_x) / cell_dx - 0.5))
    cdef int i_lo = max(0, <int>floor((py - max_range - origin_y) / cell_dy - 0.5))
    cdef int i_hi = min(rows - 1, <int>ceil((py + max_range - origin_y) / cell_dy - 0.5))
    if j_lo > j_hi or i_lo > i_hi:
        empty = np.empty(0, dtype=np.intp)
        return empty, empty, np.empty(0, dtype=np.float64)
    cdef Py_ssize_t cap = (<Py_ssize_t>(i_hi - i_lo + 1)) * (j_hi - j_lo + 1)
    ii_arr = np.empty(cap, dtype=np.intp)
    jj_arr = np.empty(cap, dtype=np.intp)
    rr_arr = np.empty(cap, dtype=np.float64)
    cdef cnp.intp_t[:] ii = ii_arr
    cdef cnp.intp_t[:] jj = jj_arr
    cdef double[:] rr = rr_arr
    cdef Py_ssize_t n = 0
    cdef int i, j
    cdef double dx, dy, r
    cdef double cos_psi = cos(psi), sin_psi = sin(psi), cos_half = cos(half_fov)
    for i in range(i_lo, i_hi + 1):
        dy = origin_y + (i + 0.5) * cell_dy - py
        for j in range(j_lo, j_hi + 1):
            dx = origin_x + (j + 0.5) * cell_dx - px
            r = hypot(dx, dy)
            if r > max_range:
                continue
            if _in_sector(dx, dy, r, psi, half_fov, cos_psi, sin_psi, cos_half) or r == 0.0:
                ii[n] = i
                jj[n] = j
                rr[n] = r
                n += 1
    return ii_arr[:n].copy(), jj_arr[:n].copy(), rr_arr[:n].copy()


def apply_detection_kernel(
    cnp.float64_t[:, :] log_odds,
    double cell_dx,
    double cell_dy,
    double origin_x,
    double origin_y,
    double xd,
    double yd,
    double r,
    double a,
    double d,
    double p_low,
):
    """Add positive-model log-odds around one detection; returns touched (ii, jj).

    The kernel support is truncated where the model value drops to p_low.
    """
    cdef int rows = log_odds.shape[0]
    cdef int cols = log_odds.shape[1]
    cdef double sig = 1.0 / (1.0 + exp(a * (r - d)))
    empty = np.empty(0, dtype=np.intp)
    if sig <= p_low:
        return empty, empty
    cdef double sigma = 0.0012 * r * r
    cdef int i, j
    cdef double cx, cy
    if sigma == 0.0:
        i = <int>floor((yd - origin_y) / cell_dy)
        j = <int>floor((xd - origin_x) / cell_dx)
        if 0 <= i < rows and 0 <= j < cols:
            cx = origin_x + (j + 0.5) * cell_dx
            cy = origin_y + (i + 0.5) * cell_dy
            if cx == xd and cy == yd:
                log_odds[i, j] += log(sig / (1.0 - sig))
                out_i = np.empty(1, dtype=np.intp)
                out_j = np.empty(1, dtype=np.intp)
                out_i[0] = i
                out_j[0] = j
                return out_i, out_j
        return empty, empty
    cdef double u_max = sigma * sqrt(2.0 * log(sig / p_low))
    cdef int j_lo = max(0, <int>floor((xd - u_max - origin_x) / cell_dx - 0.5))
    cdef int j_hi = min(cols - 1, <int>ceil((xd + u_max - origin_x) / cell_dx - 0.5))
    cdef int i_lo = max(0, <int>floor((yd - u_max - origin_y) / cell_dy - 0.5))
    cdef int i_hi = min(rows - 1, <int>ceil((yd + u_max - origin_y) / cell_dy - 0.5))
    if j_lo > j_hi or i_lo > i_hi:
        return empty, empty
    cdef Py_ssize_t cap = (<Py_ssize_t>(i_hi - i_lo + 1)) * (j_hi - j_lo + 1)
    ii_arr = np.empty(cap, dtype=np.intp)
    jj_arr = np.empty(cap, dtype=np.intp)
    cdef cnp.intp_t[:] ii = ii_arr
    cdef cnp.intp_t[:] jj = jj_arr
    cdef Py_ssize_t n = 0
    cdef double ux, uy, val
    for i in range(i_lo, i_hi + 1):
        uy = origin_y + (i + 0.5) * cell_dy - yd
        for j in range(j_lo, j_hi + 1):
            ux = origin_x + (j + 0.5) * cell_dx - xd
            val = sig * exp(-(ux * ux + uy * uy) / (2.0 * sigma * sigma))
            if val > p_low:
                log_odds[i, j] += log(val / (1.0 - val))
                ii[n] = i
                jj[n] = j
                n += 1
    return ii_arr[:n].copy(), jj_arr[:n].copy()


def negative_update(
    cnp.float64_t[:, :] log_odds,
    ii,
    jj,
    rr,
    occupied,
    double a_prime,
    double d_prime,
):
    """Free-space update on fov cells outside the detection-kernel set."""
    cdef cnp.intp_t[:] iv = ii
    cdef cnp.intp_t[:] jv = jj
    cdef double[:] rv = rr
    cdef const unsigned char[:, :] occ = occupied.view(np.uint8)
    cdef Py_ssize_t k
    cdef double p
    for k in range(iv.shape[0]):
        if occ[iv[k], jv[k]]:
            continue
        p = 1.0 / (1.0 + exp(a_prime * (rv[k] - d_prime)))
        log_odds[iv[k], jv[k]] += log(p / (1.0 - p))


def clamp_log_odds(cnp.float64_t[:, :] log_odds, double lo_min, double lo_max):
    cdef Py_ssize_t i, j
    for i in range(log_odds.shape[0]):
        for j in range(log_odds.shape[1]):
            if log_odds[i, j] < lo_min:
                log_odds[i, j] = lo_min
            elif log_odds[i, j] > lo_max:
                log_odds[i, j] = lo_max


def predict_shift_blend(
    cnp.float64_t[:, :] log_odds,
    int s_row,
    int s_col,
    double alpha,
    double beta,
    double p_low,
    double lo_min,
    double lo_max,
):
    """Drift-compensation update: blend each cell with its shifted filtered source.

    The filtered grid keeps probabilities > 0.5 and maps everything else to
    p_low; out-of-bounds sources read as p_low. Cells whose filtered value
    already equals the source value are left untouched (bit-exact identity).
    """
    if s_row == 0 and s_col == 0:
        return
    cdef Py_ssize_t rows = log_odds.shape[0]
    cdef Py_ssize_t cols = log_odds.shape[1]
    filt_arr = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, :] filt = filt_arr
    cdef Py_ssize_t i, j, si, sj
    cdef double src, blended, lo
    for i in range(rows):
        for j in range(cols):
            # sigmoid(lo) > 0.5 iff lo > 0; elsewhere the sigmoid is unused
            lo = log_odds[i, j]
            filt[i, j] = _sigmoid(lo) if lo > 0.0 else p_low
    for i in range(rows):
        si = i - s_row
        for j in range(cols):
            sj = j - s_col
            if 0 <= si < rows and 0 <= sj < cols:
                src = filt[si, sj]
            else:
                src = p_low
            if filt[i, j] == src:
                continue
            blended = alpha * src + beta * _sigmoid(log_odds[i, j])
            lo = log(blended / (1.0 - blended))
            if lo < lo_min:
                lo = lo_min
            elif lo > lo_max:
                lo = lo_max
            log_odds[i, j] = lo


def expected_measurement_update(
    cnp.float64_t[:, :] log_odds,
    double cell_dx,
    double cell_dy,
    double origin_x,
    double origin_y,
    double px,
    double py,
    double psi,
    double max_range,
    double half_fov,
    double a,
    double d,
    double a_prime,
    double d_prime,
    double lo_min,
    double lo_max,
):
    """Most-likely-measurement update used in planner forward simulation.

    Cells in the fov that currently look occupied (p > 0.5) receive the
    positive-model sigmoid at their range (an expected redetection); all
    other fov cells receive the free-space model.
    """
    cdef int rows = <int>log_odds.shape[0]
    cdef int cols = <int>log_odds.shape[1]
    cdef int j_lo = max(0, <int>floor((px - max_range - origin_x) / cell_dx - 0.5))
    cdef int j_hi = min(cols - 1, <int>ceil((px + max_range - origin_x) / cell_dx - 0.5))
    cdef int i_lo = max(0, <int>floor((py - max_range - origin_y) / cell_dy - 0.5))
    cdef int i_hi = min(rows - 1, <int>ceil((py + max_range - origin_y) / cell_dy - 0.5))
    if j_lo > j_hi or i_lo > i_hi:
        return
    cdef int i, j
    cdef double dx, dy, r, upd, lo
    cdef double cos_psi = cos(psi), sin_psi = sin(psi), cos_half = cos(half_fov)
    for i in range(i_lo, i_hi + 1):
        dy = origin_y + (i + 0.5) * cell_dy - py
        for j in range(j_lo, j_hi + 1):
            dx = origin_x + (j + 0.5) * cell_dx - px
            r = hypot(dx, dy)
            if r > max_range:
                continue
            if not _in_sector(dx, dy, r, psi, half_fov, cos_psi, sin_psi, cos_half) and r != 0.0:
                continue
            lo = log_odds[i, j]
            # sigmoid(lo) > 0.5 iff lo > 0
            if lo > 0.0:
                upd = 1.0 / (1.0 + exp(a * (r - d)))
            else:
                upd = 1.0 / (1.0 + exp(a_prime * (r - d_prime)))
            lo += log(upd / (1.0 - upd))
            if lo < lo_min:
                lo = lo_min
            elif lo > lo_max:
                lo = lo_max
            log_odds[i, j] = lo


def mean_entropy_bits(cnp.float64_t[:, :] log_odds) -> float:
    """Mean binary Shannon entropy (bits per cell) of the probability grid.

    Occupancy grids are mostly runs of repeated values (unexplored prior,
    clamped free space, clamped blobs), so the per-cell term is reused while
    the value does not change; equal inputs give bit-equal terms, keeping
    the sum identical to the plain per-cell evaluation.
    """
    cdef Py_ssize_t i, j
    cdef double lo, p, q, acc = 0.0
    cdef double last_lo = 0.0, last_term = 0.0
    cdef bint has_last = False
    for i in range(log_odds.shape[0]):
        for j in range(log_odds.shape[1]):
            lo = log_odds[i, j]
            if has_last and lo == last_lo:
                acc += last_term
                continue
            p = _sigmoid(lo)
            q = 1.0 - p
            last_term = -(p * log2(p) + q * log2(q))
            last_lo = lo
            has_last = True
            acc += last_term
    return acc / (log_odds.shape[0] * log_odds.shape[1])
