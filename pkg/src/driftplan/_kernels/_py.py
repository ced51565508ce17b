"""Pure-numpy kernel implementations (fallback backend).

These functions define the reference semantics for the hot per-step grid
operations; the compiled backend in _core.pyx mirrors them one for one.
All grids are float64 log-odds arrays of shape (rows, cols) with row index
along y and column index along x.
"""

from __future__ import annotations

import math

import numpy as np

SIGMA_COEFF = 0.0012  # localization noise std = SIGMA_COEFF * r^2


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _logit(p):
    return np.log(p / (1.0 - p))


def fov_cells(
    rows: int,
    cols: int,
    cell_dx: float,
    cell_dy: float,
    origin_x: float,
    origin_y: float,
    px: float,
    py: float,
    psi: float,
    max_range: float,
    half_fov: float,
):
    """Indices (ii, jj) and ranges of all cells whose center lies in the fov.

    Range and bearing limits are inclusive; a cell center coincident with the
    sensor (range 0) counts as visible.
    """
    j_lo = max(0, int(math.floor((px - max_range - origin_x) / cell_dx - 0.5)))
    j_hi = min(cols - 1, int(math.ceil((px + max_range - origin_x) / cell_dx - 0.5)))
    i_lo = max(0, int(math.floor((py - max_range - origin_y) / cell_dy - 0.5)))
    i_hi = min(rows - 1, int(math.ceil((py + max_range - origin_y) / cell_dy - 0.5)))
    if j_lo > j_hi or i_lo > i_hi:
        empty = np.empty(0, dtype=np.intp)
        return empty, empty, np.empty(0, dtype=np.float64)
    xs = origin_x + (np.arange(j_lo, j_hi + 1) + 0.5) * cell_dx - px
    ys = origin_y + (np.arange(i_lo, i_hi + 1) + 0.5) * cell_dy - py
    dxg = np.broadcast_to(xs, (ys.size, xs.size))
    dyg = np.broadcast_to(ys[:, None], (ys.size, xs.size))
    rr = np.hypot(dxg, dyg)
    bearing = np.arctan2(dyg, dxg) - psi
    bearing = np.remainder(bearing + math.pi, 2.0 * math.pi) - math.pi
    inside = (rr <= max_range) & ((np.abs(bearing) <= half_fov) | (rr == 0.0))
    ii, jj = np.nonzero(inside)
    return ii + i_lo, jj + j_lo, rr[inside]


def apply_detection_kernel(
    log_odds: np.ndarray,
    cell_dx: float,
    cell_dy: float,
    origin_x: float,
    origin_y: float,
    xd: float,
    yd: float,
    r: float,
    a: float,
    d: float,
    p_low: float,
):
    """Add positive-model log-odds around one detection; returns touched (ii, jj).

    The kernel support is truncated where the model value drops to p_low.
    """
    rows, cols = log_odds.shape
    sig = 1.0 / (1.0 + math.exp(a * (r - d)))
    empty = np.empty(0, dtype=np.intp)
    if sig <= p_low:
        return empty, empty
    sigma = SIGMA_COEFF * r * r
    if sigma == 0.0:
        # Degenerate kernel: only a cell center exactly at the detection.
        i, j = int(math.floor((yd - origin_y) / cell_dy)), int(
            math.floor((xd - origin_x) / cell_dx)
        )
        if 0 <= i < rows and 0 <= j < cols:
            cx = origin_x + (j + 0.5) * cell_dx
            cy = origin_y + (i + 0.5) * cell_dy
            if cx == xd and cy == yd:
                log_odds[i, j] += math.log(sig / (1.0 - sig))
                return np.array([i], dtype=np.intp), np.array([j], dtype=np.intp)
        return empty, empty
    u_max = sigma * math.sqrt(2.0 * math.log(sig / p_low))
    j_lo = max(0, int(math.floor((xd - u_max - origin_x) / cell_dx - 0.5)))
    j_hi = min(cols - 1, int(math.ceil((xd + u_max - origin_x) / cell_dx - 0.5)))
    i_lo = max(0, int(math.floor((yd - u_max - origin_y) / cell_dy - 0.5)))
    i_hi = min(rows - 1, int(math.ceil((yd + u_max - origin_y) / cell_dy - 0.5)))
    if j_lo > j_hi or i_lo > i_hi:
        return empty, empty
    xs = origin_x + (np.arange(j_lo, j_hi + 1) + 0.5) * cell_dx - xd
    ys = origin_y + (np.arange(i_lo, i_hi + 1) + 0.5) * cell_dy - yd
    d2 = xs[None, :] ** 2 + ys[:, None] ** 2
    vals = sig * np.exp(-d2 / (2.0 * sigma * sigma))
    mask = vals > p_low
    ii, jj = np.nonzero(mask)
    log_odds[ii + i_lo, jj + j_lo] += _logit(vals[mask])
    return ii + i_lo, jj + j_lo


def negative_update(
    log_odds: np.ndarray,
    ii: np.ndarray,
    jj: np.ndarray,
    rr: np.ndarray,
    occupied: np.ndarray,
    a_prime: float,
    d_prime: float,
):
    """Free-space update on fov cells outside the detection-kernel set."""
    keep = ~occupied[ii, jj]
    if not np.any(keep):
        return
    p = 1.0 / (1.0 + np.exp(a_prime * (rr[keep] - d_prime)))
    log_odds[ii[keep], jj[keep]] += _logit(p)


def clamp_log_odds(log_odds: np.ndarray, lo_min: float, lo_max: float):
    np.clip(log_odds, lo_min, lo_max, out=log_odds)


def predict_shift_blend(
    log_odds: np.ndarray,
    s_row: int,
    s_col: int,
    alpha: float,
    beta: float,
    p_low: float,
    lo_min: float,
    lo_max: float,
):
    """Drift-compensation update: blend each cell with its shifted filtered source.

    The filtered grid keeps probabilities > 0.5 and maps everything else to
    p_low; out-of-bounds sources read as p_low. Cells whose filtered value
    already equals the source value are left untouched (bit-exact identity).
    """
    if s_row == 0 and s_col == 0:
        return
    rows, cols = log_odds.shape
    # sigmoid(lo) > 0.5 iff lo > 0; the sigmoid itself is only needed at
    # occupied cells (filter values) and changed cells (blend)
    occ = log_odds > 0.0
    filt = np.full(log_odds.shape, p_low)
    filt[occ] = _sigmoid(log_odds[occ])
    src = np.full_like(filt, p_low)
    r0, r1 = max(0, s_row), min(rows, rows + s_row)
    c0, c1 = max(0, s_col), min(cols, cols + s_col)
    if r0 < r1 and c0 < c1:
        src[r0:r1, c0:c1] = filt[r0 - s_row : r1 - s_row, c0 - s_col : c1 - s_col]
    cond = filt != src
    blended = alpha * src[cond] + beta * _sigmoid(log_odds[cond])
    log_odds[cond] = np.clip(_logit(blended), lo_min, lo_max)


def expected_measurement_update(
    log_odds: np.ndarray,
    cell_dx: float,
    cell_dy: float,
    origin_x: float,
    origin_y: float,
    px: float,
    py: float,
    psi: float,
    max_range: float,
    half_fov: float,
    a: float,
    d: float,
    a_prime: float,
    d_prime: float,
    lo_min: float,
    lo_max: float,
):
    """Most-likely-measurement update used in planner forward simulation.

    Cells in the fov that currently look occupied (p > 0.5) receive the
    positive-model sigmoid at their range (an expected redetection); all
    other fov cells receive the free-space model.
    """
    rows, cols = log_odds.shape
    ii, jj, rr = fov_cells(
        rows, cols, cell_dx, cell_dy, origin_x, origin_y, px, py, psi, max_range, half_fov
    )
    if ii.size == 0:
        return
    lo = log_odds[ii, jj]
    occ = lo > 0.0  # sigmoid(lo) > 0.5 iff lo > 0
    upd = np.where(
        occ,
        1.0 / (1.0 + np.exp(a * (rr - d))),
        1.0 / (1.0 + np.exp(a_prime * (rr - d_prime))),
    )
    log_odds[ii, jj] = np.clip(lo + _logit(upd), lo_min, lo_max)


def mean_entropy_bits(log_odds: np.ndarray) -> float:
    """Mean binary Shannon entropy (bits per cell) of the probability grid."""
    p = _sigmoid(log_odds)
    q = 1.0 - p
    h = -(p * np.log2(p) + q * np.log2(q))
    return float(np.mean(h))
