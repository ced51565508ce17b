"""Evaluation metrics (map entropy, blurred-truth MSE, detection rate) and
their aggregation over Monte-Carlo trials."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import GridGeometry
from .mapping import OccupancyGrid
from .world import TargetState


@dataclass(frozen=True)
class MetricSample:
    t: float
    H: float  # mean map entropy, bits
    mse: float
    n_detections_step: int
    mean_detections: float  # cumulative detections / elapsed steps


def truth_grid(targets: list[TargetState], geom: GridGeometry) -> np.ndarray:
    """Binary grid marking the cells that currently contain targets.

    Targets outside the map are absent, so the grid can hold fewer marks
    than there are targets.
    """
    out = np.zeros((geom.rows, geom.cols), dtype=np.uint8)
    for t in targets:
        i, j = geom.cell_of(t.x, t.y)
        if geom.in_bounds_cell(i, j):
            out[i, j] = 1
    return out


def gaussian_kernel(sigma_cells: float) -> np.ndarray:
    """Unit-peak Gaussian stamp truncated at 4 sigma (square support)."""
    if sigma_cells <= 0:
        raise ValueError("sigma_cells must be > 0")
    r = int(math.floor(4.0 * sigma_cells))
    ax = np.arange(-r, r + 1, dtype=np.float64)
    u, v = np.meshgrid(ax, ax, indexing="ij")
    return np.exp(-(u * u + v * v) / (2.0 * sigma_cells * sigma_cells))


def blur_truth(truth: np.ndarray, sigma_cells: float) -> np.ndarray:
    """Zero-padded convolution of the truth marks with the unit-peak kernel,
    computed by stamping (truth is sparse)."""
    kern = gaussian_kernel(sigma_cells)
    r = kern.shape[0] // 2
    rows, cols = truth.shape
    out = np.zeros((rows, cols), dtype=np.float64)
    for i, j in zip(*np.nonzero(truth)):
        i0, i1 = max(i - r, 0), min(i + r + 1, rows)
        j0, j1 = max(j - r, 0), min(j + r + 1, cols)
        out[i0:i1, j0:j1] += kern[i0 - (i - r) : i1 - (i - r), j0 - (j - r) : j1 - (j - r)]
    return out


def mse(grid: OccupancyGrid, truth: np.ndarray, sigma_cells: float = 2.0) -> float:
    """Mean squared error between the map and the Gaussian-blurred truth."""
    if truth.shape != grid.log_odds.shape:
        raise ValueError(
            f"truth shape {truth.shape} does not match grid {grid.log_odds.shape}"
        )
    diff = grid.probabilities() - blur_truth(truth, sigma_cells)
    return float(np.mean(diff * diff))


def mean_detections(counts: list[int]) -> float:
    """Cumulative detections divided by elapsed steps."""
    if not counts:
        raise ValueError("detection history is empty")
    return float(sum(counts)) / len(counts)


@dataclass(eq=False)
class Summary:
    """Final-time means/stds plus per-step mean curves with one-std bands."""

    n_trials: int
    h_mean: float
    h_std: float
    mse_mean: float
    mse_std: float
    det_mean: float
    det_std: float
    t: np.ndarray
    h_curve: np.ndarray
    h_band: np.ndarray
    mse_curve: np.ndarray
    mse_band: np.ndarray
    det_curve: np.ndarray
    det_band: np.ndarray


def _mean_std(values: np.ndarray, axis=0) -> tuple:
    mean = values.mean(axis=axis)
    if values.shape[axis] < 2:
        std = np.zeros_like(mean) if isinstance(mean, np.ndarray) else 0.0
    else:
        std = values.std(axis=axis, ddof=1)  # sample std
    return mean, std


def aggregate(traces: list) -> Summary:
    """Summarize episode traces (any objects with .steps[k].metrics)."""
    if not traces:
        raise ValueError("need at least one trace")
    lengths = {len(tr.steps) for tr in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces have differing step counts: {sorted(lengths)}")
    h = np.array([[s.metrics.H for s in tr.steps] for tr in traces])
    m = np.array([[s.metrics.mse for s in tr.steps] for tr in traces])
    d = np.array([[s.metrics.mean_detections for s in tr.steps] for tr in traces])
    t = np.array([s.t for s in traces[0].steps])
    h_curve, h_band = _mean_std(h)
    mse_curve, mse_band = _mean_std(m)
    det_curve, det_band = _mean_std(d)
    h_mean, h_std = _mean_std(h[:, -1])
    mse_mean, mse_std = _mean_std(m[:, -1])
    det_mean, det_std = _mean_std(d[:, -1])
    return Summary(
        n_trials=len(traces),
        h_mean=float(h_mean),
        h_std=float(h_std),
        mse_mean=float(mse_mean),
        mse_std=float(mse_std),
        det_mean=float(det_mean),
        det_std=float(det_std),
        t=t,
        h_curve=h_curve,
        h_band=h_band,
        mse_curve=mse_curve,
        mse_band=mse_band,
        det_curve=det_curve,
        det_band=det_band,
    )


# -- CSV export -----------------------------------------------------------

METRICS_CSV_HEADER = "seed,t,H,mse,n_step,mean_detections"
SUMMARY_CSV_HEADER = "label,n_trials,H_mean,H_std,mse_mean,mse_std,det_mean,det_std"
CURVES_CSV_HEADER = "t,H_mean,H_std,mse_mean,mse_std,det_mean,det_std"


def metrics_csv_text(trace) -> str:
    lines = [METRICS_CSV_HEADER]
    for s in trace.steps:
        ms = s.metrics
        lines.append(
            f"{trace.seed},{ms.t!r},{ms.H!r},{ms.mse!r},"
            f"{ms.n_detections_step},{ms.mean_detections!r}"
        )
    return "\n".join(lines) + "\n"


def summary_csv_text(rows: list[tuple[str, Summary]]) -> str:
    lines = [SUMMARY_CSV_HEADER]
    for label, s in rows:
        lines.append(
            f"{label},{s.n_trials},{s.h_mean!r},{s.h_std!r},"
            f"{s.mse_mean!r},{s.mse_std!r},{s.det_mean!r},{s.det_std!r}"
        )
    return "\n".join(lines) + "\n"


def curves_csv_text(summary: Summary) -> str:
    lines = [CURVES_CSV_HEADER]
    for k in range(len(summary.t)):
        vals = (
            summary.t[k],
            summary.h_curve[k],
            summary.h_band[k],
            summary.mse_curve[k],
            summary.mse_band[k],
            summary.det_curve[k],
            summary.det_band[k],
        )
        lines.append(",".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"
