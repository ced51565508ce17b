"""Analytical spatiotemporal prediction of target positions.

A thresholded occupancy grid is reduced to component centroids; each centroid
is advected by the wind drift over the requested horizon and rendered as an
anisotropic Gaussian heatmap (std grows linearly with horizon, elongated
along the wind). This closed form is what a learned predictor would be
trained against; generate_dataset exports such training pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .config import ScenarioConfig
from .geometry import GridGeometry
from .world import WindState, drift_step

# Kernel std per meter of drift distance: along-wind and across-wind factors,
# and the isotropic growth rate (m/s of horizon) used when the wind is calm.
SIGMA_ALONG_FACTOR = 0.5
SIGMA_ACROSS_FACTOR = 0.2
CALM_SIGMA_RATE = 0.1

_CONN8 = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class BinaryTargetGrid:
    geom: GridGeometry
    cells: np.ndarray  # uint8, values exactly 0 or 1

    def __post_init__(self):
        if self.cells.shape != (self.geom.rows, self.geom.cols):
            raise ValueError("cells shape does not match geometry")


@dataclass(frozen=True)
class PredictedGrid:
    geom: GridGeometry
    values: np.ndarray  # float64 in [0, 1]
    horizon_s: float
    wind: WindState


def binarize(grid) -> BinaryTargetGrid:
    """Threshold an occupancy grid at p > 0.5 (strict)."""
    cells = (grid.probabilities() > 0.5).astype(np.uint8)
    return BinaryTargetGrid(geom=grid.geom, cells=cells)


def component_centroids(k: BinaryTargetGrid) -> list[tuple[float, float]]:
    """Centroids (world x, y) of the 8-connected components, label order."""
    labels, n = ndimage.label(k.cells, structure=_CONN8)
    if n == 0:
        return []
    geom = k.geom
    out = []
    for row_c, col_c in ndimage.center_of_mass(k.cells, labels, range(1, n + 1)):
        x = geom.origin_x + (col_c + 0.5) * geom.cell_dx
        y = geom.origin_y + (row_c + 0.5) * geom.cell_dy
        out.append((x, y))
    return out


def _render_kernel(
    geom: GridGeometry,
    cx: float,
    cy: float,
    psi: float,
    sigma_along: float,
    sigma_across: float,
) -> np.ndarray:
    """Peak-1 anisotropic Gaussian at (cx, cy), principal axis along psi."""
    xs, ys = geom.centers_xy()
    u = xs - cx
    v = ys - cy
    a = u * math.cos(psi) + v * math.sin(psi)
    b = -u * math.sin(psi) + v * math.cos(psi)
    return np.exp(
        -(a * a) / (2.0 * sigma_along * sigma_along)
        - (b * b) / (2.0 * sigma_across * sigma_across)
    )


def kernel_sigmas(wind: WindState, t: float, gamma: float, calm_threshold: float) -> tuple[float, float]:
    """(sigma_along, sigma_across) in meters for horizon t."""
    if wind.speed < calm_threshold:
        s = CALM_SIGMA_RATE * t
        return s, s
    drift_dist = gamma * wind.speed * t
    return SIGMA_ALONG_FACTOR * drift_dist, SIGMA_ACROSS_FACTOR * drift_dist


def predict(
    k: BinaryTargetGrid,
    wind: WindState,
    t: float,
    gamma: float,
    calm_threshold: float = 0.1,
    combine: str = "max",
) -> PredictedGrid:
    """Predicted occupancy heatmap at horizon t seconds.

    Each component centroid is shifted by the drift over t and rendered as a
    Gaussian kernel with peak 1; overlaps combine per-cell (max by default).
    At t=0 the kernels degenerate to single marked centroid cells.
    """
    if t < 0:
        raise ValueError("prediction horizon must be >= 0")
    if combine not in ("max", "sum"):
        raise ValueError("combine must be 'max' or 'sum'")
    geom = k.geom
    values = np.zeros((geom.rows, geom.cols), dtype=np.float64)
    centroids = component_centroids(k)
    if not centroids:
        return PredictedGrid(geom=geom, values=values, horizon_s=t, wind=wind)
    dx, dy = drift_step(wind, gamma, t)
    if t == 0.0:
        for cx, cy in centroids:
            if geom.in_bounds_point(cx, cy):
                i, j = geom.cell_of(cx, cy)
                values[i, j] = 1.0
        return PredictedGrid(geom=geom, values=values, horizon_s=t, wind=wind)
    s_along, s_across = kernel_sigmas(wind, t, gamma, calm_threshold)
    for cx, cy in centroids:
        kern = _render_kernel(geom, cx + dx, cy + dy, wind.direction, s_along, s_across)
        if combine == "max":
            np.maximum(values, kern, out=values)
        else:
            values += kern
    if combine == "sum":
        np.clip(values, 0.0, 1.0, out=values)
    return PredictedGrid(geom=geom, values=values, horizon_s=t, wind=wind)


# -- synthetic dataset export ---------------------------------------------


def random_instance(config: ScenarioConfig, rng: np.random.Generator):
    """One random (binary grid, wind, horizon) dataset sample."""
    geom = config.geometry()
    n = int(rng.integers(1, config.dataset_max_targets + 1))
    cells = np.zeros((geom.rows, geom.cols), dtype=np.uint8)
    for _ in range(n):
        x = rng.uniform(0.0, config.map_width_m)
        y = rng.uniform(0.0, config.map_height_m)
        i, j = geom.cell_of(min(x, config.map_width_m - 1e-9), min(y, config.map_height_m - 1e-9))
        cells[i, j] = 1
    speed = rng.uniform(*config.dataset_speed_range)
    direction = rng.uniform(-math.pi, math.pi)
    t = rng.uniform(*config.dataset_horizon_range)
    return BinaryTargetGrid(geom=geom, cells=cells), WindState(speed, direction), t, n


def generate_dataset(config: ScenarioConfig, n_samples: int, seed: int, out_dir) -> Path:
    """Write n_samples (input grid, wind+horizon, output grid) triples.

    Layout: one directory per sample with input.csv (0/1), params.txt
    (v_x,v_y,t on one line), output.csv (floats); manifest.txt lists the
    generator seed and the sample directories. Deterministic per seed.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be > 0")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    names = []
    for idx in range(n_samples):
        k, wind, t, _ = random_instance(config, rng)
        pred = predict(
            k, wind, t, config.gamma, config.calm_wind_threshold, config.kernel_combine
        )
        name = f"sample_{idx:05d}"
        d = out / name
        d.mkdir(exist_ok=True)
        with open(d / "input.csv", "w", encoding="utf-8") as fh:
            for row in k.cells:
                fh.write(",".join(str(int(v)) for v in row) + "\n")
        with open(d / "params.txt", "w", encoding="utf-8") as fh:
            fh.write(f"{repr(wind.vx)},{repr(wind.vy)},{repr(t)}\n")
        with open(d / "output.csv", "w", encoding="utf-8") as fh:
            for row in pred.values:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        names.append(name)
    with open(out / "manifest.txt", "w", encoding="utf-8") as fh:
        fh.write(f"seed = {seed}\n")
        for name in names:
            fh.write(name + "\n")
    return out
