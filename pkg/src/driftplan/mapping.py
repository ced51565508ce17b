"""Dynamic occupancy grid: Bayesian estimation step plus drift-compensation
prediction step.

The grid stores log-odds; probabilities are clamped to [p_low, p_high] after
every update. The prediction step accumulates sub-cell drift in fractional
residuals (r_x, r_y) and shifts occupied mass by whole cells only when a
residual crosses half a cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .config import ScenarioConfig
from .geometry import GridGeometry
from .sensors import Detection, SensorModelParams, fov_cell_indices, in_fov
from .world import Pose, WindState, drift_step


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def positive_sensor_model(r: float, cell_dist: float, params: SensorModelParams) -> float:
    """Detection model: range sigmoid times a Gaussian falloff with distance
    from the detection; the Gaussian std is the localization error 0.0012 r^2.

    At r = 0 the Gaussian degenerates: the sigmoid value applies only at
    cell_dist = 0 and the model is 0 elsewhere.
    """
    if r < 0 or cell_dist < 0:
        raise ValueError("r and cell_dist must be >= 0")
    sig = 1.0 / (1.0 + math.exp(params.a * (r - params.d)))
    sigma = _kernels._py.SIGMA_COEFF * r * r
    if sigma == 0.0:
        return sig if cell_dist == 0.0 else 0.0
    return sig * math.exp(-(cell_dist * cell_dist) / (2.0 * sigma * sigma))


def negative_sensor_model(r: float, params: SensorModelParams) -> float:
    """Free-space model: sigmoid in range, 0.5 (no information) at r = d_prime."""
    if r < 0:
        raise ValueError("r must be >= 0")
    return 1.0 / (1.0 + math.exp(params.a_prime * (r - params.d_prime)))


@dataclass
class OccupancyGrid:
    geom: GridGeometry
    p_low: float = 0.15
    p_high: float = 0.9
    log_odds: np.ndarray = field(init=False)
    residual_x: float = field(init=False, default=0.0)  # fractional cells
    residual_y: float = field(init=False, default=0.0)

    def __post_init__(self):
        self.log_odds = np.zeros((self.geom.rows, self.geom.cols), dtype=np.float64)

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> "OccupancyGrid":
        return cls(geom=config.geometry(), p_low=config.p_low, p_high=config.p_high)

    @property
    def lo_min(self) -> float:
        return logit(self.p_low)

    @property
    def lo_max(self) -> float:
        return logit(self.p_high)

    def probabilities(self) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.log_odds))

    def copy(self) -> "OccupancyGrid":
        g = OccupancyGrid(geom=self.geom, p_low=self.p_low, p_high=self.p_high)
        g.log_odds = self.log_odds.copy()
        g.residual_x = self.residual_x
        g.residual_y = self.residual_y
        return g

    # -- estimation step -------------------------------------------------

    def update_estimation(
        self, detections: list[Detection], pose: Pose, params: SensorModelParams
    ) -> None:
        """Fuse detections and free-space evidence observed from pose.

        Each detection adds positive-model log odds to the cells where the
        model exceeds p_low (applied sequentially in detection order); every
        other fov cell gets the free-space model at its range. One clamp pass
        runs at the end.
        """
        impl = _kernels.impl
        occupied = np.zeros(self.log_odds.shape, dtype=bool)
        for det in detections:
            if not in_fov(pose, (det.x, det.y), params):
                raise ValueError(
                    f"detection at ({det.x:.2f}, {det.y:.2f}) is outside the fov of the pose"
                )
            ii, jj = impl.apply_detection_kernel(
                self.log_odds,
                self.geom.cell_dx,
                self.geom.cell_dy,
                self.geom.origin_x,
                self.geom.origin_y,
                det.x,
                det.y,
                det.range,
                params.a,
                params.d,
                self.p_low,
            )
            occupied[ii, jj] = True
        ii, jj, rr = fov_cell_indices(self.geom, pose, params)
        if ii.size:
            impl.negative_update(
                self.log_odds, ii, jj, rr, occupied, params.a_prime, params.d_prime
            )
        impl.clamp_log_odds(self.log_odds, self.lo_min, self.lo_max)

    # -- prediction step -------------------------------------------------

    def update_prediction(self, wind: WindState, dt: float, config: ScenarioConfig) -> None:
        """Compensate target drift: accumulate residuals, shift by whole cells.

        The integer shift is extracted so the remaining residual stays in
        (-0.5, 0.5]. With zero drift (or a sub-cell residual) the grid is
        left bit-identical.
        """
        if dt <= 0:
            raise ValueError("dt must be > 0")
        dx, dy = drift_step(wind, config.gamma, dt)
        self.residual_x += dx / self.geom.cell_dx
        self.residual_y += dy / self.geom.cell_dy
        s_col = int(math.ceil(self.residual_x - 0.5))  # shift in columns (x)
        s_row = int(math.ceil(self.residual_y - 0.5))  # shift in rows (y)
        self.residual_x -= s_col
        self.residual_y -= s_row
        if s_col == 0 and s_row == 0:
            return
        _kernels.impl.predict_shift_blend(
            self.log_odds,
            s_row,
            s_col,
            config.alpha,
            config.beta,
            self.p_low,
            self.lo_min,
            self.lo_max,
        )

    # -- forward-simulation update (planner) -----------------------------

    def expected_measurement_update(self, pose: Pose, params: SensorModelParams) -> None:
        """Most-likely-measurement update used when evaluating candidate paths."""
        _kernels.impl.expected_measurement_update(
            self.log_odds,
            self.geom.cell_dx,
            self.geom.cell_dy,
            self.geom.origin_x,
            self.geom.origin_y,
            pose.x,
            pose.y,
            pose.psi,
            params.max_range,
            params.horizontal_fov / 2.0,
            params.a,
            params.d,
            params.a_prime,
            params.d_prime,
            self.lo_min,
            self.lo_max,
        )

    def mean_entropy(self) -> float:
        """Mean Shannon entropy of the grid, in bits per cell."""
        return _kernels.impl.mean_entropy_bits(self.log_odds)


def mean_entropy(grid: OccupancyGrid) -> float:
    return grid.mean_entropy()


# -- snapshot export ------------------------------------------------------


def to_csv_text(grid: OccupancyGrid) -> str:
    """Raw probabilities as CSV, one row per grid row; repr() floats so the
    round-trip through from_csv_text is bit-exact."""
    p = grid.probabilities()
    return "\n".join(",".join(repr(float(v)) for v in row) for row in p) + "\n"


def from_csv_text(text: str) -> np.ndarray:
    rows = [
        [float(v) for v in line.split(",")] for line in text.strip().split("\n") if line
    ]
    return np.array(rows, dtype=np.float64)


def pgm_text(
    p: np.ndarray,
    origin_x: float,
    origin_y: float,
    cell_dx: float,
    cell_dy: float,
    timestamp_s: float = 0.0,
) -> str:
    """Plain (P2) portable graymap of a probability array scaled to 0..255.

    A comment line carries the metadata: origin, cell size and timestamp.
    """
    scaled = np.rint(np.asarray(p, dtype=np.float64) * 255.0).astype(int)
    rows, cols = scaled.shape
    lines = [
        "P2",
        f"# origin={origin_x!r},{origin_y!r} cell={cell_dx!r},{cell_dy!r} t={timestamp_s!r}",
        f"{cols} {rows}",
        "255",
    ]
    for row in scaled:
        lines.append(" ".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def to_pgm_text(grid: OccupancyGrid, timestamp_s: float = 0.0) -> str:
    geom = grid.geom
    return pgm_text(
        grid.probabilities(),
        geom.origin_x,
        geom.origin_y,
        geom.cell_dx,
        geom.cell_dy,
        timestamp_s,
    )
