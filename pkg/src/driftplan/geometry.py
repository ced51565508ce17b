"""Grid geometry and angle helpers shared by mapping, prediction and planning."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = math.remainder(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


def wrap_angle_array(a: np.ndarray) -> np.ndarray:
    r = np.remainder(np.asarray(a, dtype=float) + math.pi, TWO_PI) - math.pi
    # remainder maps the upper boundary to -pi; keep the (-pi, pi] convention
    return np.where(r == -math.pi, math.pi, r)


@dataclass(frozen=True)
class GridGeometry:
    """Discretization of a rectangular map area into (rows x cols) cells.

    Row index i runs along y, column index j along x. Cell (i, j) has its
    center at (origin_x + (j + 0.5) * cell_dx, origin_y + (i + 0.5) * cell_dy).
    """

    rows: int
    cols: int
    cell_dx: float
    cell_dy: float
    origin_x: float = 0.0
    origin_y: float = 0.0

    @property
    def width_m(self) -> float:
        return self.cols * self.cell_dx

    @property
    def height_m(self) -> float:
        return self.rows * self.cell_dy

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (
            self.origin_x + (j + 0.5) * self.cell_dx,
            self.origin_y + (i + 0.5) * self.cell_dy,
        )

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """Cell index containing a point; no bounds check."""
        j = int(math.floor((x - self.origin_x) / self.cell_dx))
        i = int(math.floor((y - self.origin_y) / self.cell_dy))
        return i, j

    def in_bounds_cell(self, i: int, j: int) -> bool:
        return 0 <= i < self.rows and 0 <= j < self.cols

    def in_bounds_point(self, x: float, y: float) -> bool:
        return (
            self.origin_x <= x <= self.origin_x + self.width_m
            and self.origin_y <= y <= self.origin_y + self.height_m
        )

    def clamp_point(self, x: float, y: float, margin: float = 0.0) -> tuple[float, float]:
        x = min(max(x, self.origin_x + margin), self.origin_x + self.width_m - margin)
        y = min(max(y, self.origin_y + margin), self.origin_y + self.height_m - margin)
        return x, y

    def centers_xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays (rows x cols) of cell-center x and y coordinates."""
        xs = self.origin_x + (np.arange(self.cols) + 0.5) * self.cell_dx
        ys = self.origin_y + (np.arange(self.rows) + 0.5) * self.cell_dy
        return np.broadcast_to(xs, (self.rows, self.cols)), np.broadcast_to(
            ys[:, None], (self.rows, self.cols)
        )

    def same_shape(self, other: "GridGeometry") -> bool:
        return self.rows == other.rows and self.cols == other.cols
