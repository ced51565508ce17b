"""Sensor simulation: fov geometry, frame transforms and noisy target detections.

The detector is ideal inside the fov (configurable miss rate); localization
noise is isotropic Gaussian with a range-dependent standard deviation
sigma(r) = 0.0012 r^2 fitted from empirical stereo-localization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .config import ScenarioConfig
from .geometry import GridGeometry, wrap_angle
from .world import Pose, World

SIGMA_COEFF = 0.0012

# Camera-to-body axes permutation for a forward-facing camera
# (camera z = depth maps to body x).
R_BC = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])


@dataclass(frozen=True)
class SensorModelParams:
    a: float = 0.1
    d: float = 40.0
    a_prime: float = -0.018
    d_prime: float = 35.0
    max_range: float = 35.0
    horizontal_fov: float = math.radians(72.0)

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> "SensorModelParams":
        return cls(
            a=config.a,
            d=config.d,
            a_prime=config.a_prime,
            d_prime=config.d_prime,
            max_range=config.max_range,
            horizontal_fov=config.horizontal_fov,
        )


@dataclass(frozen=True)
class Detection:
    x: float
    y: float
    range: float
    true_target_id: int  # logging only; the mapper and planner never see it


def localization_sigma(r: float) -> float:
    """Localization error std (m) at detection range r: 0.0012 r^2."""
    if r < 0:
        raise ValueError("range must be >= 0")
    return SIGMA_COEFF * r * r


def in_fov(pose: Pose, point: tuple[float, float], params: SensorModelParams) -> bool:
    """True iff the point is within range and angular limits (both inclusive)."""
    dx = point[0] - pose.x
    dy = point[1] - pose.y
    r = math.hypot(dx, dy)
    if r > params.max_range:
        return False
    if r == 0.0:
        return True
    bearing = wrap_angle(math.atan2(dy, dx) - pose.psi)
    return abs(bearing) <= params.horizontal_fov / 2.0


def camera_to_global(p_c, pose: Pose) -> np.ndarray:
    """Project a camera-frame point to the global frame at the given pose."""
    c, s = math.cos(pose.psi), math.sin(pose.psi)
    r_z = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return r_z @ (R_BC @ np.asarray(p_c, dtype=float)) + np.array([pose.x, pose.y, 0.0])


def global_to_camera(p_g, pose: Pose) -> np.ndarray:
    """Inverse of camera_to_global."""
    c, s = math.cos(pose.psi), math.sin(pose.psi)
    r_z = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return R_BC.T @ (r_z.T @ (np.asarray(p_g, dtype=float) - np.array([pose.x, pose.y, 0.0])))


def _clamp_into_fov(
    pose: Pose, x: float, y: float, params: SensorModelParams
) -> tuple[float, float, float]:
    """Pull a noisy measurement back inside the fov sector (slightly inward).

    Keeps the contract that every Detection lies in the observing pose's fov
    even when localization noise pushes it past the range or bearing limits.
    """
    eps = 1e-9
    dx, dy = x - pose.x, y - pose.y
    r = math.hypot(dx, dy)
    bearing = wrap_angle(math.atan2(dy, dx) - pose.psi) if r > 0 else 0.0
    half = params.horizontal_fov / 2.0 - eps
    r = min(r, params.max_range - eps)
    bearing = min(max(bearing, -half), half)
    ang = pose.psi + bearing
    return pose.x + r * math.cos(ang), pose.y + r * math.sin(ang), r


def simulate_detections(
    world: World, pose: Pose, params: SensorModelParams, config: ScenarioConfig, rng
) -> list[Detection]:
    """One detection per in-fov target (minus configured misses).

    Measured positions are the true positions plus isotropic Gaussian noise
    with std localization_sigma(true range), then clamped into the fov sector.
    Targets are visited in id order so the draw sequence is reproducible.
    """
    detections = []
    for target in sorted(world.targets, key=lambda t: t.id):
        if not in_fov(pose, (target.x, target.y), params):
            continue
        if config.miss_rate > 0 and rng.uniform() < config.miss_rate:
            continue
        r_true = math.hypot(target.x - pose.x, target.y - pose.y)
        sigma = localization_sigma(r_true)
        mx, my = target.x, target.y
        if sigma > 0:
            mx += rng.normal(0.0, sigma)
            my += rng.normal(0.0, sigma)
        mx, my, r_meas = _clamp_into_fov(pose, mx, my, params)
        detections.append(Detection(x=mx, y=my, range=r_meas, true_target_id=target.id))
    return detections


def fov_cell_indices(geom: GridGeometry, pose: Pose, params: SensorModelParams):
    """(ii, jj, ranges) of grid cells whose centers fall inside the fov."""
    return _kernels.impl.fov_cells(
        geom.rows,
        geom.cols,
        geom.cell_dx,
        geom.cell_dy,
        geom.origin_x,
        geom.origin_y,
        pose.x,
        pose.y,
        pose.psi,
        params.max_range,
        params.horizontal_fov / 2.0,
    )
