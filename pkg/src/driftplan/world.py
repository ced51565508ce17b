"""Ground-truth world state and dynamics: wind process, target drift, ASV motion.

Wind follows a first-order Gauss-Markov (mean-reverting) process in speed and
direction. Floating targets drift with the instantaneous wind at a fixed
ratio gamma of the wind speed, plus optional small process noise. The ASV
tracks its commanded trajectory exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import RngStreams, ScenarioConfig
from .geometry import wrap_angle


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    psi: float  # heading, wrapped to (-pi, pi]

    def __post_init__(self):
        object.__setattr__(self, "psi", wrap_angle(self.psi))


@dataclass(frozen=True)
class WindState:
    speed: float  # m/s, >= 0
    direction: float  # rad, direction the wind blows toward, (-pi, pi]

    def __post_init__(self):
        object.__setattr__(self, "speed", max(0.0, self.speed))
        object.__setattr__(self, "direction", wrap_angle(self.direction))

    @property
    def vx(self) -> float:
        return self.speed * math.cos(self.direction)

    @property
    def vy(self) -> float:
        return self.speed * math.sin(self.direction)


@dataclass(frozen=True)
class TargetState:
    id: int
    x: float
    y: float


@dataclass
class World:
    targets: list[TargetState]
    wind: WindState
    asv: Pose
    clock_s: float = 0.0


def build_world(
    config: ScenarioConfig, seed: int, rng: np.random.Generator | None = None
) -> World:
    """Construct the initial world for (config, seed); bit-reproducible.

    Target spawns are uniform over the map unless the config lists explicit
    positions. The spawn draws come from the 'targets' substream; pass that
    stream in when later target stepping should continue from it.
    """
    from .config import require_valid

    require_valid(config)
    if rng is None:
        rng = RngStreams(seed).targets
    targets = []
    if config.target_positions is not None:
        for k, (x, y) in enumerate(config.target_positions):
            targets.append(TargetState(id=k, x=x, y=y))
    else:
        for k in range(config.n_targets):
            x = rng.uniform(0.0, config.map_width_m)
            y = rng.uniform(0.0, config.map_height_m)
            targets.append(TargetState(id=k, x=x, y=y))
    wind = WindState(speed=config.mean_wind_speed, direction=config.mean_wind_dir)
    asv = Pose(config.asv_start_x, config.asv_start_y, config.asv_start_psi)
    return World(targets=targets, wind=wind, asv=asv, clock_s=0.0)


def step_wind(
    wind: WindState, config: ScenarioConfig, dt: float, rng: np.random.Generator
) -> WindState:
    """Advance the Gauss-Markov wind process by dt.

    Exact discretization of dv = -(v - mean)/tau dt + sigma dW:
    v' = mean + a (v - mean) + N(0, sigma^2 * tau/2 * (1 - a^2)), a = exp(-dt/tau).
    Two independent draws (speed first, then direction) per step; speed is
    clamped at zero and direction wrapped.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    a = math.exp(-dt / config.wind_time_constant)
    var_scale = 0.5 * config.wind_time_constant * (1.0 - a * a)
    speed = config.mean_wind_speed + a * (wind.speed - config.mean_wind_speed)
    if config.wind_speed_noise_std > 0:
        speed += rng.normal(0.0, config.wind_speed_noise_std * math.sqrt(var_scale))
    ddir = a * wrap_angle(wind.direction - config.mean_wind_dir)
    if config.wind_dir_noise_std > 0:
        ddir += rng.normal(0.0, config.wind_dir_noise_std * math.sqrt(var_scale))
    return WindState(speed=max(0.0, speed), direction=wrap_angle(config.mean_wind_dir + ddir))


def drift_step(wind: WindState, gamma: float, dt: float) -> tuple[float, float]:
    """Single-step drift displacement (dx, dy) = gamma * v * (cos, sin)(dir) * dt."""
    return (
        gamma * wind.speed * math.cos(wind.direction) * dt,
        gamma * wind.speed * math.sin(wind.direction) * dt,
    )


def step_targets(
    targets: list[TargetState],
    wind: WindState,
    config: ScenarioConfig,
    dt: float,
    rng: np.random.Generator,
) -> list[TargetState]:
    """Drift every target with the wind; optional per-target process noise.

    Targets may leave the map; they are retained (and become undetectable).
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    dx, dy = drift_step(wind, config.gamma, dt)
    out = []
    for t in targets:
        nx, ny = t.x + dx, t.y + dy
        if config.target_noise_std > 0:
            nx += rng.normal(0.0, config.target_noise_std)
            ny += rng.normal(0.0, config.target_noise_std)
        out.append(replace(t, x=nx, y=ny))
    return out


def step_asv(pose: Pose, traj, elapsed_s: float) -> tuple[Pose, bool]:
    """Pose on the trajectory at elapsed_s; (pose, completed) with clamping at the end."""
    if traj is None or traj.duration <= 0.0:
        return pose, True
    if elapsed_s >= traj.duration:
        return traj.pose_at(traj.duration), True
    return traj.pose_at(max(0.0, elapsed_s)), False
