"""Scenario configuration: defaults, validation, file round-trip and RNG streams.

The config file is a plain-text INI-style format (sections of key = value
lines, see docs/config-format.md). Serialization is canonical: fixed section
and key order, floats written with repr() so that parse -> serialize is
byte-identical.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from configparser import ConfigParser
from dataclasses import dataclass

import numpy as np

PLANNER_KINDS = ("tree_search", "receding_horizon", "greedy", "lawnmower", "random")
WEIGHT_MODES = ("constant", "linear_decay")

# Fixed substream indices so adding a consumer never perturbs the others.
STREAMS = {"wind": 0, "targets": 1, "perception": 2, "planner": 3, "scenario": 4}


class ConfigError(ValueError):
    """Raised when a configuration fails invariant validation."""


@dataclass(frozen=True)
class ScenarioConfig:
    # map
    map_width_m: float = 100.0
    map_height_m: float = 100.0
    cell_dx: float = 1.0
    cell_dy: float = 1.0
    # targets
    n_targets: int = 8
    target_noise_std: float = 0.02  # per-step position jitter, meters
    target_positions: tuple[tuple[float, float], ...] | None = None
    # wind (first-order Gauss-Markov around the configured means)
    mean_wind_speed: float = 8.0
    mean_wind_dir: float = 0.0
    wind_time_constant: float = 20.0
    wind_speed_noise_std: float = 0.5  # m/s per sqrt(s)
    wind_dir_noise_std: float = 0.05  # rad per sqrt(s)
    wind_speed_range: tuple[float, float] = (6.0, 10.0)  # Monte-Carlo draw range
    # drift
    gamma: float = 0.03  # drift speed / wind speed
    # asv
    asv_speed: float = 1.5
    asv_start_x: float = 50.0
    asv_start_y: float = 50.0
    asv_start_psi: float = 0.0
    # sensor
    a: float = 0.1
    d: float = 40.0
    a_prime: float = -0.018
    d_prime: float = 35.0
    max_range: float = 35.0
    horizontal_fov: float = math.radians(72.0)
    miss_rate: float = 0.0
    # mapping
    p_low: float = 0.15
    p_high: float = 0.9
    alpha: float = 0.9
    beta: float = 0.1
    prediction_step: bool = True
    # predictor
    calm_wind_threshold: float = 0.1
    kernel_combine: str = "max"  # or "sum"
    dataset_speed_range: tuple[float, float] = (0.0, 12.0)
    dataset_horizon_range: tuple[float, float] = (0.0, 30.0)
    dataset_max_targets: int = 19
    # planner
    planner_kind: str = "tree_search"
    planning_horizon_s: float = 25.0
    heading_fan_deg: tuple[float, ...] = (-60.0, -40.0, -20.0, 0.0, 20.0, 40.0, 60.0)
    n_waypoints: int = 5
    weight_mode: str = "linear_decay"
    weight_value: float = 5.0
    tracking_form: str = "literal"  # or "complementary"
    entropy_form: str = "reduction"  # or "literal"
    prediction_interval_s: float = 5.0
    tree_depth: int = 1
    replan_cost_per_step_s: float = 0.0  # stall charged per forward-simulated step
    max_curvature: float = 0.5
    lawnmower_spacing_factor: float = 0.8
    # mission
    budget_s: float = 250.0
    dt: float = 1.0
    # metrics
    mse_sigma_cells: float = 2.0
    # output
    snapshot_every_s: float = 0.0
    # rng
    rng_seed: int = 0

    def geometry(self):
        from .geometry import GridGeometry

        return GridGeometry(
            rows=int(round(self.map_height_m / self.cell_dy)),
            cols=int(round(self.map_width_m / self.cell_dx)),
            cell_dx=self.cell_dx,
            cell_dy=self.cell_dy,
        )

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)


# Section layout of the config file; order defines the canonical serialization.
_SECTIONS: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("map", ("map_width_m", "map_height_m", "cell_dx", "cell_dy")),
    ("targets", ("n_targets", "target_noise_std", "target_positions")),
    (
        "wind",
        (
            "mean_wind_speed",
            "mean_wind_dir",
            "wind_time_constant",
            "wind_speed_noise_std",
            "wind_dir_noise_std",
            "wind_speed_range",
        ),
    ),
    ("drift", ("gamma",)),
    ("asv", ("asv_speed", "asv_start_x", "asv_start_y", "asv_start_psi")),
    (
        "sensor",
        ("a", "d", "a_prime", "d_prime", "max_range", "horizontal_fov", "miss_rate"),
    ),
    ("mapping", ("p_low", "p_high", "alpha", "beta", "prediction_step")),
    (
        "predictor",
        (
            "calm_wind_threshold",
            "kernel_combine",
            "dataset_speed_range",
            "dataset_horizon_range",
            "dataset_max_targets",
        ),
    ),
    (
        "planner",
        (
            "planner_kind",
            "planning_horizon_s",
            "heading_fan_deg",
            "n_waypoints",
            "weight_mode",
            "weight_value",
            "tracking_form",
            "entropy_form",
            "prediction_interval_s",
            "tree_depth",
            "replan_cost_per_step_s",
            "max_curvature",
            "lawnmower_spacing_factor",
        ),
    ),
    ("mission", ("budget_s", "dt")),
    ("metrics", ("mse_sigma_cells",)),
    ("output", ("snapshot_every_s",)),
    ("run", ("rng_seed",)),
)

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def _fmt(name: str, value) -> str:
    if name == "target_positions":
        if value is None:
            return ""
        return ";".join(f"{repr(x)},{repr(y)}" for x, y in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(name: str, text: str):
    text = text.strip()
    if name == "target_positions":
        if not text:
            return None
        pts = []
        for part in text.split(";"):
            x, y = part.split(",")
            pts.append((float(x), float(y)))
        return tuple(pts)
    if name in ("wind_speed_range", "dataset_speed_range", "dataset_horizon_range"):
        lo, hi = text.split(",")
        return (float(lo), float(hi))
    if name == "heading_fan_deg":
        return tuple(float(v) for v in text.split(","))
    typ = _FIELD_TYPES[name]
    if typ in (int, "int"):
        return int(text)
    if typ in (float, "float"):
        return float(text)
    if typ in (bool, "bool"):
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {text!r}")
    return text


def serialize(config: ScenarioConfig) -> str:
    lines = []
    for section, keys in _SECTIONS:
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_fmt(key, getattr(config, key))}")
        lines.append("")
    return "\n".join(lines)


def parse(text: str, overrides: dict[str, str] | None = None) -> ScenarioConfig:
    """Parse config text, apply key=value overrides, validate."""
    cp = ConfigParser()
    cp.optionxform = str  # keep key case
    cp.read_string(text)
    known = set(_FIELD_TYPES)
    values = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            if key not in known:
                raise ConfigError(f"unknown config key {key!r} in section [{section}]")
            values[key] = _parse_value(key, raw)
    if overrides:
        for key, raw in overrides.items():
            if key not in known:
                raise ConfigError(f"unknown override key {key!r}")
            values[key] = _parse_value(key, raw)
    config = ScenarioConfig(**values)
    require_valid(config)
    return config


def load(path, overrides: dict[str, str] | None = None) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read(), overrides)


def save(config: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(config))


def config_hash(config: ScenarioConfig) -> str:
    return hashlib.sha256(serialize(config).encode()).hexdigest()


def validate(config: ScenarioConfig) -> list[str]:
    """Check every invariant; returns one message per violation (empty if valid)."""
    v = []

    def check(ok: bool, field: str, rule: str):
        if not ok:
            v.append(f"{field}: {rule}")

    c = config
    check(c.map_width_m > 0, "map_width_m", "must be > 0")
    check(c.map_height_m > 0, "map_height_m", "must be > 0")
    check(c.cell_dx > 0, "cell_dx", "must be > 0")
    check(c.cell_dy > 0, "cell_dy", "must be > 0")
    if c.cell_dx > 0:
        ratio = c.map_width_m / c.cell_dx
        check(abs(ratio - round(ratio)) < 1e-9, "map_width_m", "must be an exact multiple of cell_dx")
    if c.cell_dy > 0:
        ratio = c.map_height_m / c.cell_dy
        check(abs(ratio - round(ratio)) < 1e-9, "map_height_m", "must be an exact multiple of cell_dy")
    check(c.n_targets >= 0, "n_targets", "must be >= 0")
    check(c.target_noise_std >= 0, "target_noise_std", "must be >= 0")
    if c.target_positions is not None:
        check(len(c.target_positions) == c.n_targets, "target_positions", "must list n_targets points")
        for x, y in c.target_positions:
            check(
                0 <= x <= c.map_width_m and 0 <= y <= c.map_height_m,
                "target_positions",
                "must be inside map bounds",
            )
    check(c.mean_wind_speed >= 0, "mean_wind_speed", "must be >= 0")
    check(c.wind_time_constant > 0, "wind_time_constant", "must be > 0")
    check(c.wind_speed_noise_std >= 0, "wind_speed_noise_std", "must be >= 0")
    check(c.wind_dir_noise_std >= 0, "wind_dir_noise_std", "must be >= 0")
    check(c.wind_speed_range[0] <= c.wind_speed_range[1], "wind_speed_range", "low must be <= high")
    check(c.gamma > 0, "gamma", "gamma>0")
    check(c.asv_speed > 0, "asv_speed", "must be > 0")
    check(
        0 <= c.asv_start_x <= c.map_width_m and 0 <= c.asv_start_y <= c.map_height_m,
        "asv_start_x",
        "start pose must be inside map bounds",
    )
    check(c.max_range > 0, "max_range", "must be > 0")
    check(0 < c.horizontal_fov <= 2 * math.pi, "horizontal_fov", "must be in (0, 2*pi]")
    check(0 <= c.miss_rate < 1, "miss_rate", "must be in [0, 1)")
    check(0 < c.p_low < 0.5, "p_low", "0 < p_low < 0.5")
    check(0.5 < c.p_high < 1, "p_high", "0.5 < p_high < 1")
    check(0 < c.alpha <= 1, "alpha", "alpha in (0,1]")
    check(abs(c.alpha + c.beta - 1.0) < 1e-12, "alpha", "alpha+beta=1")
    check(c.calm_wind_threshold >= 0, "calm_wind_threshold", "must be >= 0")
    check(c.kernel_combine in ("max", "sum"), "kernel_combine", "must be 'max' or 'sum'")
    check(1 <= c.dataset_max_targets < 20, "dataset_max_targets", "must be in [1, 19]")
    check(c.planner_kind in PLANNER_KINDS, "planner_kind", f"must be one of {PLANNER_KINDS}")
    check(c.planning_horizon_s > 0, "planning_horizon_s", "must be > 0")
    check(len(c.heading_fan_deg) >= 1, "heading_fan_deg", "must be nonempty")
    check(c.n_waypoints >= 3, "n_waypoints", "must be >= 3")
    check(c.weight_mode in WEIGHT_MODES, "weight_mode", f"must be one of {WEIGHT_MODES}")
    check(c.weight_value >= 0, "weight_value", "must be >= 0")
    check(c.tracking_form in ("literal", "complementary"), "tracking_form", "must be 'literal' or 'complementary'")
    check(c.entropy_form in ("reduction", "literal"), "entropy_form", "must be 'reduction' or 'literal'")
    check(c.prediction_interval_s > 0, "prediction_interval_s", "must be > 0")
    check(c.tree_depth in (1, 2), "tree_depth", "must be 1 or 2")
    check(c.replan_cost_per_step_s >= 0, "replan_cost_per_step_s", "must be >= 0")
    check(c.max_curvature > 0, "max_curvature", "must be > 0")
    check(0 < c.lawnmower_spacing_factor <= 2, "lawnmower_spacing_factor", "must be in (0, 2]")
    check(c.dt > 0, "dt", "dt>0")
    check(c.budget_s >= c.planning_horizon_s, "budget_s", "budget_s >= planning_horizon_s")
    check(c.mse_sigma_cells > 0, "mse_sigma_cells", "must be > 0")
    check(c.snapshot_every_s >= 0, "snapshot_every_s", "must be >= 0")
    return v


def require_valid(config: ScenarioConfig) -> None:
    violations = validate(config)
    if violations:
        raise ConfigError("invalid configuration: " + "; ".join(violations))


def substream(seed: int, name: str) -> np.random.Generator:
    """Named RNG substream: stable under addition of other consumers."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(STREAMS[name],)))


class RngStreams:
    """The per-episode RNG substreams (wind, targets, perception, planner)."""

    def __init__(self, seed: int):
        self.seed = seed
        self.wind = substream(seed, "wind")
        self.targets = substream(seed, "targets")
        self.perception = substream(seed, "perception")
        self.planner = substream(seed, "planner")
