"""Budgeted utility planning over candidate Bezier trajectories.

Utility of a candidate = entropy term (map entropy change under forward
simulation) + w * tracking term (fov-averaged function of the predicted
target heatmap), maximized over a heading fan. Five strategies: full-horizon
tree search, receding horizon (execute 3 of 5 waypoints), final-pose greedy,
lawnmower and random.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .mapping import OccupancyGrid
from .predictor import BinaryTargetGrid, PredictedGrid, binarize, predict
from .sensors import SensorModelParams, fov_cell_indices
from .trajectory import Trajectory, fan_candidate, lawnmower_trajectory
from .world import Pose, WindState

RECEDING_EXECUTE_WAYPOINTS = 3


@dataclass(frozen=True)
class UtilityBreakdown:
    entropy_term: float
    tracking_term: float
    w: float

    @property
    def total(self) -> float:
        return self.entropy_term + self.w * self.tracking_term


@dataclass(frozen=True)
class CandidateEval:
    index: int
    heading_change_deg: float
    breakdown: UtilityBreakdown
    # selection score; equals breakdown.total except in depth-2 lookahead
    score: float


@dataclass
class PlanResult:
    trajectory: Trajectory
    chosen_index: int
    evals: tuple[CandidateEval, ...]
    eval_steps: int  # forward-simulated steps, drives the replanning stall model
    wall_s: float


def weight_schedule(mode: str, value: float, t_now: float, budget_s: float) -> float:
    """Tracking weight at mission time t_now."""
    if not 0 <= t_now <= budget_s:
        raise ValueError("t_now must lie in [0, budget]")
    if mode == "constant":
        return value
    if mode == "linear_decay":
        return value * (1.0 - t_now / budget_s)
    raise ValueError(f"unknown weight mode {mode!r}")


def candidate_paths(pose: Pose, config: ScenarioConfig) -> list[Trajectory]:
    """The heading-fan candidates (default 7), truncated at map bounds."""
    geom = config.geometry()
    return [fan_candidate(pose, deg, config, geom) for deg in config.heading_fan_deg]


def forward_simulate(
    snapshot: OccupancyGrid,
    traj: Trajectory,
    wind: WindState,
    config: ScenarioConfig,
    params: SensorModelParams | None = None,
) -> OccupancyGrid:
    """Step a grid copy along the trajectory with most-likely measurements.

    Mutates and returns the snapshot; callers must pass a copy of the live
    map. Each dt step applies the drift prediction (when enabled) and then an
    expected-measurement update at the trajectory pose.
    """
    if params is None:
        params = SensorModelParams.from_config(config)
    n = int(math.floor(traj.duration / config.dt + 1e-9))
    for k in range(1, n + 1):
        if config.prediction_step:
            snapshot.update_prediction(wind, config.dt, config)
        pose = traj.pose_at(k * config.dt)
        snapshot.expected_measurement_update(pose, params)
    return snapshot


def tracking_times(traj: Trajectory, config: ScenarioConfig) -> list[float]:
    """Prediction-step times along the trajectory (one per interval)."""
    ts = []
    k = 1
    while k * config.prediction_interval_s <= traj.duration + 1e-9:
        ts.append(k * config.prediction_interval_s)
        k += 1
    if not ts and traj.duration > 0:
        ts = [traj.duration]
    return ts


def tracking_utility(
    traj: Trajectory,
    predictions: list[PredictedGrid],
    config: ScenarioConfig,
    params: SensorModelParams | None = None,
) -> float:
    """Mean over prediction steps of the fov-averaged redetection reward.

    Literal form: mean of exp(-2 p); complementary form: mean of 1 - exp(-2 p).
    """
    times = tracking_times(traj, config)
    if len(predictions) != len(times):
        raise ValueError(f"expected {len(times)} predictions, got {len(predictions)}")
    if not times:
        return 0.0
    if params is None:
        params = SensorModelParams.from_config(config)
    geom = predictions[0].geom
    total = 0.0
    for t, pred in zip(times, predictions):
        pose = traj.pose_at(t)
        ii, jj, _ = fov_cell_indices(geom, pose, params)
        if ii.size == 0:
            continue
        decays = np.exp(-2.0 * pred.values[ii, jj])
        j_val = float(np.mean(decays))
        if config.tracking_form == "complementary":
            j_val = 1.0 - j_val
        total += j_val
    return total / len(times)


class PredictionCache:
    """Per-plan cache: one binarization, one predicted grid per horizon."""

    def __init__(self, grid: OccupancyGrid, wind: WindState, config: ScenarioConfig):
        self.binary: BinaryTargetGrid = binarize(grid)
        self.wind = wind
        self.config = config
        self._grids: dict[float, PredictedGrid] = {}

    def at(self, horizon_s: float) -> PredictedGrid:
        key = round(horizon_s, 9)
        if key not in self._grids:
            c = self.config
            self._grids[key] = predict(
                self.binary, self.wind, horizon_s, c.gamma, c.calm_wind_threshold, c.kernel_combine
            )
        return self._grids[key]


def utility(
    traj: Trajectory,
    grid: OccupancyGrid,
    wind: WindState,
    t_now: float,
    config: ScenarioConfig,
    params: SensorModelParams | None = None,
    cache: PredictionCache | None = None,
) -> UtilityBreakdown:
    """Full-trajectory utility from the live grid (left unmodified)."""
    if params is None:
        params = SensorModelParams.from_config(config)
    if cache is None:
        cache = PredictionCache(grid, wind, config)
    w = weight_schedule(config.weight_mode, config.weight_value, t_now, config.budget_s)
    h_prior = grid.mean_entropy()
    posterior = forward_simulate(grid.copy(), traj, wind, config, params)
    entropy_term = h_prior - posterior.mean_entropy()
    if config.entropy_form == "literal":
        entropy_term = -entropy_term
    predictions = [cache.at(t) for t in tracking_times(traj, config)]
    tracking_term = tracking_utility(traj, predictions, config, params)
    return UtilityBreakdown(entropy_term=entropy_term, tracking_term=tracking_term, w=w)


def _sim_steps(traj: Trajectory, config: ScenarioConfig) -> int:
    return int(math.floor(traj.duration / config.dt + 1e-9))


def _select(evals: list[CandidateEval]) -> CandidateEval:
    """Argmax by score; ties broken by smaller |heading change|, then index."""
    best = evals[0]
    for e in evals[1:]:
        if e.score > best.score:
            best = e
        elif e.score == best.score and abs(e.heading_change_deg) < abs(
            best.heading_change_deg
        ):
            best = e
    return best


def _greedy_eval(
    grid: OccupancyGrid,
    cand: Trajectory,
    wind: WindState,
    t_now: float,
    config: ScenarioConfig,
    params: SensorModelParams,
    cache: PredictionCache,
) -> UtilityBreakdown:
    """Myopic utility: one expected measurement and one prediction, both at
    the candidate's final pose."""
    w = weight_schedule(config.weight_mode, config.weight_value, t_now, config.budget_s)
    final = cand.pose_at(cand.duration)
    h_prior = grid.mean_entropy()
    snap = grid.copy()
    snap.expected_measurement_update(final, params)
    entropy_term = h_prior - snap.mean_entropy()
    if config.entropy_form == "literal":
        entropy_term = -entropy_term
    pred = cache.at(cand.duration if cand.duration > 0 else config.prediction_interval_s)
    ii, jj, _ = fov_cell_indices(grid.geom, final, params)
    if ii.size:
        j_val = float(np.mean(np.exp(-2.0 * pred.values[ii, jj])))
        if config.tracking_form == "complementary":
            j_val = 1.0 - j_val
    else:
        j_val = 0.0
    return UtilityBreakdown(entropy_term=entropy_term, tracking_term=j_val, w=w)


def plan(
    grid: OccupancyGrid,
    pose: Pose,
    wind: WindState,
    t_now: float,
    config: ScenarioConfig,
    rng: np.random.Generator | None = None,
) -> PlanResult:
    """Produce the next trajectory under the configured strategy."""
    t0 = time.perf_counter()
    params = SensorModelParams.from_config(config)
    kind = config.planner_kind

    if kind == "lawnmower":
        traj = lawnmower_trajectory(pose, config, config.geometry())
        return PlanResult(traj, 0, (), 0, time.perf_counter() - t0)

    cands = candidate_paths(pose, config)

    if kind == "random":
        if rng is None:
            raise ValueError("the random planner requires an rng")
        idx = int(rng.integers(len(cands)))
        return PlanResult(cands[idx], idx, (), 0, time.perf_counter() - t0)

    cache = PredictionCache(grid, wind, config)
    evals: list[CandidateEval] = []
    steps = 0

    if kind == "greedy":
        for i, c in enumerate(cands):
            br = _greedy_eval(grid, c, wind, t_now, config, params, cache)
            evals.append(CandidateEval(i, c.heading_change_deg, br, br.total))
            steps += 1
    elif kind in ("tree_search", "receding_horizon"):
        for i, c in enumerate(cands):
            br = utility(c, grid, wind, t_now, config, params, cache)
            score = br.total
            steps += _sim_steps(c, config)
            if config.tree_depth == 2:
                bonus, extra = _best_second_level(grid, c, wind, t_now, config, params)
                score += bonus
                steps += extra
            evals.append(CandidateEval(i, c.heading_change_deg, br, score))
    else:
        raise ValueError(f"unknown planner kind {kind!r}")

    chosen = _select(evals)
    traj = cands[chosen.index]
    if kind == "receding_horizon":
        traj = traj.truncated_at_waypoint(min(RECEDING_EXECUTE_WAYPOINTS, config.n_waypoints))
    return PlanResult(traj, chosen.index, tuple(evals), steps, time.perf_counter() - t0)


def _best_second_level(
    grid: OccupancyGrid,
    first: Trajectory,
    wind: WindState,
    t_now: float,
    config: ScenarioConfig,
    params: SensorModelParams,
) -> tuple[float, int]:
    """Depth-2 lookahead: best utility of a follow-on fan from the first
    candidate's end, evaluated on the forward-simulated posterior. Returns
    (best total, forward-simulated step count)."""
    posterior = forward_simulate(grid.copy(), first, wind, config, params)
    end = first.pose_at(first.duration)
    t2 = min(t_now + first.duration, config.budget_s)
    cache2 = PredictionCache(posterior, wind, config)
    best = -math.inf
    steps = _sim_steps(first, config)
    for c in candidate_paths(end, config):
        br = utility(c, posterior, wind, t2, config, params, cache2)
        best = max(best, br.total)
        steps += _sim_steps(c, config)
    return best, steps
