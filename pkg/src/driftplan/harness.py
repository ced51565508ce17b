"""Episode execution: the sense -> estimate -> predict -> plan -> act loop,
and seeded Monte-Carlo sweeps over it."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .config import RngStreams, ScenarioConfig, config_hash, require_valid, substream
from .mapping import OccupancyGrid
from .metrics import MetricSample, Summary, aggregate, mean_detections, mse, truth_grid
from .planner import plan
from .sensors import SensorModelParams, simulate_detections
from .trace import DecisionRecord, EpisodeTrace, SnapshotRecord, StepRecord
from .world import build_world, step_asv, step_targets, step_wind


class HarnessError(RuntimeError):
    pass


def _is_multiple(t: float, period: float) -> bool:
    q = t / period
    return abs(q - round(q)) < 1e-9


def run_episode(config: ScenarioConfig, seed: int, on_decision=None) -> EpisodeTrace:
    """Run one mission of budget_s seconds at dt resolution.

    Per step: sense, fuse the detections (estimation), record metrics against
    the current truth, drift-compensate the map (prediction), replan if the
    current trajectory is done, then advance vehicle and world. Replanning
    can stall the vehicle for eval_steps * replan_cost_per_step_s seconds;
    while stalled the perception pipeline is busy, so no detections are
    produced or fused.

    on_decision, when given, is called with (t, PlanResult) at each replan;
    the returned trace itself carries no wall-clock times.
    """
    require_valid(config)
    geom = config.geometry()
    params = SensorModelParams.from_config(config)
    rngs = RngStreams(seed)
    world = build_world(config, seed, rngs.targets)
    grid = OccupancyGrid.from_config(config)
    trace = EpisodeTrace(
        config_hash=config_hash(config), seed=seed, rows=geom.rows, cols=geom.cols
    )

    traj = None
    traj_elapsed = 0.0
    completed = True
    stall_steps = 0
    det_counts: list[int] = []
    n_steps = int(round(config.budget_s / config.dt))

    for step in range(n_steps):
        t = step * config.dt

        if stall_steps > 0:
            detections = []
        else:
            detections = simulate_detections(world, world.asv, params, config, rngs.perception)
            grid.update_estimation(detections, world.asv, params)
        det_counts.append(len(detections))

        sample = MetricSample(
            t=t,
            H=grid.mean_entropy(),
            mse=mse(grid, truth_grid(world.targets, geom), config.mse_sigma_cells),
            n_detections_step=len(detections),
            mean_detections=mean_detections(det_counts),
        )
        if config.snapshot_every_s > 0 and _is_multiple(t, config.snapshot_every_s):
            trace.snapshots.append(
                SnapshotRecord(
                    t=t, probabilities=tuple(tuple(r) for r in grid.probabilities().tolist())
                )
            )

        if config.prediction_step:
            grid.update_prediction(world.wind, config.dt, config)

        if stall_steps == 0 and (traj is None or (completed and config.planner_kind != "lawnmower")):
            try:
                result = plan(grid, world.asv, world.wind, t, config, rngs.planner)
            except Exception as e:
                raise HarnessError(f"planning failed at t={t} (seed {seed}): {e}") from e
            traj = result.trajectory
            traj_elapsed = 0.0
            completed = traj.duration <= 0.0
            stall_steps = int(round(config.replan_cost_per_step_s * result.eval_steps / config.dt))
            trace.decisions.append(
                DecisionRecord(
                    t=t,
                    chosen_index=result.chosen_index,
                    stall_s=stall_steps * config.dt,
                    candidates=tuple(
                        (
                            e.index,
                            e.heading_change_deg,
                            e.breakdown.entropy_term,
                            e.breakdown.tracking_term,
                            e.breakdown.w,
                            e.breakdown.total,
                        )
                        for e in result.evals
                    ),
                )
            )
            if on_decision is not None:
                on_decision(t, result)

        trace.steps.append(
            StepRecord(
                t=t,
                pose=(world.asv.x, world.asv.y, world.asv.psi),
                wind=(world.wind.speed, world.wind.direction),
                targets=tuple((tg.id, tg.x, tg.y) for tg in world.targets),
                detections=tuple(
                    (d.x, d.y, d.range, d.true_target_id) for d in detections
                ),
                metrics=sample,
            )
        )

        if stall_steps > 0:
            stall_steps -= 1  # vehicle holds position while replanning
        elif traj is not None and not completed:
            traj_elapsed += config.dt
            world.asv, completed = step_asv(world.asv, traj, traj_elapsed)
        world.targets = step_targets(world.targets, world.wind, config, config.dt, rngs.targets)
        world.wind = step_wind(world.wind, config, config.dt, rngs.wind)
        world.clock_s += config.dt

    return trace


def trial_config(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Per-trial scenario variation: mean wind speed drawn uniformly from the
    configured range, mean direction uniform over the circle."""
    rng = substream(seed, "scenario")
    lo, hi = config.wind_speed_range
    speed = float(rng.uniform(lo, hi))
    direction = float(rng.uniform(-math.pi, math.pi))
    return config.replace(mean_wind_speed=speed, mean_wind_dir=direction)


def _run_trial(args: tuple[ScenarioConfig, int]) -> EpisodeTrace:
    config, seed = args
    try:
        return run_episode(trial_config(config, seed), seed)
    except Exception as e:
        raise HarnessError(f"trial with seed {seed} failed: {e}") from e


@dataclass
class MonteCarloResult:
    summary: Summary
    traces: list[EpisodeTrace]
    seeds: list[int]


def run_monte_carlo(
    config: ScenarioConfig, n_trials: int, seed0: int | None = None, workers: int = 1
) -> MonteCarloResult:
    """Run trials with seeds seed0..seed0+n-1 and aggregate their metrics.

    Trials are independent; results are collected in seed order, so the
    summary does not depend on the worker count.
    """
    require_valid(config)
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if seed0 is None:
        seed0 = config.rng_seed
    seeds = list(range(seed0, seed0 + n_trials))
    jobs = [(config, s) for s in seeds]
    if workers <= 1:
        traces = [_run_trial(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            traces = list(ex.map(_run_trial, jobs))
    return MonteCarloResult(summary=aggregate(traces), traces=traces, seeds=seeds)
