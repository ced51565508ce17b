import math

import numpy as np
import pytest

from driftplan.config import ScenarioConfig
from driftplan.mapping import OccupancyGrid, logit
from driftplan.planner import (
    CandidateEval,
    PredictionCache,
    UtilityBreakdown,
    _select,
    candidate_paths,
    forward_simulate,
    plan,
    tracking_times,
    tracking_utility,
    utility,
    weight_schedule,
)
from driftplan.predictor import PredictedGrid, predict
from driftplan.sensors import SensorModelParams
from driftplan.trajectory import Trajectory
from driftplan.world import Pose, WindState

CFG = ScenarioConfig()
PARAMS = SensorModelParams.from_config(CFG)
CENTER = Pose(50.0, 50.0, 0.0)
WIND = WindState(8.0, 0.0)


def uniform_grid(cfg=CFG):
    return OccupancyGrid.from_config(cfg)


def straight_traj(x0=50.0, y0=50.0, length=5.0, speed=1.0):
    return Trajectory(
        start_pose=Pose(x0, y0, 0.0),
        speed=speed,
        points=np.array([[x0, y0], [x0 + length, y0]]),
        waypoints=((x0, y0), (x0 + length, y0)),
    )


def test_weight_schedule_endpoints():
    assert weight_schedule("constant", 5.0, 0.0, 250.0) == 5.0
    assert weight_schedule("constant", 5.0, 250.0, 250.0) == 5.0
    assert weight_schedule("linear_decay", 5.0, 0.0, 250.0) == 5.0
    assert weight_schedule("linear_decay", 5.0, 250.0, 250.0) == 0.0
    assert abs(weight_schedule("linear_decay", 5.0, 125.0, 250.0) - 2.5) < 1e-12
    with pytest.raises(ValueError):
        weight_schedule("linear_decay", 5.0, 300.0, 250.0)
    with pytest.raises(ValueError):
        weight_schedule("exp", 5.0, 0.0, 250.0)


def test_candidate_paths_count_and_order():
    cands = candidate_paths(CENTER, CFG)
    assert len(cands) == 7
    assert [c.heading_change_deg for c in cands] == list(CFG.heading_fan_deg)


def test_tracking_times():
    assert tracking_times(straight_traj(length=25.0), CFG) == [5.0, 10.0, 15.0, 20.0, 25.0]
    assert tracking_times(straight_traj(length=3.0), CFG) == [3.0]  # shorter than one interval


def test_tracking_utility_all_zero_prediction():
    # [DERIVED] exp(-2*0) = 1 everywhere -> literal J = 1, complementary 0
    traj = straight_traj(length=5.0)
    geom = CFG.geometry()
    pred = PredictedGrid(geom=geom, values=np.zeros((100, 100)), horizon_s=5.0, wind=WIND)
    assert abs(tracking_utility(traj, [pred], CFG) - 1.0) < 1e-12
    cfg_c = CFG.replace(tracking_form="complementary")
    assert abs(tracking_utility(traj, [pred], cfg_c) - 0.0) < 1e-12


def test_tracking_utility_all_one_prediction():
    # [DERIVED] exp(-2) = 0.1353352832366127
    traj = straight_traj(length=5.0)
    geom = CFG.geometry()
    pred = PredictedGrid(geom=geom, values=np.ones((100, 100)), horizon_s=5.0, wind=WIND)
    assert abs(tracking_utility(traj, [pred], CFG) - 0.1353352832366127) < 1e-12
    cfg_c = CFG.replace(tracking_form="complementary")
    assert abs(tracking_utility(traj, [pred], cfg_c) - (1.0 - 0.1353352832366127)) < 1e-12


def test_tracking_utility_half_half_prediction():
    # pose on the y=50 grid line, fov symmetric about it; upper half predicted 1
    # [DERIVED] (1 + e^-2)/2 = 0.5676676416183064
    traj = straight_traj(length=5.0)
    geom = CFG.geometry()
    vals = np.zeros((100, 100))
    vals[50:, :] = 1.0
    pred = PredictedGrid(geom=geom, values=vals, horizon_s=5.0, wind=WIND)
    assert abs(tracking_utility(traj, [pred], CFG) - 0.5676676416183064) < 1e-12


def test_tracking_utility_count_mismatch():
    traj = straight_traj(length=25.0)
    geom = CFG.geometry()
    pred = PredictedGrid(geom=geom, values=np.zeros((100, 100)), horizon_s=5.0, wind=WIND)
    with pytest.raises(ValueError):
        tracking_utility(traj, [pred], CFG)  # needs 5


def test_prediction_cache_consistency():
    g = uniform_grid()
    g.log_odds[40, 60] = logit(0.9)
    cache = PredictionCache(g, WIND, CFG)
    direct = predict(cache.binary, WIND, 10.0, CFG.gamma, CFG.calm_wind_threshold, CFG.kernel_combine)
    assert np.array_equal(cache.at(10.0).values, direct.values)
    assert cache.at(10.0) is cache.at(10.0)  # cached object reused


def test_utility_leaves_grid_unmodified():
    g = uniform_grid()
    g.log_odds[45, 55] = logit(0.9)
    before = g.log_odds.copy()
    traj = candidate_paths(CENTER, CFG)[3]
    utility(traj, g, WIND, 0.0, CFG)
    assert np.array_equal(g.log_odds, before)
    assert g.residual_x == 0.0 and g.residual_y == 0.0


def test_utility_entropy_sign_conventions():
    g = uniform_grid()
    traj = candidate_paths(CENTER, CFG)[3]
    br = utility(traj, g, WIND, 0.0, CFG)
    assert br.entropy_term > 0.0  # simulation reduces entropy from uniform
    br_lit = utility(traj, g, WIND, 0.0, CFG.replace(entropy_form="literal"))
    assert abs(br_lit.entropy_term + br.entropy_term) < 1e-15


def test_utility_total_composition():
    br = UtilityBreakdown(entropy_term=0.25, tracking_term=0.5, w=2.0)
    assert br.total == 1.25
    br0 = UtilityBreakdown(entropy_term=0.25, tracking_term=0.5, w=0.0)
    assert br0.total == 0.25  # w=0 ignores tracking exactly


def test_forward_simulate_mutates_snapshot_and_reduces_entropy():
    g = uniform_grid()
    snap = g.copy()
    traj = candidate_paths(CENTER, CFG)[3]
    out = forward_simulate(snap, traj, WIND, CFG)
    assert out is snap
    assert snap.mean_entropy() < g.mean_entropy()
    assert np.all(g.log_odds == 0.0)


def test_forward_simulate_zero_length_is_noop():
    g = uniform_grid()
    traj = Trajectory(
        start_pose=CENTER, speed=1.0, points=np.array([[50.0, 50.0]]), waypoints=((50.0, 50.0),)
    )
    before = g.log_odds.copy()
    forward_simulate(g, traj, WIND, CFG)
    assert np.array_equal(g.log_odds, before)


def test_select_tie_breaks():
    br = UtilityBreakdown(0.0, 0.0, 0.0)
    evals = [
        CandidateEval(0, -60.0, br, 1.0),
        CandidateEval(1, -40.0, br, 2.0),
        CandidateEval(2, -20.0, br, 2.0),  # same score, smaller |heading|
        CandidateEval(3, 0.0, br, 1.5),
        CandidateEval(4, 20.0, br, 2.0),  # same score and |heading| as index 2
    ]
    assert _select(evals).index == 2
    evals2 = [CandidateEval(i, d, br, 0.5) for i, d in enumerate((10.0, -10.0, 0.0))]
    assert _select(evals2).index == 2  # only the straight one has |0|


def test_plan_symmetry_from_center():
    # uniform grid, wind along +x, pose at the center: +-deg candidates mirror
    g = uniform_grid()
    res = plan(g, CENTER, WIND, 0.0, CFG)
    by_deg = {e.heading_change_deg: e for e in res.evals}
    for deg in (20.0, 40.0, 60.0):
        assert abs(by_deg[deg].score - by_deg[-deg].score) < 1e-9
    # the tie therefore resolves toward the smaller |heading change|
    assert res.chosen_index == res.evals[res.chosen_index].index


def test_plan_tree_search_step_count():
    g = uniform_grid()
    res = plan(g, CENTER, WIND, 0.0, CFG)
    # 7 candidates x 25 forward steps
    assert res.eval_steps == 175
    assert len(res.evals) == 7
    assert res.trajectory.heading_change_deg == CFG.heading_fan_deg[res.chosen_index]


def test_plan_receding_horizon_truncates():
    g = uniform_grid()
    cfg = CFG.replace(planner_kind="receding_horizon")
    res = plan(g, CENTER, WIND, 0.0, cfg)
    assert res.eval_steps == 175  # evaluation is still full-horizon
    assert len(res.trajectory.waypoints) == 4  # start + 3 executed waypoints
    full = candidate_paths(CENTER, cfg)[res.chosen_index]
    assert res.trajectory.arc_length < full.arc_length


def test_plan_greedy_step_count():
    g = uniform_grid()
    cfg = CFG.replace(planner_kind="greedy")
    res = plan(g, CENTER, WIND, 0.0, cfg)
    assert res.eval_steps == 7
    assert len(res.evals) == 7


def test_plan_greedy_executes_full_candidate():
    # the greedy scores candidates at their final pose but commits to the
    # whole path, like the tree search
    g = uniform_grid()
    cfg = CFG.replace(planner_kind="greedy")
    res = plan(g, CENTER, WIND, 0.0, cfg)
    full = candidate_paths(CENTER, cfg)[res.chosen_index]
    assert res.trajectory.arc_length == full.arc_length


def test_plan_random_uses_rng():
    g = uniform_grid()
    cfg = CFG.replace(planner_kind="random")
    with pytest.raises(ValueError):
        plan(g, CENTER, WIND, 0.0, cfg)
    seq1 = [plan(g, CENTER, WIND, 0.0, cfg, np.random.default_rng(3)).chosen_index for _ in range(1)]
    rng_a, rng_b = np.random.default_rng(4), np.random.default_rng(4)
    seq_a = [plan(g, CENTER, WIND, 0.0, cfg, rng_a).chosen_index for _ in range(10)]
    seq_b = [plan(g, CENTER, WIND, 0.0, cfg, rng_b).chosen_index for _ in range(10)]
    assert seq_a == seq_b
    assert all(0 <= i < 7 for i in seq_a)
    assert len(set(seq_a)) > 1  # actually varies
    res = plan(g, CENTER, WIND, 0.0, cfg, np.random.default_rng(5))
    assert res.evals == () and res.eval_steps == 0


def test_plan_lawnmower():
    g = uniform_grid()
    cfg = CFG.replace(planner_kind="lawnmower")
    res = plan(g, CENTER, WIND, 0.0, cfg)
    assert res.eval_steps == 0 and res.evals == ()
    assert res.trajectory.duration >= cfg.budget_s


def test_plan_deterministic():
    g = uniform_grid()
    g.log_odds[30, 70] = logit(0.9)
    r1 = plan(g, CENTER, WIND, 0.0, CFG)
    r2 = plan(g, CENTER, WIND, 0.0, CFG)
    assert r1.chosen_index == r2.chosen_index
    assert [e.score for e in r1.evals] == [e.score for e in r2.evals]


def test_plan_does_not_touch_grid():
    g = uniform_grid()
    g.log_odds[30, 70] = logit(0.9)
    before = g.log_odds.copy()
    for kind in ("tree_search", "receding_horizon", "greedy"):
        plan(g, CENTER, WIND, 0.0, CFG.replace(planner_kind=kind))
        assert np.array_equal(g.log_odds, before)


def test_plan_depth_two_runs_and_differs():
    cfg2 = CFG.replace(tree_depth=2, planning_horizon_s=10.0, budget_s=250.0)
    g = uniform_grid()
    g.log_odds[40, 70] = logit(0.9)
    res2 = plan(g, CENTER, WIND, 0.0, cfg2)
    res1 = plan(g, CENTER, WIND, 0.0, cfg2.replace(tree_depth=1))
    # depth 2 adds the follow-on fan to every candidate's step bill
    assert res2.eval_steps > res1.eval_steps
    assert res2.eval_steps == res1.eval_steps + 7 * 8 * 10
    for e1, e2 in zip(res1.evals, res2.evals):
        assert e2.score >= e1.score  # bonus is a max over follow-on utilities


def test_weight_applied_from_schedule():
    g = uniform_grid()
    res_late = plan(g, CENTER, WIND, 250.0 - 1e-9, CFG)
    assert abs(res_late.evals[0].breakdown.w) < 1e-7  # decayed to ~0 at budget end
    res_early = plan(g, CENTER, WIND, 0.0, CFG)
    assert res_early.evals[0].breakdown.w == 5.0
