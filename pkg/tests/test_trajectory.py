import math

import numpy as np
import pytest

from driftplan.config import ScenarioConfig
from driftplan.geometry import GridGeometry
from driftplan.trajectory import (
    Trajectory,
    fan_candidate,
    fan_chain,
    fit_quartic_bezier,
    lawnmower_trajectory,
    reflected_heading,
    truncate_chain,
)
from driftplan.world import Pose

CFG = ScenarioConfig()
GEOM = CFG.geometry()


def test_straight_candidate_length_and_duration():
    pose = Pose(50.0, 50.0, 0.0)
    traj = fan_candidate(pose, 0.0, CFG, GEOM)
    # 1.5 m/s * 25 s = 37.5 m straight ahead
    assert abs(traj.arc_length - 37.5) < 1e-6
    assert abs(traj.duration - 25.0) < 1e-6
    end = traj.pose_at(traj.duration)
    assert abs(end.x - 87.5) < 1e-6 and abs(end.y - 50.0) < 1e-6


def test_pose_at_start_is_exact():
    pose = Pose(12.25, 33.5, 0.7)
    traj = fan_candidate(pose, 40.0, CFG, GEOM)
    assert traj.pose_at(0.0) == pose
    assert traj.pose_at(-1.0) == pose
    assert traj.points[0, 0] == pose.x and traj.points[0, 1] == pose.y


def test_pose_at_midpoints_interpolate():
    traj = Trajectory(
        start_pose=Pose(0.0, 0.0, 0.0),
        speed=2.0,
        points=np.array([[0.0, 0.0], [4.0, 0.0], [4.0, 4.0]]),
        waypoints=((0.0, 0.0), (4.0, 0.0), (4.0, 4.0)),
    )
    assert traj.arc_length == 8.0 and traj.duration == 4.0
    p = traj.pose_at(1.0)
    assert (p.x, p.y) == (2.0, 0.0) and p.psi == 0.0
    p = traj.pose_at(3.0)
    assert (p.x, p.y) == (4.0, 2.0)
    assert abs(p.psi - math.pi / 2) < 1e-12
    # clamped at the end
    pe = traj.pose_at(99.0)
    assert (pe.x, pe.y) == (4.0, 4.0)


def test_sampled_poses_count():
    traj = Trajectory(
        start_pose=Pose(0.0, 0.0, 0.0),
        speed=1.0,
        points=np.array([[0.0, 0.0], [10.0, 0.0]]),
        waypoints=((0.0, 0.0), (10.0, 0.0)),
    )
    samples = traj.sampled_poses(1.0)
    assert len(samples) == 11
    assert samples[0][1] == 0.0 and samples[-1][1] == 10.0


def test_fan_produces_distinct_headings():
    pose = Pose(50.0, 50.0, 0.0)
    ends = []
    for deg in CFG.heading_fan_deg:
        traj = fan_candidate(pose, deg, CFG, GEOM)
        assert traj.heading_change_deg == deg
        e = traj.pose_at(traj.duration)
        ends.append((round(e.x, 3), round(e.y, 3)))
        # net heading at the end close to the commanded change
        assert abs(math.degrees(e.psi) - deg) < 8.0
    assert len(set(ends)) == len(CFG.heading_fan_deg)
    # symmetric fan: +-deg candidates mirror about y=50
    t_pos = fan_candidate(pose, 40.0, CFG, GEOM)
    t_neg = fan_candidate(pose, -40.0, CFG, GEOM)
    e1, e2 = t_pos.pose_at(t_pos.duration), t_neg.pose_at(t_neg.duration)
    assert abs(e1.x - e2.x) < 1e-6
    assert abs((e1.y - 50.0) + (e2.y - 50.0)) < 1e-6


def test_fan_chain_turns_in_equal_increments():
    chain = fan_chain(0.0, 0.0, 0.0, math.radians(60.0), 37.5, 5)
    assert len(chain) == 6
    seg = 37.5 / 5
    # first segment already applies one increment (12 deg)
    dx, dy = chain[1][0] - chain[0][0], chain[1][1] - chain[0][1]
    assert abs(math.atan2(dy, dx) - math.radians(12.0)) < 1e-12
    assert abs(math.hypot(dx, dy) - seg) < 1e-12


def test_curvature_within_bound():
    pose = Pose(50.0, 50.0, 0.0)
    for deg in CFG.heading_fan_deg:
        traj = fan_candidate(pose, deg, CFG, GEOM)
        assert traj.max_curvature() <= CFG.max_curvature


def test_truncate_chain_cuts_at_boundary():
    geom = GridGeometry(rows=10, cols=10, cell_dx=1.0, cell_dy=1.0)
    pts = [(5.0, 5.0), (8.0, 5.0), (14.0, 5.0)]
    cut = truncate_chain(pts, geom)
    assert cut[-1] == (10.0, 5.0)
    assert len(cut) == 3
    # fully inside chain untouched
    inside = [(1.0, 1.0), (2.0, 2.0)]
    assert truncate_chain(inside, geom) == inside


def test_candidate_near_corner_not_empty():
    pose = Pose(99.0, 99.0, math.radians(45.0))  # facing out of the corner
    for deg in CFG.heading_fan_deg:
        traj = fan_candidate(pose, deg, CFG, GEOM)
        assert traj.arc_length > 0.0
        assert np.all(traj.points[:, 0] >= 0.0) and np.all(traj.points[:, 0] <= 100.0)
        assert np.all(traj.points[:, 1] >= 0.0) and np.all(traj.points[:, 1] <= 100.0)


def test_reflected_heading():
    geom = GridGeometry(rows=100, cols=100, cell_dx=1.0, cell_dy=1.0)
    # pressed on the east wall heading east: flip to west
    h = reflected_heading(Pose(100.0, 50.0, 0.0), geom)
    assert abs(abs(h) - math.pi) < 1e-12
    # corner, heading out along both axes: flip both
    h = reflected_heading(Pose(100.0, 100.0, math.radians(45.0)), geom)
    assert abs(h - math.radians(-135.0)) < 1e-12
    # interior pose unchanged
    assert reflected_heading(Pose(50.0, 50.0, 0.3), geom) == 0.3


def test_candidates_never_degenerate_on_walls():
    # every fan candidate from any wall-pressed pose and heading must have
    # positive length (the reflected base heading can still point a turned
    # candidate outward; it then degrades to the straight inward chain)
    wall_poses = [(100.0, 50.0), (0.0, 50.0), (50.0, 100.0), (50.0, 0.0), (100.0, 100.0), (0.0, 0.0)]
    for x, y in wall_poses:
        for psi_deg in range(-180, 181, 15):
            pose = Pose(x, y, math.radians(psi_deg))
            for deg in CFG.heading_fan_deg:
                traj = fan_candidate(pose, deg, CFG, GEOM)
                assert traj.arc_length > 0.0


def test_pose_outside_map_rejected():
    with pytest.raises(ValueError):
        fan_candidate(Pose(150.0, 50.0, 0.0), 0.0, CFG, GEOM)


def test_truncated_at_waypoint():
    pose = Pose(50.0, 50.0, 0.0)
    traj = fan_candidate(pose, 20.0, CFG, GEOM)
    sub = traj.truncated_at_waypoint(3)
    assert len(sub.waypoints) == 4
    assert sub.arc_length < traj.arc_length
    assert sub.start_pose == pose
    # roughly 3/5 of the full path
    assert 0.45 < sub.arc_length / traj.arc_length < 0.75
    # k beyond the last waypoint returns the trajectory itself
    assert traj.truncated_at_waypoint(10) is traj
    with pytest.raises(ValueError):
        traj.truncated_at_waypoint(0)


def test_bezier_endpoints_and_tangent():
    chain = np.array([[0.0, 0.0], [10.0, 2.0], [20.0, 0.0]])
    dense = fit_quartic_bezier(chain, 0.0)
    assert np.allclose(dense[0], [0.0, 0.0], atol=1e-12)
    assert np.allclose(dense[-1], [20.0, 0.0], atol=1e-9)
    d = dense[1] - dense[0]
    # finite difference picks up curvature; the bend itself is ~0.2 rad
    assert abs(math.atan2(d[1], d[0])) < 0.01


def test_bezier_straight_chain_stays_straight():
    chain = np.array([[0.0, 0.0], [5.0, 0.0], [10.0, 0.0]])
    dense = fit_quartic_bezier(chain, 0.0)
    assert np.max(np.abs(dense[:, 1])) < 1e-9


def test_lawnmower_tracks():
    cfg = ScenarioConfig(planner_kind="lawnmower")
    pose = Pose(50.0, 50.0, 0.0)
    traj = lawnmower_trajectory(pose, cfg, GEOM)
    # spacing = 0.8 * 35 = 28 m; margin 14 -> tracks at y = 14, 42, 70
    ys = sorted({round(w[1], 6) for w in traj.waypoints[1:]})
    assert ys == [14.0, 42.0, 70.0]
    xs = sorted({round(w[0], 6) for w in traj.waypoints[1:]})
    assert xs == [14.0, 86.0]
    # outlasts the mission budget
    assert traj.duration >= cfg.budget_s
    assert traj.points[0, 0] == 50.0 and traj.points[0, 1] == 50.0


def test_lawnmower_narrow_map():
    cfg = ScenarioConfig(map_width_m=20.0, map_height_m=100.0, budget_s=250.0)
    geom = cfg.geometry()
    traj = lawnmower_trajectory(Pose(10.0, 50.0, 0.0), cfg, geom)
    assert traj.duration >= cfg.budget_s
    assert np.all(traj.points[:, 0] >= 0.0) and np.all(traj.points[:, 0] <= 20.0)
