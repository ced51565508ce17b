"""Candidate trajectory construction and arc-length parameterization.

A Trajectory is a polyline (vertices of a densely sampled quartic Bezier, or
a coverage pattern used directly) followed at constant commanded speed;
pose_at(elapsed) returns the interpolated pose. Candidate fans apply a net
heading change spread evenly over the waypoints; chains leaving the map are
cut at the boundary, and a chain that would start outside is rebuilt with the
heading reflected off the wall so no candidate is ever empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .geometry import GridGeometry, wrap_angle
from .world import Pose

BEZIER_DENSE_SAMPLES = 400
_MIN_CHAIN_LEN = 1e-6  # meters; below this a truncated chain counts as empty


@dataclass
class Trajectory:
    start_pose: Pose
    speed: float
    points: np.ndarray  # (N, 2) polyline vertices, inside map bounds
    waypoints: tuple[tuple[float, float], ...]
    heading_change_deg: float | None = None
    cum_s: np.ndarray = field(init=False)
    seg_psi: np.ndarray = field(init=False)
    arc_length: float = field(init=False)
    duration: float = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] != 2:
            raise ValueError("points must be an (N, 2) array")
        if self.speed <= 0:
            raise ValueError("speed must be > 0")
        self.points = pts
        d = np.diff(pts, axis=0)
        seg_len = np.hypot(d[:, 0], d[:, 1])
        self.cum_s = np.concatenate(([0.0], np.cumsum(seg_len)))
        self.arc_length = float(self.cum_s[-1])
        self.duration = self.arc_length / self.speed
        psi = np.empty(max(len(seg_len), 1))
        prev = self.start_pose.psi
        for k in range(len(seg_len)):
            if seg_len[k] > 0:
                prev = math.atan2(d[k, 1], d[k, 0])
            psi[k] = prev
        if len(seg_len) == 0:
            psi[0] = prev
        self.seg_psi = psi

    def pose_at(self, elapsed_s: float) -> Pose:
        if elapsed_s <= 0.0 or self.arc_length == 0.0:
            return self.start_pose
        s = min(self.speed * elapsed_s, self.arc_length)
        idx = int(np.searchsorted(self.cum_s, s, side="right")) - 1
        idx = min(max(idx, 0), len(self.points) - 2)
        s0, s1 = self.cum_s[idx], self.cum_s[idx + 1]
        frac = 0.0 if s1 == s0 else (s - s0) / (s1 - s0)
        x = self.points[idx, 0] + frac * (self.points[idx + 1, 0] - self.points[idx, 0])
        y = self.points[idx, 1] + frac * (self.points[idx + 1, 1] - self.points[idx, 1])
        return Pose(float(x), float(y), float(self.seg_psi[idx]))

    def sampled_poses(self, dt: float) -> list[tuple[Pose, float]]:
        """(pose, time) at t = 0, dt, ... up to the last full step inside duration."""
        n = int(math.floor(self.duration / dt + 1e-9))
        return [(self.pose_at(k * dt), k * dt) for k in range(n + 1)]

    def truncated_at_waypoint(self, k: int) -> "Trajectory":
        """Sub-trajectory ending at the k-th chain waypoint (0 = start)."""
        if k >= len(self.waypoints) - 1:
            return self
        if k < 1:
            raise ValueError("k must be >= 1")
        target = np.array(self.waypoints[k])
        d = np.hypot(self.points[:, 0] - target[0], self.points[:, 1] - target[1])
        cut = int(np.argmax(d == d.min()))
        cut = max(cut, 1)
        return Trajectory(
            start_pose=self.start_pose,
            speed=self.speed,
            points=self.points[: cut + 1].copy(),
            waypoints=self.waypoints[: k + 1],
            heading_change_deg=self.heading_change_deg,
        )

    def max_curvature(self) -> float:
        """Discrete curvature bound over the polyline: |dpsi| / ds."""
        if len(self.points) < 3:
            return 0.0
        worst = 0.0
        for k in range(1, len(self.seg_psi)):
            ds = self.cum_s[k + 1] - self.cum_s[k - 1]
            if ds <= 0:
                continue
            dpsi = abs(wrap_angle(self.seg_psi[k] - self.seg_psi[k - 1]))
            worst = max(worst, dpsi / (0.5 * ds))
        return worst


# -- quartic Bezier fit ---------------------------------------------------


def _bernstein4(u: np.ndarray) -> np.ndarray:
    """Quartic Bernstein basis, shape (len(u), 5)."""
    u = np.asarray(u, dtype=np.float64)
    v = 1.0 - u
    return np.stack(
        [v**4, 4 * v**3 * u, 6 * v**2 * u**2, 4 * v * u**3, u**4], axis=1
    )


def fit_quartic_bezier(
    chain: np.ndarray, psi0: float, n_dense: int = BEZIER_DENSE_SAMPLES
) -> np.ndarray:
    """Dense polyline of a quartic Bezier through the chain points.

    The start point, start tangent direction (psi0) and end point are pinned;
    the free interior control points are solved by least squares as offsets
    from the straight chord, so under-determined short chains degrade to the
    chord instead of wandering.
    """
    chain = np.asarray(chain, dtype=np.float64)
    if chain.shape[0] < 2:
        raise ValueError("chain needs at least start and one waypoint")
    q0, qm = chain[0], chain[-1]
    e = np.array([math.cos(psi0), math.sin(psi0)])
    seg = np.diff(chain, axis=0)
    s = np.concatenate(([0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))))
    total = s[-1]
    if total <= 0:
        return np.tile(q0, (2, 1))
    lam0 = max(np.hypot(*(qm - q0)) / 4.0, 0.05 * total)
    c20 = q0 + 0.5 * (qm - q0)
    c30 = q0 + 0.75 * (qm - q0)
    interior = range(1, chain.shape[0] - 1)
    rows, rhs = [], []
    for k in interior:
        b = _bernstein4(np.array([s[k] / total]))[0]
        base = (b[0] + b[1]) * q0 + b[1] * lam0 * e + b[2] * c20 + b[3] * c30 + b[4] * qm
        r = chain[k] - base
        rows.append([b[1] * e[0], b[2], 0.0, b[3], 0.0])
        rhs.append(r[0])
        rows.append([b[1] * e[1], 0.0, b[2], 0.0, b[3]])
        rhs.append(r[1])
    if rows:
        z, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    else:
        z = np.zeros(5)
    lam = max(lam0 + z[0], 0.05 * lam0)
    ctrl = np.stack([q0, q0 + lam * e, c20 + z[1:3], c30 + z[3:5], qm])
    u = np.linspace(0.0, 1.0, n_dense)
    return _bernstein4(u) @ ctrl


# -- candidate fan --------------------------------------------------------


def fan_chain(
    x: float, y: float, psi: float, net_change_rad: float, length_m: float, n_waypoints: int
) -> list[tuple[float, float]]:
    """Waypoint chain turning net_change_rad in equal per-segment increments."""
    seg = length_m / n_waypoints
    pts = [(x, y)]
    for k in range(1, n_waypoints + 1):
        h = psi + k * net_change_rad / n_waypoints
        px, py = pts[-1]
        pts.append((px + seg * math.cos(h), py + seg * math.sin(h)))
    return pts


def truncate_chain(
    pts: list[tuple[float, float]], geom: GridGeometry
) -> list[tuple[float, float]]:
    """Cut the chain at its first exit from the map rectangle."""
    x0, y0 = geom.origin_x, geom.origin_y
    x1, y1 = x0 + geom.width_m, y0 + geom.height_m
    out = [pts[0]]
    for (ax, ay), (bx, by) in zip(pts, pts[1:]):
        t_exit = 1.0
        for lo, hi, a, b in ((x0, x1, ax, bx), (y0, y1, ay, by)):
            if b < lo:
                t_exit = min(t_exit, (lo - a) / (b - a))
            elif b > hi:
                t_exit = min(t_exit, (hi - a) / (b - a))
        if t_exit < 1.0:
            t_exit = max(t_exit, 0.0)
            out.append((ax + t_exit * (bx - ax), ay + t_exit * (by - ay)))
            break
        out.append((bx, by))
    return out


def _chain_length(pts) -> float:
    return sum(math.hypot(bx - ax, by - ay) for (ax, ay), (bx, by) in zip(pts, pts[1:]))


def reflected_heading(pose: Pose, geom: GridGeometry, eps: float = 1e-6) -> float:
    """Heading bounced off the wall(s) the pose is pressed against."""
    vx, vy = math.cos(pose.psi), math.sin(pose.psi)
    if (pose.x <= geom.origin_x + eps and vx < 0) or (
        pose.x >= geom.origin_x + geom.width_m - eps and vx > 0
    ):
        vx = -vx
    if (pose.y <= geom.origin_y + eps and vy < 0) or (
        pose.y >= geom.origin_y + geom.height_m - eps and vy > 0
    ):
        vy = -vy
    return math.atan2(vy, vx)


def fan_candidate(
    pose: Pose, net_change_deg: float, config: ScenarioConfig, geom: GridGeometry
) -> Trajectory:
    """One fan trajectory; truncated at the map boundary, never empty."""
    if not geom.in_bounds_point(pose.x, pose.y):
        raise ValueError(f"pose ({pose.x:.2f}, {pose.y:.2f}) is outside the map")
    length = config.asv_speed * config.planning_horizon_s
    base_psi = pose.psi
    chain = truncate_chain(
        fan_chain(pose.x, pose.y, base_psi, math.radians(net_change_deg), length, config.n_waypoints),
        geom,
    )
    if _chain_length(chain) < _MIN_CHAIN_LEN:
        # pressed against a wall facing out: bounce the base heading inward
        base_psi = reflected_heading(pose, geom)
        chain = truncate_chain(
            fan_chain(
                pose.x, pose.y, base_psi, math.radians(net_change_deg), length, config.n_waypoints
            ),
            geom,
        )
    if _chain_length(chain) < _MIN_CHAIN_LEN:
        # net change can turn the reflected heading back out (near-parallel to
        # the wall); degrade this candidate to the straight inward chain
        chain = truncate_chain(
            fan_chain(pose.x, pose.y, base_psi, 0.0, length, config.n_waypoints), geom
        )
    if _chain_length(chain) < _MIN_CHAIN_LEN:
        raise ValueError("candidate chain degenerate even after wall reflection")
    dense = fit_quartic_bezier(np.asarray(chain), base_psi)
    dense[:, 0] = np.clip(dense[:, 0], geom.origin_x, geom.origin_x + geom.width_m)
    dense[:, 1] = np.clip(dense[:, 1], geom.origin_y, geom.origin_y + geom.height_m)
    return Trajectory(
        start_pose=pose,
        speed=config.asv_speed,
        points=dense,
        waypoints=tuple(chain),
        heading_change_deg=net_change_deg,
    )


# -- open-loop coverage pattern -------------------------------------------


def lawnmower_trajectory(pose: Pose, config: ScenarioConfig, geom: GridGeometry) -> Trajectory:
    """Boustrophedon sweep, track spacing = spacing_factor * max_range.

    The serpentine is repeated (reversed each pass) until the path outlasts
    the mission budget, so the vehicle never parks mid-mission.
    """
    spacing = config.lawnmower_spacing_factor * config.max_range
    margin = min(spacing / 2.0, geom.width_m / 2.0, geom.height_m / 2.0)
    x_lo, x_hi = geom.origin_x + margin, geom.origin_x + geom.width_m - margin
    if x_hi - x_lo < geom.cell_dx:
        # map narrower than one track spacing: sweep the middle half instead
        x_lo = geom.origin_x + geom.width_m / 4.0
        x_hi = geom.origin_x + 3.0 * geom.width_m / 4.0
    ys = []
    y = geom.origin_y + margin
    while y <= geom.origin_y + geom.height_m - margin + 1e-9:
        ys.append(y)
        y += spacing
    if not ys:
        ys = [geom.origin_y + geom.height_m / 2.0]
    pattern = []
    for k, ty in enumerate(ys):
        if k % 2 == 0:
            pattern += [(x_lo, ty), (x_hi, ty)]
        else:
            pattern += [(x_hi, ty), (x_lo, ty)]
    chain = [(pose.x, pose.y)] + pattern
    needed = config.budget_s * config.asv_speed
    direction = -1  # alternate sweep direction on each repeat
    while _chain_length(chain) < needed:
        nxt = pattern[::direction]
        if nxt[0] == chain[-1]:
            nxt = nxt[1:]
        chain += nxt
        direction = -direction
    return Trajectory(
        start_pose=pose,
        speed=config.asv_speed,
        points=np.asarray(chain, dtype=np.float64),
        waypoints=tuple(chain),
        heading_change_deg=None,
    )
