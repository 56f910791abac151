"""Regular-reflection configuration: points P0..P4, flat shock S1, sonic arc.

Coordinates are the self-similar ``(xi, eta)`` of the upper half-plane.  The
wedge tip is P3 = (0, 0), the wedge boundary is the ray at angle
``theta_w``, and the symmetry axis is ``{eta = 0, xi < 0}``.  In the
supersonic regime the elliptic region is bounded by the curved shock P1P2,
the axis P2P3, the wedge P3P4 and the sonic arc P4P1 of state (2).  In the
subsonic regime P1 = P4 = P0 and the arc degenerates to a point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GuessInfeasible, NoIntersection
from .gas import GasModel
from .polar import Classification, PolarSolution
from .states import UniformState


class Regime:
    SUPERSONIC = "supersonic"
    SUBSONIC = "subsonic"


@dataclass(frozen=True)
class WedgeGeometry:
    theta_w: float

    def __post_init__(self):
        if not 0.0 < self.theta_w < 0.5 * math.pi:
            raise ValueError("theta_w must lie in (0, pi/2)")

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.theta_w), math.sin(self.theta_w)])

    @property
    def outward_normal(self) -> np.ndarray:
        """Unit normal of the upper wedge boundary pointing into the flow domain."""
        return np.array([-math.sin(self.theta_w), math.cos(self.theta_w)])

    def contains(self, point) -> bool:
        """True if ``point`` lies in the flow domain (upper half, outside the wedge)."""
        x, y = float(point[0]), float(point[1])
        if y < 0.0:
            return False
        return x <= 0.0 or y >= x * math.tan(self.theta_w)


@dataclass(frozen=True)
class ReflectionConfiguration:
    gas: GasModel
    state1: UniformState
    state2: UniformState
    theta_w: float
    P0: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    P3: np.ndarray
    P4: np.ndarray
    s1_normal: np.ndarray
    s1_direction: np.ndarray
    sonic_center: np.ndarray
    sonic_radius: float
    regime: str
    e_dir: Optional[np.ndarray]

    @property
    def wedge(self) -> WedgeGeometry:
        return WedgeGeometry(self.theta_w)

    @property
    def supersonic(self) -> bool:
        return self.regime == Regime.SUPERSONIC

    @property
    def shock_start(self) -> np.ndarray:
        return self.P1

    def arc_angles(self) -> tuple[float, float]:
        """Polar angles about the sonic center of P4 and P1."""
        a4 = math.atan2(*(self.P4 - self.sonic_center)[::-1])
        a1 = math.atan2(*(self.P1 - self.sonic_center)[::-1])
        if a1 < a4:
            a1 += 2.0 * math.pi
        return a4, a1

    def to_dict(self) -> dict:
        pts = {name: [float(v) for v in getattr(self, name)] for name in ("P0", "P1", "P2", "P3", "P4")}
        return {
            "points": pts,
            "s1": {
                "point": pts["P0"],
                "normal": [float(v) for v in self.s1_normal],
                "direction": [float(v) for v in self.s1_direction],
            },
            "sonic": {
                "center": [float(v) for v in self.sonic_center],
                "radius": float(self.sonic_radius),
            },
            "regime": self.regime,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


@dataclass(frozen=True)
class ShockCurve:
    """Polyline from the shock start (P1, or P0 when subsonic) to P2 on the axis."""

    points: np.ndarray
    start_fixed: bool = True

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise ValueError("shock needs at least three (xi, eta) points")
        object.__setattr__(self, "points", pts)

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def arc_length(self) -> np.ndarray:
        seg = np.hypot(*np.diff(self.points, axis=0).T)
        return np.concatenate([[0.0], np.cumsum(seg)])

    def is_simple(self) -> bool:
        p = self.points
        n = len(p) - 1
        for i in range(n):
            for j in range(i + 2, n):
                if _segments_cross(p[i], p[i + 1], p[j], p[j + 1]):
                    return False
        return True

    def end_tangent(self) -> np.ndarray:
        d = self.points[-1] - self.points[-2]
        return d / np.hypot(*d)

    def start_tangent(self) -> np.ndarray:
        d = self.points[1] - self.points[0]
        return d / np.hypot(*d)


def _segments_cross(a, b, c, d) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return o1 * o2 < 0.0 and o3 * o4 < 0.0


def _line_circle(point, direction, center, radius):
    """Parameters s >= 0 (ascending) where ``point + s*direction`` meets the circle."""
    d = point - center
    b = float(direction @ d)
    c = float(d @ d) - radius * radius
    disc = b * b - c
    if disc < 0.0:
        return []
    r = math.sqrt(disc)
    return sorted(s for s in (-b - r, -b + r) if s >= 0.0)


def build_configuration(
    gas: GasModel, state1: UniformState, polar: PolarSolution, theta_w: Optional[float] = None
) -> ReflectionConfiguration:
    """Assemble the regular-reflection geometry from a solved state (2).

    P2 here is provisional: the foot of S1 on the axis.  The free boundary
    (and its true P2) comes from the shock curve.

    Raises
    ------
    NoIntersection
        If, in the supersonic regime, S1 or the wedge ray misses the sonic
        circle of state (2) where the topology requires a crossing.
    """
    theta_w = polar.theta_w if theta_w is None else theta_w
    wedge = WedgeGeometry(theta_w)
    st2 = polar.state2
    P0 = np.asarray(polar.P0, dtype=float)
    P3 = np.zeros(2)
    center = st2.velocity
    radius = gas.sound_speed(st2.rho)

    nrm = np.array([state1.u - st2.u, state1.v - st2.v])
    nrm /= np.hypot(*nrm)
    tangent = np.array([-nrm[1], nrm[0]])
    if tangent @ wedge.outward_normal < 0.0:
        tangent = -tangent

    supersonic = polar.classification is Classification.SUPERSONIC
    if supersonic:
        if np.hypot(*(P0 - center)) <= radius:
            raise NoIntersection("supersonic state (2) but P0 lies inside its sonic circle")
        hits = _line_circle(P0, tangent, center, radius)
        if not hits:
            raise NoIntersection("S1 does not meet the sonic circle of state (2)")
        P1 = P0 + hits[0] * tangent
        dist4 = polar.q2 + radius
        if not 0.0 < dist4 < np.hypot(*P0):
            raise NoIntersection("sonic circle does not cross the wedge between tip and P0")
        P4 = dist4 * wedge.direction
        e_dir = (P1 - P0) / np.hypot(*(P1 - P0))
        regime = Regime.SUPERSONIC
    else:
        P1 = P4 = P0.copy()
        e_dir = None
        regime = Regime.SUBSONIC

    # provisional P2: S1 prolonged to the axis
    if abs(tangent[1]) > 0.0:
        s = -P1[1] / tangent[1]
        P2 = P1 + s * tangent if s > 0.0 else np.array([P1[0], 0.0])
    else:
        P2 = np.array([P1[0], 0.0])

    return ReflectionConfiguration(
        gas=gas,
        state1=state1,
        state2=st2,
        theta_w=theta_w,
        P0=P0,
        P1=P1,
        P2=P2,
        P3=P3,
        P4=P4,
        s1_normal=nrm,
        s1_direction=tangent,
        sonic_center=center,
        sonic_radius=radius,
        regime=regime,
        e_dir=e_dir,
    )


def _bezier(b0, b1, b2, t):
    t = np.asarray(t)[:, None]
    return (1 - t) ** 2 * b0 + 2 * (1 - t) * t * b1 + t**2 * b2


def sonic1_clearance(config: ReflectionConfiguration, points) -> float:
    """Minimum distance of ``points`` outside the sonic circle of state (1)."""
    c1 = config.gas.sound_speed(config.state1.rho)
    center = config.state1.velocity
    pts = np.atleast_2d(points)
    return float(np.min(np.hypot(*(pts - center).T)) - c1)


def _guess_points(config, s, n):
    b0 = config.shock_start
    t = config.s1_direction
    b1 = b0 + s * t
    b2 = np.array([b1[0], 0.0])
    # nodes at equal height steps: the template has monotone eta
    eta = b0[1] * (1.0 - np.linspace(0.0, 1.0, n))
    # invert eta(tau) = (1-tau)^2 b0y + 2(1-tau)tau b1y for tau in [0,1]
    a = b0[1] - 2.0 * b1[1]
    bq = 2.0 * (b1[1] - b0[1])
    tau = np.empty(n)
    for k, e in enumerate(eta):
        cq = b0[1] - e
        if abs(a) < 1e-14 * max(1.0, abs(b0[1])):
            tau[k] = -cq / bq
        else:
            disc = max(bq * bq - 4.0 * a * cq, 0.0)
            r = sorted(((-bq - math.sqrt(disc)) / (2 * a), (-bq + math.sqrt(disc)) / (2 * a)))
            cand = [x for x in r if -1e-12 <= x <= 1.0 + 1e-12]
            tau[k] = min(max(cand[0], 0.0), 1.0)
    pts = _bezier(b0, b1, b2, tau)
    pts[0], pts[-1] = b0, b2
    pts[:, 1] = eta
    return pts


def initial_shock_guess(
    config: ReflectionConfiguration, n: int = 65, fraction: Optional[float] = None
) -> ShockCurve:
    """Quadratic Bezier from the shock start to the axis.

    The control point sits on S1 at ``fraction`` of the way down to the
    axis, which makes the start tangent S1 and the end tangent vertical.
    Without an explicit ``fraction`` the default 0.5 is tried first, then the
    admissible value with the largest clearance from the state-(1) sonic
    circle.

    Raises
    ------
    GuessInfeasible
        If every member of the family touches the state-(1) sonic circle,
        leaves the flow domain or lands the foot right of the wedge tip.
    """
    if fraction is not None and not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    b0 = config.shock_start
    t = config.s1_direction
    if t[1] >= 0.0:
        raise GuessInfeasible("S1 does not descend towards the axis from the shock start")
    s_max = b0[1] / -t[1]

    def feasible(frac):
        pts = _guess_points(config, frac * s_max, n)
        if pts[-1, 0] >= 0.0:
            return None, -math.inf
        if not all(config.wedge.contains(p) for p in pts[1:]):
            return None, -math.inf
        return pts, sonic1_clearance(config, pts)

    candidates = [fraction] if fraction is not None else [0.5]
    for frac in candidates:
        pts, clear = feasible(frac)
        if pts is not None and clear > 0.0:
            return ShockCurve(pts)
    if fraction is None:
        best = max(
            ((f,) + feasible(f) for f in np.linspace(0.02, 0.98, 49)), key=lambda r: r[2]
        )
        if best[1] is not None and best[2] > 0.0:
            return ShockCurve(best[1])
    raise GuessInfeasible("no quadratic Bezier guess clears the state-(1) sonic circle")
