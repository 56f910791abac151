"""State (2) at the reflection point and the von Neumann transition angles.

For a wedge angle ``theta_w`` the reflected uniform state (2) moves along the
wedge, ``(u2, v2) = q2 (cos theta_w, sin theta_w)``.  Potential continuity at
the reflection point P0 fixes its constant ``k2``, Bernoulli fixes ``rho2``
and the remaining mass-flux condition across the flat shock
``S1 = {phi1 = phi2}`` is a scalar equation ``G(q2) = 0``.  Admissible roots
(``rho2 > rho1``) come in a weak/strong pair that merges at the detachment
angle.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    BracketError,
    DegenerateAngle,
    MergedRoot,
    NoCriticalDensity,
    NoIncidentShock,
    NoRoot,
    SingularNormal,
    VacuumError,
)
from .gas import GasModel
from .states import IncidentShock, UniformState, incident_speed, solve_state1

SCAN_POINTS = 4096
SONIC_TIE = 1e-9
DEFAULT_DELTA = 0.05
ANGLE_TOL = 1e-10
MERGE_TOL = 1e-13


class Branch(str, Enum):
    WEAK = "weak"
    STRONG = "strong"


class Classification(str, Enum):
    SUPERSONIC = "supersonic"
    SONIC = "sonic"
    SUBSONIC = "subsonic"


@dataclass(frozen=True)
class PolarContext:
    """Everything the state-(2) system depends on at one wedge angle."""

    gas: GasModel
    state0: UniformState
    state1: UniformState
    incident: IncidentShock
    theta_w: float

    @classmethod
    def build(cls, gas: GasModel, rho1: float, theta_w: float) -> "PolarContext":
        s1, inc = solve_state1(gas, rho1)
        s0 = UniformState(0.0, 0.0, gas.rho0, 0.0)
        return cls(gas, s0, s1, inc, theta_w)

    @property
    def p0(self) -> np.ndarray:
        return reflection_point(self.incident, self.theta_w)


@dataclass(frozen=True)
class PolarSolution:
    state2: UniformState
    branch: Branch
    classification: Classification
    pseudo_mach_at_P0: float
    delta_margin: float
    theta_w: float
    q2: float
    P0: tuple
    residual: float

    def delta_case(self, delta: float = DEFAULT_DELTA) -> str:
        """Which of the four near-sonic regimes P0 falls in, for a given delta."""
        return delta_case(self.pseudo_mach_at_P0, delta)


@dataclass(frozen=True)
class TransitionAngles:
    theta_d: float
    theta_s: float
    # upper end of the proven-subsonic interval; not computed
    theta_hat_s: Optional[float] = None


@dataclass(frozen=True)
class CriticalDensity:
    rho1_cr: float


def delta_case(pseudo_mach: float, delta: float = DEFAULT_DELTA) -> str:
    if pseudo_mach >= 1.0 + delta:
        return "i"
    if pseudo_mach > 1.0:
        return "ii"
    if pseudo_mach >= 1.0 - delta:
        return "iii"
    return "iv"


def reflection_point(incident: IncidentShock, theta_w: float) -> np.ndarray:
    """Intersection P0 of the incident shock with the upper wedge boundary."""
    if not 0.0 < theta_w < 0.5 * math.pi:
        if theta_w >= 0.5 * math.pi:
            raise DegenerateAngle("theta_w = pi/2 puts P0 at infinity; use normal_reflection")
        raise ValueError("theta_w must lie in (0, pi/2)")
    return np.array([incident.xi0, incident.xi0 * math.tan(theta_w)])


def _state2_from_q(ctx: PolarContext, q):
    """Return ``(u2, v2, k2, rho2**(gamma-1))`` for speed(s) ``q`` (vectorized)."""
    q = np.asarray(q, dtype=float)
    c, s = math.cos(ctx.theta_w), math.sin(ctx.theta_w)
    P = ctx.p0
    u2, v2 = q * c, q * s
    phi1 = ctx.state1.phi(P[0], P[1])
    k2 = phi1 + 0.5 * (P @ P) - u2 * P[0] - v2 * P[1]
    arg = ctx.gas.density_argument(q * q, k2)
    return u2, v2, k2, arg


def _residual(ctx: PolarContext, q):
    u2, v2, k2, arg = _state2_from_q(ctx, q)
    g1 = ctx.gas.gamma - 1.0
    rho2 = np.where(arg > 0.0, np.abs(arg) ** (1.0 / g1), np.nan)
    P = ctx.p0
    s1 = ctx.state1
    nx, ny = s1.u - u2, s1.v - v2
    nn = np.hypot(nx, ny)
    with np.errstate(invalid="ignore", divide="ignore"):
        flux1 = s1.rho * ((s1.u - P[0]) * nx + (s1.v - P[1]) * ny)
        flux2 = rho2 * ((u2 - P[0]) * nx + (v2 - P[1]) * ny)
        return (flux1 - flux2) / nn, rho2


def polar_residual(q2: float, ctx: PolarContext) -> float:
    """Mass-flux jump across S1 at P0 for reflected speed ``q2``.

    Returns NaN when ``rho2`` cavitates (the vacuum flag).

    Raises
    ------
    SingularNormal
        If state (2) has the velocity of state (1), so S1 has no normal.
    """
    if q2 < 0.0:
        raise ValueError("q2 must be non-negative")
    u2, v2, _, _ = _state2_from_q(ctx, q2)
    if math.hypot(ctx.state1.u - float(u2), ctx.state1.v - float(v2)) == 0.0:
        raise SingularNormal("state (2) has the velocity of state (1)")
    val, _ = _residual(ctx, q2)
    return float(val)


def admissible_interval(ctx: PolarContext) -> Optional[tuple[float, float]]:
    """Speeds with ``rho2 > rho1`` (compressive reflection), or None.

    ``rho2**(g-1) = rho0**(g-1) - (g-1)(q**2/2 + c0 - q R)`` is a downward
    parabola in ``q``, so the admissible set is an interval with closed-form
    ends.
    """
    gas = ctx.gas
    c, s = math.cos(ctx.theta_w), math.sin(ctx.theta_w)
    P = ctx.p0
    R = c * P[0] + s * P[1]
    c0 = ctx.state1.phi(P[0], P[1]) + 0.5 * (P @ P)
    dh = gas.enthalpy(ctx.state1.rho) - gas.enthalpy(gas.rho0)
    disc = R * R - 2.0 * (dh + c0)
    if disc <= 0.0:
        return None
    root = math.sqrt(disc)
    return max(R - root, 0.0), R + root


def _scan_grid(lo: float, hi: float) -> np.ndarray:
    # uniform grid misses the weak root near pi/2 (it hugs lo); add geometric clustering at lo
    width = hi - lo
    uni = lo + width * np.linspace(0.0, 1.0, SCAN_POINTS + 2)[1:-1]
    geo = lo + width * np.geomspace(1e-13, 1.0, SCAN_POINTS)[:-1]
    return np.unique(np.concatenate([uni, geo]))


def _polish(f, a, b, x):
    """Newton steps from a bracketed root, kept only while they help."""
    fx = f(x)
    for _ in range(4):
        if fx == 0.0:
            break
        hstep = 1e-7 * max(abs(x), 1e-8)
        d = (f(x + hstep) - f(x - hstep)) / (2.0 * hstep)
        if d == 0.0 or not np.isfinite(d):
            break
        xn = x - fx / d
        if not a <= xn <= b:
            break
        fn = f(xn)
        if abs(fn) >= abs(fx):
            break
        x, fx = xn, fn
    return x


def _bracketed_root(f, a, b):
    x = brentq(f, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return _polish(f, a, b, x)


@dataclass(frozen=True)
class _Roots:
    roots: tuple
    min_value: float
    argmin: float


def _find_roots(ctx: PolarContext) -> _Roots:
    interval = admissible_interval(ctx)
    if interval is None:
        return _Roots((), math.inf, math.nan)
    lo, hi = interval
    grid = _scan_grid(lo, hi)
    vals, _ = _residual(ctx, grid)
    finite = np.isfinite(vals)
    grid, vals = grid[finite], vals[finite]

    def f(q):
        return float(_residual(ctx, q)[0])

    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-14 * max(b, 1.0)})
    qmin, gmin = (res.x, res.fun) if res.fun < vals[i] else (grid[i], vals[i])

    sign = np.sign(vals)
    changes = np.nonzero(sign[1:] * sign[:-1] < 0)[0]
    if len(changes) > 2:
        raise BracketError(
            f"{len(changes)} sign changes of the polar residual at theta_w={ctx.theta_w!r}"
        )
    if gmin >= 0.0:
        return _Roots((), gmin, qmin)
    if len(changes) == 2:
        brackets = [(grid[j], grid[j + 1]) for j in changes]
    else:
        # both roots inside the grid cell(s) around the minimum
        brackets = [(a, qmin), (qmin, b)]
    roots = tuple(_bracketed_root(f, x0, x1) for x0, x1 in brackets)
    return _Roots(roots, gmin, qmin)


def _make_solution(ctx: PolarContext, q: float, branch: Branch) -> PolarSolution:
    u2, v2, k2, arg = _state2_from_q(ctx, q)
    if arg <= 0.0:
        raise VacuumError("state (2) cavitates at the located root")
    rho2 = float(arg) ** (1.0 / (ctx.gas.gamma - 1.0))
    st = UniformState(float(u2), float(v2), rho2, float(k2))
    P = ctx.p0
    du, dv = st.pseudo_velocity(P[0], P[1])
    mach = math.hypot(du, dv) / ctx.gas.sound_speed(rho2)
    if abs(mach - 1.0) <= SONIC_TIE:
        cls = Classification.SONIC
    elif mach > 1.0:
        cls = Classification.SUPERSONIC
    else:
        cls = Classification.SUBSONIC
    return PolarSolution(
        state2=st,
        branch=branch,
        classification=cls,
        pseudo_mach_at_P0=mach,
        delta_margin=abs(mach - 1.0),
        theta_w=ctx.theta_w,
        q2=float(q),
        P0=(float(P[0]), float(P[1])),
        residual=polar_residual(q, ctx),
    )


def solve_both(ctx: PolarContext) -> tuple[PolarSolution, PolarSolution]:
    """Weak and strong state (2), ordered by density."""
    found = _find_roots(ctx)
    if not found.roots:
        raise NoRoot(
            f"no state (2) at theta_w={ctx.theta_w!r} (below detachment): "
            f"min residual {found.min_value:.3e}"
        )
    if abs(found.min_value) <= MERGE_TOL * _residual_scale(ctx):
        raise MergedRoot(f"weak and strong roots merge at theta_w={ctx.theta_w!r}")
    sols = [_make_solution(ctx, q, Branch.WEAK) for q in found.roots]
    sols.sort(key=lambda s: s.state2.rho)
    weak, strong = sols
    return weak, replace(strong, branch=Branch.STRONG)


def _residual_scale(ctx: PolarContext) -> float:
    P = ctx.p0
    return ctx.state1.rho * math.hypot(ctx.state1.u - P[0], P[1])


def solve_state2(gas: GasModel, rho1: float, theta_w: float, branch="weak") -> PolarSolution:
    """Solve the state-(2) system for one branch.

    Raises
    ------
    NoRoot
        Below the detachment angle (``MergedRoot`` within tolerance of it).
    DegenerateAngle
        At ``theta_w = pi/2``.
    """
    branch = Branch(branch)
    ctx = PolarContext.build(gas, rho1, theta_w)
    reflection_point(ctx.incident, theta_w)
    weak, strong = solve_both(ctx)
    return weak if branch is Branch.WEAK else strong


def _root_exists(gas, rho1, theta) -> float:
    """Minimum of the polar residual over admissible speeds (< 0 iff roots)."""
    ctx = PolarContext.build(gas, rho1, theta)
    return _find_roots(ctx).min_value


def detachment_angle(gas: GasModel, rho1: float) -> float:
    """Smallest wedge angle with an admissible state (2).

    Bisection on the sign of ``min_q G``, which is negative exactly when the
    residual has a weak/strong pair of roots.
    """
    lo, hi = 1e-4, 0.5 * math.pi - 1e-4
    m_lo, m_hi = _root_exists(gas, rho1, lo), _root_exists(gas, rho1, hi)
    if not (m_lo >= 0.0 and m_hi < 0.0):
        raise BracketError(
            f"detachment bracket failed: min G = {m_lo!r} at {lo}, {m_hi!r} at {hi}"
        )
    while hi - lo > ANGLE_TOL:
        mid = 0.5 * (lo + hi)
        if _root_exists(gas, rho1, mid) < 0.0:
            hi = mid
        else:
            lo = mid
    return float(0.5 * (lo + hi))


def _weak_mach_minus_one(gas, rho1, theta) -> float:
    ctx = PolarContext.build(gas, rho1, theta)
    weak, _ = solve_both(ctx)
    return weak.pseudo_mach_at_P0 - 1.0


def sonic_angle(gas: GasModel, rho1: float, theta_d: Optional[float] = None) -> float:
    """Wedge angle where the weak state (2) is exactly sonic at P0.

    The weak pseudo-Mach number minus one is scanned over
    ``(theta_d, pi/2)``; exactly one sign change is required, otherwise a
    BracketError is raised rather than assuming monotonicity.
    """
    if theta_d is None:
        theta_d = detachment_angle(gas, rho1)
    lo_end, hi_end = theta_d + 1e-7, 0.5 * math.pi - 1e-4
    thetas = np.linspace(lo_end, hi_end, 200)
    vals = np.array([_weak_mach_minus_one(gas, rho1, t) for t in thetas])
    changes = np.nonzero(np.sign(vals[1:]) * np.sign(vals[:-1]) < 0)[0]
    if len(changes) != 1 or vals[0] >= 0.0:
        raise BracketError(
            f"weak pseudo-Mach - 1 has {len(changes)} sign changes on (theta_d, pi/2); "
            f"value at theta_d+ is {vals[0]:.3e}"
        )
    lo, hi = thetas[changes[0]], thetas[changes[0] + 1]
    while hi - lo > ANGLE_TOL:
        mid = 0.5 * (lo + hi)
        if _weak_mach_minus_one(gas, rho1, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def transition_angles(gas: GasModel, rho1: float) -> TransitionAngles:
    td = detachment_angle(gas, rho1)
    return TransitionAngles(td, sonic_angle(gas, rho1, td))


def _u1_minus_c1(gas: GasModel, rho1: float) -> float:
    return incident_speed(gas, rho1) - gas.sound_speed(rho1)


def critical_density(gas: GasModel, upper: float = 1e6) -> CriticalDensity:
    """Density ``rho1`` at which the incident-shock velocity equals ``c1``.

    Raises
    ------
    NoCriticalDensity
        When ``u1 - c1`` keeps one sign up to ``upper * rho0`` (this happens
        for large ``gamma``, where ``u1/c1`` stays below one).
    """
    rho0 = gas.rho0
    grid = rho0 * np.geomspace(1.0 + 1e-9, upper, 2000)
    vals = np.array([_u1_minus_c1(gas, r) for r in grid])
    changes = np.nonzero(np.sign(vals[1:]) * np.sign(vals[:-1]) < 0)[0]
    if len(changes) == 0:
        raise NoCriticalDensity(
            f"u1 - c1 does not change sign on (rho0, {upper:g} rho0] for gamma={gas.gamma}"
        )
    if len(changes) > 1:
        raise BracketError(f"u1 - c1 changes sign {len(changes)} times")
    a, b = grid[changes[0]], grid[changes[0] + 1]
    root = brentq(lambda r: _u1_minus_c1(gas, r), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return CriticalDensity(float(root))


def regime(gas: GasModel, rho1: float) -> str:
    return "u1<=c1" if _u1_minus_c1(gas, rho1) <= 0.0 else "u1>c1"


@dataclass(frozen=True)
class SweepRow:
    theta_w: float
    status: str
    weak: Optional[PolarSolution] = None
    strong: Optional[PolarSolution] = None


def _sweep_row(gas, rho1, theta) -> SweepRow:
    try:
        ctx = PolarContext.build(gas, rho1, theta)
        reflection_point(ctx.incident, theta)
        weak, strong = solve_both(ctx)
    except MergedRoot:
        return SweepRow(theta, "merged")
    except NoRoot:
        return SweepRow(theta, "no_root")
    except (DegenerateAngle, ValueError):
        return SweepRow(theta, "invalid_angle")
    return SweepRow(theta, "ok", weak, strong)


def sweep(
    gas: GasModel, rho1: float, angles: Sequence[float], workers: Optional[int] = None
) -> list[SweepRow]:
    """One summary row per angle, in input order; failures are row statuses."""
    if rho1 <= gas.rho0:
        raise NoIncidentShock("rho1 must exceed rho0")
    angles = list(angles)
    if workers and workers > 1 and len(angles) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(lambda t: _sweep_row(gas, rho1, t), angles))
    return [_sweep_row(gas, rho1, t) for t in angles]
