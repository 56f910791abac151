"""Free-boundary iteration for the regular-reflection problem.

Inner problem: with the shock fixed, solve the potential-flow equation in
the elliptic region with ``phi = phi1`` on the shock, ``phi = phi2`` on the
sonic arc (or at P0 when subsonic) and zero conormal flux on wedge and axis.

Outer problem: move the shock until the mass flux matches state (1),
``rho Dphi.n = rho1 Dphi1.n``, at every free shock node.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse.linalg as spla
from numpy.polynomial import chebyshev as C

from ..errors import (
    InnerDiverged,
    NotConverged,
    SensitivityDegenerate,
    VacuumEncountered,
    VacuumError,
)
from ..gas import GasModel
from ..geometry import (
    ReflectionConfiguration,
    ShockCurve,
    build_configuration,
    initial_shock_guess,
)
from ..polar import solve_state2
from ..states import UniformState, solve_state1
from .discretization import Discretization, PointState
from .mesh import Domain, Mesh, domain_from_configuration, transfinite_mesh

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Discretization and iteration controls.

    ``tol_pde`` and ``tol_rh`` are relative: they are multiplied by the
    potential scale ``max(|phi1|, |phi2|)`` over the bounding box of the
    domain.
    """

    n1: int = 64
    n2: int = 64
    delta_e: float = 1e-3
    relax: float = 0.5
    relax_floor: float = 1.0 / 64.0
    tol_pde: float = 1e-10
    tol_rh: float = 1e-4
    max_outer: int = 40
    max_inner: int = 200
    picard_switch: float = 1.0
    shock_modes: int = 6
    sensitivity_step: float = 1e-4
    sensitivity_floor: float = 1e-8

    def __post_init__(self):
        if self.n1 < 8 or self.n2 < 8:
            raise ValueError("mesh resolution must be at least 8 in each direction")
        if not 0.0 < self.delta_e < 1.0:
            raise ValueError("delta_e must lie in (0, 1)")
        if not 0.0 < self.relax <= 1.0:
            raise ValueError("relax must lie in (0, 1]")
        for name in ("tol_pde", "tol_rh", "sensitivity_step"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be at least 1")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def potential_scale(domain: Domain, mesh: Optional[Mesh] = None) -> float:
    """``max(|phi1|, |phi2|)`` over the bounding box of the domain."""
    pts = [domain.P1, domain.P2, domain.P3, domain.P4]
    if mesh is not None:
        pts.append(mesh.xy)
    else:
        pts.append(domain.shock.points)
        pts.append(domain.arc_nodes(32))
    allp = np.vstack([np.atleast_2d(p) for p in pts])
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    xs = np.linspace(lo[0], hi[0], 41)
    ys = np.linspace(lo[1], hi[1], 41)
    X, Y = np.meshgrid(xs, ys)
    vals = [np.abs(domain.state1.phi(X, Y)).max(), np.abs(domain.state2.phi(X, Y)).max()]
    for st in (domain.state1, domain.state2):
        # interior extremum of the concave quadratic
        if lo[0] <= st.u <= hi[0] and lo[1] <= st.v <= hi[1]:
            vals.append(abs(st.phi(st.u, st.v)))
    return float(max(vals))


@dataclass
class Field:
    """Discrete solution on a body-fitted mesh."""

    domain: Domain
    mesh: Mesh
    psi: np.ndarray
    disc: Discretization
    inner_residual: float
    inner_iterations: int
    scale: float

    @property
    def phi(self) -> np.ndarray:
        xy = self.mesh.xy
        return self.psi - 0.5 * np.sum(xy * xy, axis=1)

    @cached_property
    def cells(self) -> PointState:
        """Cell-center state without the cutoff (the physical gradient)."""
        return self.disc.cell_state(self.psi)

    @cached_property
    def cut_cells(self) -> np.ndarray:
        """Cells where the ellipticity cutoff is active at any quadrature point."""
        st = self.disc.state(self.psi, check_vacuum=False)
        return st.cut.any(axis=1)

    def ellipticity_margin(self) -> np.ndarray:
        st = self.cells
        return np.sqrt(np.maximum(st.cstar_sq, 0.0)) - np.sqrt(st.speed_sq)

    def node_gradient(self) -> np.ndarray:
        """Area-weighted average of cell gradients at each node."""
        st = self.cells
        conn = self.mesh.elements()
        acc = np.zeros((self.mesh.xy.shape[0], 2))
        cnt = np.zeros(self.mesh.xy.shape[0])
        for a in range(4):
            np.add.at(acc, conn[:, a], st.dphi)
            np.add.at(cnt, conn[:, a], 1.0)
        return acc / cnt[:, None]


def _dirichlet(domain: Domain, mesh: Mesh):
    arc = mesh.arc_nodes()
    shock = mesh.shock_nodes()
    idx = np.concatenate([arc, shock])
    xy = mesh.xy
    vals = np.empty(len(idx))
    s1, s2 = domain.state1, domain.state2
    na = len(arc)
    # psi = phi + |x|^2/2 is linear for a uniform state
    vals[:na] = s2.u * xy[arc, 0] + s2.v * xy[arc, 1] + s2.k
    vals[na:] = s1.u * xy[shock, 0] + s1.v * xy[shock, 1] + s1.k
    # shock data wins at the shared corner
    uniq, pos = np.unique(idx[::-1], return_index=True)
    return uniq, vals[::-1][pos]


def solve_bvp_fixed_shock(
    domain: Domain,
    solver: SolverConfig,
    psi0: Optional[np.ndarray] = None,
    scale: Optional[float] = None,
) -> Field:
    """Solve the fixed-shock boundary value problem.

    Damped Picard iterations on the density coefficient until the residual
    falls below ``picard_switch * scale``, then Newton with backtracking.

    Raises
    ------
    VacuumEncountered
        If the initial state already cavitates.
    InnerDiverged
        If the residual stagnates above ``tol_pde * scale`` or the iteration
        cap is hit.
    """
    mesh = transfinite_mesh(domain, solver.n1, solver.n2)
    disc = Discretization(mesh, domain.gas, solver.delta_e)
    if scale is None:
        scale = potential_scale(domain, mesh)
    d_idx, d_val = _dirichlet(domain, mesh)
    free = np.setdiff1d(np.arange(disc.n), d_idx)

    xy = mesh.xy
    if psi0 is None:
        s2 = domain.state2
        psi = s2.u * xy[:, 0] + s2.v * xy[:, 1] + s2.k
    else:
        psi = np.array(psi0, dtype=float)
    psi[d_idx] = d_val
    area = disc.node_area[free]
    tol = solver.tol_pde * scale

    def measure(p):
        R = disc.residual(p)
        return R, float(np.max(np.abs(R[free]) / area)) if len(free) else 0.0

    R, res = measure(psi)
    it = 0
    best = res
    stall = 0
    while res > tol:
        if it >= solver.max_inner:
            raise InnerDiverged(f"inner solve hit {solver.max_inner} iterations, residual {res:.3e}")
        it += 1
        if res > solver.picard_switch * scale:
            A, b = disc.picard(psi)
            rhs = b[free] - A[free][:, d_idx] @ psi[d_idx]
            target = psi.copy()
            target[free] = spla.spsolve(A[free][:, free].tocsc(), rhs)
            direction = target - psi
        else:
            J = disc.jacobian(psi)
            direction = np.zeros_like(psi)
            direction[free] = spla.spsolve(J[free][:, free].tocsc(), -R[free])
        step = 1.0
        while True:
            trial = psi + step * direction
            try:
                R_t, res_t = measure(trial)
            except VacuumError:
                res_t = math.inf
            if res_t < res or step < 1.0 / 64.0:
                break
            step *= 0.5
        if not math.isfinite(res_t):
            raise VacuumEncountered("inner solve cannot avoid cavitation")
        psi, R, res = trial, R_t, res_t
        if res < 0.5 * best:
            best, stall = res, 0
        else:
            stall += 1
            if stall > 25:
                raise InnerDiverged(f"inner residual stagnated at {res:.3e}")
    return Field(domain, mesh, psi, disc, res, it, scale)


def _shock_segments(mesh: Mesh):
    nodes = mesh.nodes
    p = nodes[:, -1]
    inner = nodes[:, -2]
    d = np.diff(p, axis=0)
    length = np.hypot(d[:, 0], d[:, 1])
    n = np.stack([d[:, 1], -d[:, 0]], axis=1) / length[:, None]
    seg_mid = 0.5 * (p[1:] + p[:-1])
    in_mid = 0.5 * (inner[1:] + inner[:-1])
    flip = np.einsum("ik,ik->i", n, in_mid - seg_mid) > 0.0
    n[flip] *= -1.0
    return p, n, length


def shock_flux_residual(fld: Field) -> np.ndarray:
    """Mass-flux mismatch ``rho Dphi.n - rho1 Dphi1.n`` at each shock node.

    The Omega-side flux is the consistent (reaction) flux of the discrete
    solution, averaged against the hat function of the node; ``n`` points
    out of the elliptic region.  A free shock start copies its neighbour,
    since its reaction also contains the arc-side flux.
    """
    mesh = fld.mesh
    R = fld.disc.residual(fld.psi)[mesh.shock_nodes()]
    p, n, length = _shock_segments(mesh)
    s1 = fld.domain.state1
    F = np.zeros(len(p))
    L = np.zeros(len(p))
    g = 0.5 / math.sqrt(3.0)
    for tau in (0.5 - g, 0.5 + g):
        x = p[:-1] + tau * (p[1:] - p[:-1])
        flux = s1.rho * ((s1.u - x[:, 0]) * n[:, 0] + (s1.v - x[:, 1]) * n[:, 1])
        F[:-1] += 0.5 * length * flux * (1.0 - tau)
        F[1:] += 0.5 * length * flux * tau
    L[:-1] += 0.5 * length
    L[1:] += 0.5 * length
    r = (R - F) / L
    if not fld.domain.shock.start_fixed:
        r[0] = r[1]
    return r


def _free_mask(shock: ShockCurve) -> np.ndarray:
    m = np.ones(len(shock.points), dtype=bool)
    if shock.start_fixed:
        m[0] = False
    return m


def _even(k):
    c = np.zeros(2 * k + 1)
    c[-1] = 1.0
    return c


def shape_modes(shock: ShockCurve, modes: int) -> np.ndarray:
    """Horizontal displacement fields used to move the shock, one per column.

    Even Chebyshev polynomials in ``eta / eta_start`` keep the foot
    orthogonal to the axis.  With a fixed start they are shifted to vanish
    there.
    """
    x = shock.points[:, 1] / shock.points[0, 1]
    if shock.start_fixed:
        cols = [C.chebval(x, _even(k)) - 1.0 for k in range(1, modes + 1)]
    else:
        cols = [C.chebval(x, _even(k)) for k in range(modes)]
    return np.stack(cols, axis=1)


def shift_shock(shock: ShockCurve, dxi) -> ShockCurve:
    pts = shock.points.copy()
    pts[:, 0] += dxi
    return ShockCurve(pts, shock.start_fixed)


def flux_jacobian(fld: Field, solver: SolverConfig, r: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Forward-difference derivative of the flux mismatch along each shape mode."""
    eps = solver.sensitivity_step * max(1.0, float(np.ptp(fld.mesh.xy, axis=0).max()))
    shock = fld.domain.shock
    J = np.empty((len(r), basis.shape[1]))
    for k in range(basis.shape[1]):
        moved = fld.domain.with_shock(shift_shock(shock, eps * basis[:, k]))
        f2 = solve_bvp_fixed_shock(moved, solver, fld.psi, fld.scale)
        J[:, k] = (shock_flux_residual(f2) - r) / eps
    return J


def _cell_width(fld: Field) -> np.ndarray:
    nodes = fld.mesh.nodes
    return np.hypot(*(nodes[:, -1] - nodes[:, -2]).T)


def update_shock(
    fld: Field,
    shock: ShockCurve,
    solver: SolverConfig,
    residual: Optional[np.ndarray] = None,
    jacobian: Optional[np.ndarray] = None,
    relax: Optional[float] = None,
) -> ShockCurve:
    """One damped Gauss-Newton move of the free shock.

    The displacement is a combination of smooth shape modes whose
    coefficients minimize the linearized flux mismatch in least squares;
    ``relax`` scales the step and no node moves more than its local cell
    width.  A fixed start stays put and the foot stays on the axis.

    Raises
    ------
    SensitivityDegenerate
        If the mismatch does not respond to any shape mode.
    """
    relax = solver.relax if relax is None else relax
    r = shock_flux_residual(fld) if residual is None else residual
    free = _free_mask(shock)
    if not np.any(r[free]):
        return shock
    basis = shape_modes(shock, solver.shock_modes)
    J = flux_jacobian(fld, solver, r, basis) if jacobian is None else jacobian
    Jf = J[free]
    norms = np.linalg.norm(Jf, axis=0)
    if not np.max(norms) > solver.sensitivity_floor:
        raise SensitivityDegenerate("flux mismatch does not respond to any shock displacement")
    norms = np.where(norms > 0.0, norms, 1.0)
    coef, *_ = np.linalg.lstsq(Jf / norms, -r[free], rcond=1e-10)
    dxi = relax * basis @ (coef / norms)
    peak = np.abs(dxi)
    width = _cell_width(fld)
    if np.any(peak > width):
        dxi *= float(np.min(width[peak > 0] / peak[peak > 0]).clip(max=1.0))
    return shift_shock(shock, dxi)


@dataclass
class BisectionState:
    """Per-node step sizes of the sign-bisection fallback."""

    step: np.ndarray
    last_sign: np.ndarray


def bisection_step(fld: Field, shock: ShockCurve, r: np.ndarray, state: Optional[BisectionState]):
    """Fallback move when the sensitivity is degenerate.

    Each free node steps against the sign of its mismatch (the mismatch
    grows as the shock moves towards the wedge), halving its step whenever
    that sign flips.
    """
    sign = np.sign(r)
    if state is None:
        state = BisectionState(_cell_width(fld), sign)
    else:
        state.step[sign != state.last_sign] *= 0.5
        state.last_sign = sign
    dxi = -sign * state.step
    dxi[~_free_mask(shock)] = 0.0
    return shift_shock(shock, dxi), state


@dataclass
class SolveResult:
    field: Field
    shock: ShockCurve
    config: Optional[ReflectionConfiguration]
    diagnostics: "Diagnostics"
    converged: bool
    outer_iterations: int
    history: list = field(default_factory=list)
    relax: float = 0.5
    solver: Optional[SolverConfig] = None


def iterate_free_boundary(domain: Domain, solver: SolverConfig, config=None) -> SolveResult:
    """Alternate fixed-shock solves and shock updates until both residuals pass.

    The shape Jacobian is reused between updates (a chord iteration) and
    refreshed when a step is rejected or contracts poorly.  A step that
    raises the max-norm mismatch is undone and ``relax`` halved, down to
    ``relax_floor``; three updates without progress at that floor end
    the iteration early.

    Raises
    ------
    NotConverged
        When ``max_outer`` updates do not reach ``tol_rh``; the exception
        carries the last iterate with full diagnostics.
    """
    from .diagnostics import run_diagnostics

    shock = domain.shock
    fld = solve_bvp_fixed_shock(domain, solver)
    scale = fld.scale
    r = shock_flux_residual(fld)
    free = _free_mask(shock)
    rmax = float(np.max(np.abs(r[free])))
    history = [rmax]
    relax = solver.relax
    J = None
    bisect = None
    stalled = 0
    it = 0
    converged = rmax <= solver.tol_rh * scale
    while not converged and it < solver.max_outer:
        it += 1
        while True:
            fresh = J is None
            if fresh:
                try:
                    J = flux_jacobian(fld, solver, r, shape_modes(shock, solver.shock_modes))
                except (InnerDiverged, VacuumEncountered):
                    J = np.zeros((len(r), solver.shock_modes))
            try:
                trial = update_shock(fld, shock, solver, r, J, relax)
            except SensitivityDegenerate:
                log.info("outer %d: degenerate sensitivity, bisection step", it)
                trial, bisect = bisection_step(fld, shock, r, bisect)
            try:
                f_new = solve_bvp_fixed_shock(domain.with_shock(trial), solver, fld.psi, scale)
                r_new = shock_flux_residual(f_new)
                rmax_new = float(np.max(np.abs(r_new[free])))
            except (InnerDiverged, VacuumEncountered):
                f_new, r_new, rmax_new = None, None, math.inf
            if rmax_new <= rmax:
                break
            if not fresh:
                J = None
                continue
            if relax <= solver.relax_floor:
                if f_new is None:
                    raise InnerDiverged("no admissible shock update at the smallest relaxation")
                break
            relax = max(0.5 * relax, solver.relax_floor)
            log.info("outer %d: residual rose to %.3e, relax -> %g", it, rmax_new, relax)
        if rmax_new > 0.8 * rmax:
            J = None
        stalled = stalled + 1 if rmax_new > 0.99 * rmax and relax <= solver.relax_floor else 0
        shock, fld, r, rmax = trial, f_new, r_new, rmax_new
        history.append(rmax)
        log.info("outer %d: rh residual %.3e (relax %g)", it, rmax, relax)
        converged = rmax <= solver.tol_rh * scale
        if stalled >= 3:
            log.info("outer %d: no progress at the smallest relaxation, stopping", it)
            break
    diag = run_diagnostics(fld, shock, config, converged, it)
    result = SolveResult(fld, shock, config, diag, converged, it, history, relax, solver)
    if not converged:
        raise NotConverged(
            f"free boundary not converged after {it} updates: rh residual {rmax:.3e} "
            f"> {solver.tol_rh * scale:.3e}",
            result,
        )
    return result


def solve_regular_reflection(
    gamma: float,
    rho0: float,
    rho1: float,
    theta_w: float,
    branch: str = "weak",
    solver: Optional[SolverConfig] = None,
) -> SolveResult:
    """Full regular-reflection solve for one wedge angle (radians).

    Raises
    ------
    NoRoot
        Below the detachment angle.
    NotConverged
        With the last iterate and its diagnostics attached.
    VacuumEncountered
        If a field solve cavitates.
    """
    solver = solver or SolverConfig()
    gas = GasModel(gamma, rho0)
    state1, _ = solve_state1(gas, rho1)
    polar = solve_state2(gas, rho1, theta_w, branch)
    config = build_configuration(gas, state1, polar, theta_w)
    guess = initial_shock_guess(config, n=solver.n1 + 1)
    domain = domain_from_configuration(config, guess)
    result = iterate_free_boundary(domain, solver, config)
    return replace(result, config=config)


def normal_reflection_domain(
    gas: GasModel, rho1: float, height: float = 1.0, n1: int = 32, offset: float = 0.0
) -> Domain:
    """Rectangular column analogue of the wedge-angle-pi/2 configuration.

    The region is ``[xi_bar + offset, 0] x [0, height]``: the shock is the
    vertical line at ``xi_bar + offset`` with a sliding top end, the wall
    ``xi = 0`` plays the wedge and the top edge carries the reflected
    state as Dirichlet data.  With ``offset = 0`` the exact solution is the
    uniform reflected state.
    """
    from ..states import normal_reflection

    state1, _ = solve_state1(gas, rho1)
    nr = normal_reflection(gas, rho1)
    x = nr.xi_bar + offset
    eta = np.linspace(height, 0.0, n1 + 1)
    shock = ShockCurve(np.stack([np.full_like(eta, x), eta], axis=1), start_fixed=False)
    return Domain(
        gas=gas,
        state1=state1,
        state2=nr.state(),
        P4=np.array([0.0, height]),
        shock=shock,
        arc_center=None,
        arc_radius=0.0,
        supersonic=True,
        e_dir=None,
    )
