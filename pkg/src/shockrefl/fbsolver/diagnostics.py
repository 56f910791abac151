"""Discrete checks of the admissible-solution properties on a computed field."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..geometry import ReflectionConfiguration, ShockCurve


@dataclass(frozen=True)
class Diagnostics:
    """Property checks of one solution; all entries are finite floats.

    Violations are absolute; compare them against ``tolerance * scale``.
    """

    rh_residual_max: float
    ellipticity_min_margin: float
    bounds_violation: float
    monotonicity_violation: float
    shock_convexity_defect: float
    sonic_matching: float
    shock_to_sonic1_distance: float
    cutoff_cells_off_layer: int
    inner_residual: float
    scale: float
    converged: bool
    outer_iterations: int

    def to_dict(self) -> dict:
        return asdict(self)

    def within_acceptance(self) -> dict:
        """Pass/fail of each converged-solution threshold."""
        s = self.scale
        return {
            "rh_residual": self.rh_residual_max <= 1e-3 * s,
            "bounds": self.bounds_violation <= 1e-8 * s,
            "monotonicity": self.monotonicity_violation <= 1e-6 * s,
            "ellipticity": self.ellipticity_min_margin > 0.0,
            "convexity": self.shock_convexity_defect <= 1e-6 * s,
            "sonic1_distance": self.shock_to_sonic1_distance > 0.0,
        }


def node_gradients(nodes: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Gradient at every node by centered differences in logical space.

    Interior nodes use centered differences, edges second-order one-sided
    ones; the chain rule through the mesh map makes linear fields exact.
    """
    f = phi.reshape(nodes.shape[:2])
    fs = np.gradient(f, axis=0, edge_order=2)
    ft = np.gradient(f, axis=1, edge_order=2)
    xs = np.gradient(nodes, axis=0, edge_order=2)
    xt = np.gradient(nodes, axis=1, edge_order=2)
    det = xs[..., 0] * xt[..., 1] - xs[..., 1] * xt[..., 0]
    gx = (fs * xt[..., 1] - ft * xs[..., 1]) / det
    gy = (ft * xs[..., 0] - fs * xt[..., 0]) / det
    return np.stack([gx, gy], axis=-1)


def shock_curvature(points: np.ndarray) -> np.ndarray:
    """Discrete curvature of ``xi = f(eta)`` at interior polyline nodes.

    Positive when the shock bends towards larger ``xi`` (into the elliptic
    region), the expected sign for a convex shock.
    """
    p = np.asarray(points, dtype=float)
    a, b, c = p[:-2], p[1:-1], p[2:]
    # signed curvature of the circle through three consecutive points
    ab, bc, ca = b - a, c - b, a - c
    cross = ab[:, 0] * bc[:, 1] - ab[:, 1] * bc[:, 0]
    la, lb, lc = (np.hypot(*v.T) for v in (ab, bc, ca))
    # nodes run downwards in eta, so f'' > 0 turns the polyline anticlockwise
    return 2.0 * cross / (la * lb * lc)


def run_diagnostics(
    fld,
    shock: ShockCurve,
    config: Optional[ReflectionConfiguration] = None,
    converged: bool = False,
    outer_iterations: int = 0,
) -> Diagnostics:
    """Evaluate every admissible-solution check on ``fld``; never raises."""
    from .solver import _free_mask, shock_flux_residual

    dom = fld.domain
    mesh = fld.mesh
    s1, s2 = dom.state1, dom.state2
    xy = mesh.xy
    phi = fld.phi

    r = shock_flux_residual(fld)
    rh = float(np.max(np.abs(r[_free_mask(shock)])))

    # the arc layer is the first column of cells (i = 0) in the supersonic case
    cells_i = np.repeat(np.arange(mesh.n1), mesh.n2)
    layer = cells_i == 0 if dom.supersonic else np.zeros(len(cells_i), dtype=bool)
    margin = fld.ellipticity_margin()
    off = ~layer
    ell = float(np.min(margin[off]))
    cut_off = int(np.count_nonzero(fld.cut_cells & off))

    p1 = s1.phi(xy[:, 0], xy[:, 1])
    p2 = s2.phi(xy[:, 0], xy[:, 1])
    bounds = float(max(np.max(p2 - phi), np.max(phi - p1), 0.0))

    # monotonicity is a property of the open region: interior nodes only
    nodes = mesh.nodes
    grad = node_gradients(nodes, phi)[1:-1, 1:-1].reshape(-1, 2)
    inner = nodes[1:-1, 1:-1].reshape(-1, 2)
    d1 = np.stack([s1.u - inner[:, 0], s1.v - inner[:, 1]], axis=1)
    dd = d1 - grad  # D(phi1 - phi)
    mono = float(max(np.max(dd[:, 1]), 0.0))
    e = dom.e_dir
    if e is not None:
        mono = max(mono, float(max(np.max(dd @ e), 0.0)))

    kappa = shock_curvature(shock.points)
    convex = float(max(np.max(-kappa), 0.0)) if len(kappa) else 0.0

    st = fld.cells
    dphi2 = np.stack([s2.u - mesh.cell_centers()[:, 0], s2.v - mesh.cell_centers()[:, 1]], axis=1)
    mismatch = np.hypot(*(st.dphi - dphi2).T)
    if dom.supersonic:
        match = float(np.max(mismatch[layer]))
    else:
        # cells touching P0 (logical corner (0, n2))
        corner = (cells_i == 0) & (np.tile(np.arange(mesh.n2), mesh.n1) == mesh.n2 - 1)
        match = float(np.max(mismatch[corner]))

    c1 = dom.gas.sound_speed(s1.rho)
    dist = float(np.min(np.hypot(shock.points[:, 0] - s1.u, shock.points[:, 1] - s1.v)) - c1)

    vals = dict(
        rh_residual_max=rh,
        ellipticity_min_margin=ell,
        bounds_violation=bounds,
        monotonicity_violation=mono,
        shock_convexity_defect=convex,
        sonic_matching=match,
        shock_to_sonic1_distance=dist,
    )
    for k, v in vals.items():
        if not math.isfinite(v):
            vals[k] = float(np.finfo(float).max)
    return Diagnostics(
        **vals,
        cutoff_cells_off_layer=cut_off,
        inner_residual=float(fld.inner_residual),
        scale=float(fld.scale),
        converged=bool(converged),
        outer_iterations=int(outer_iterations),
    )
