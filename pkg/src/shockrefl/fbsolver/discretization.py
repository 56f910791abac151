"""Bilinear-element (9-point stencil) discretization of the potential-flow equation.

The unknown is the self-similar potential ``psi = phi + (xi**2 + eta**2)/2``
at the mesh nodes.  Uniform states have linear ``psi``, which bilinear
elements reproduce exactly, so every uniform state solves the discrete
equations to round-off on any quadrilateral mesh (the 2x2 Gauss rule
integrates the resulting polynomial integrands exactly).

Weak form, for each test function ``w``::

    R(w) = sum_cells  int rho (Dpsi - x) . Dw  -  2 rho w  = 0

with ``rho`` from Bernoulli and the ellipticity cutoff applied to the
squared pseudo-speed.  For a Dirichlet node the same expression is the
consistent boundary flux ``int rho Dphi.n w ds``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import VacuumEncountered
from ..gas import GasModel
from .mesh import Mesh

_G = 1.0 / np.sqrt(3.0)
_QP = np.array([[-_G, -_G], [_G, -_G], [_G, _G], [-_G, _G]])
_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


def _shape(pts):
    """Bilinear shape values (q, 4) and reference gradients (q, 4, 2)."""
    a, b = pts[:, 0:1], pts[:, 1:2]
    ca, cb = _CORNERS[:, 0][None, :], _CORNERS[:, 1][None, :]
    N = 0.25 * (1 + ca * a) * (1 + cb * b)
    dNa = 0.25 * ca * (1 + cb * b)
    dNb = 0.25 * cb * (1 + ca * a)
    return N, np.stack([dNa, dNb], axis=-1)


@dataclass
class ElementData:
    """Per-cell geometric factors at the quadrature points (plus the cell center)."""

    conn: np.ndarray  # (ne, 4)
    N: np.ndarray  # (q, 4)
    dN: np.ndarray  # (ne, q, 4, 2) physical gradients
    wdet: np.ndarray  # (ne, q) weight * |det J|
    xq: np.ndarray  # (ne, q, 2)
    Nc: np.ndarray  # (4,)
    dNc: np.ndarray  # (ne, 4, 2) gradients at the cell center
    xc: np.ndarray  # (ne, 2)


def _geometry(X, ref_grad):
    # X: (ne, 4, 2), ref_grad: (q, 4, 2) -> physical gradients and det
    J = np.einsum("eak,qad->eqkd", X, ref_grad)  # d x_k / d ref_d
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    inv = np.empty_like(J)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv[..., 0, 0] = J[..., 1, 1] / det
        inv[..., 1, 1] = J[..., 0, 0] / det
        inv[..., 0, 1] = -J[..., 0, 1] / det
        inv[..., 1, 0] = -J[..., 1, 0] / det
    # grad_x N = J^{-T} grad_ref N
    dN = np.einsum("eqdk,qad->eqak", inv, ref_grad)
    return dN, det


def element_data(mesh: Mesh) -> ElementData:
    conn = mesh.elements()
    X = mesh.xy[conn]
    N, dref = _shape(_QP)
    dN, det = _geometry(X, dref)
    Nc, drefc = _shape(np.zeros((1, 2)))
    dNc, _ = _geometry(X, drefc)
    return ElementData(
        conn=conn,
        N=N,
        dN=dN,
        wdet=np.abs(det),
        xq=np.einsum("qa,eak->eqk", N, X),
        Nc=Nc[0],
        dNc=dNc[:, 0],
        xc=X.mean(axis=1),
    )


@dataclass
class PointState:
    """Pseudo-potential, gradient and density at a set of points."""

    phi: np.ndarray
    dphi: np.ndarray
    rho: np.ndarray
    drho_dB: np.ndarray
    cut: np.ndarray
    speed_sq: np.ndarray
    cstar_sq: np.ndarray


def point_state(gas: GasModel, psi_e, N, dN, x, delta_e: float, check_vacuum=True) -> PointState:
    """Evaluate ``phi, Dphi, rho`` from nodal ``psi`` (cells x points)."""
    psi = np.einsum("qa,ea->eq", N, psi_e) if N.ndim == 2 else np.einsum("a,ea->e", N, psi_e)
    if dN.ndim == 4:
        dpsi = np.einsum("eqak,ea->eqk", dN, psi_e)
    else:
        dpsi = np.einsum("eak,ea->ek", dN, psi_e)
    phi = psi - 0.5 * np.sum(x * x, axis=-1)
    dphi = dpsi - x
    speed_sq = np.sum(dphi * dphi, axis=-1)
    g = gas.gamma
    cstar_sq = 2.0 / (g + 1.0) * (gas.rho0 ** (g - 1.0) - (g - 1.0) * phi)
    limit = (1.0 - delta_e) * cstar_sq
    cut = speed_sq > limit
    eff = np.where(cut, limit, speed_sq)
    arg = gas.density_argument(eff, phi)
    if check_vacuum and np.any(~(arg > 0.0)):
        raise VacuumEncountered("cavitation in the elliptic region")
    arg = np.maximum(arg, 1e-300)
    rho = arg ** (1.0 / (g - 1.0))
    drho_dB = -(rho ** (2.0 - g))
    return PointState(phi, dphi, rho, drho_dB, cut, speed_sq, cstar_sq)


class Discretization:
    """Assembles residual, Jacobian and Picard operators on one mesh."""

    def __init__(self, mesh: Mesh, gas: GasModel, delta_e: float):
        self.mesh = mesh
        self.gas = gas
        self.delta_e = delta_e
        self.ed = element_data(mesh)
        conn = self.ed.conn
        self.n = mesh.xy.shape[0]
        self._rows = np.repeat(conn, 4, axis=1).ravel()
        self._cols = np.tile(conn, (1, 4)).ravel()
        # lumped nodal areas, used to turn integrated residuals into pointwise ones
        self.node_area = np.zeros(self.n)
        np.add.at(self.node_area, conn, np.einsum("eq,qa->ea", self.ed.wdet, self.ed.N))

    def state(self, psi, check_vacuum=True) -> PointState:
        ed = self.ed
        return point_state(self.gas, psi[ed.conn], ed.N, ed.dN, ed.xq, self.delta_e, check_vacuum)

    def cell_state(self, psi, delta_e=None) -> PointState:
        ed = self.ed
        d = self.delta_e if delta_e is None else delta_e
        return point_state(self.gas, psi[ed.conn], ed.Nc, ed.dNc, ed.xc, d, check_vacuum=False)

    def residual(self, psi, st: PointState = None) -> np.ndarray:
        ed = self.ed
        st = self.state(psi) if st is None else st
        flux = st.rho[..., None] * st.dphi  # (ne, q, 2)
        integrand = np.einsum("eqk,eqak->eqa", flux, ed.dN) - 2.0 * st.rho[..., None] * ed.N[None]
        local = np.einsum("eq,eqa->ea", ed.wdet, integrand)
        R = np.zeros(self.n)
        np.add.at(R, ed.conn, local)
        return R

    def picard(self, psi):
        """Linear operator and load with the density frozen at ``psi``."""
        ed = self.ed
        st = self.state(psi)
        w = ed.wdet * st.rho
        K = np.einsum("eq,eqak,eqbk->eab", w, ed.dN, ed.dN)
        load = np.einsum("eq,eqak,eqk->ea", w, ed.dN, ed.xq) + 2.0 * np.einsum("eq,qa->ea", w, ed.N)
        A = sp.csr_matrix((K.ravel(), (self._rows, self._cols)), shape=(self.n, self.n))
        b = np.zeros(self.n)
        np.add.at(b, ed.conn, load)
        return A, b

    def jacobian(self, psi, st: PointState = None):
        ed = self.ed
        st = self.state(psi) if st is None else st
        g = self.gas.gamma
        # dB/dpsi_b: uncut B = |Dphi|^2/2 + phi ; cut B = (1-d) c*^2/2 + phi
        cut_coef = 1.0 - (1.0 - self.delta_e) * (g - 1.0) / (g + 1.0)
        dB = np.where(
            st.cut[..., None],
            cut_coef * ed.N[None],
            np.einsum("eqk,eqbk->eqb", st.dphi, ed.dN) + ed.N[None],
        )
        drho = st.drho_dB[..., None] * dB  # (ne, q, b)
        test = np.einsum("eqk,eqak->eqa", st.dphi, ed.dN) - 2.0 * ed.N[None]  # (ne, q, a)
        K = np.einsum("eq,eqak,eqbk->eab", ed.wdet * st.rho, ed.dN, ed.dN)
        K += np.einsum("eq,eqa,eqb->eab", ed.wdet, test, drho)
        return sp.csr_matrix((K.ravel(), (self._rows, self._cols)), shape=(self.n, self.n))
