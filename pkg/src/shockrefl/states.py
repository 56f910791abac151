"""Uniform states (0), (1), the incident shock and the normal reflection.

A uniform state with velocity ``(u, v)``, density ``rho`` and constant ``k``
has pseudo-potential ``phi = -(xi**2 + eta**2)/2 + u*xi + v*eta + k`` and
pseudo-velocity ``Dphi = (u - xi, v - eta)``.  Bernoulli ties the constants
together: ``(u**2 + v**2)/2 + k = h(rho0) - h(rho)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, NoIncidentShock
from .gas import GasModel


@dataclass(frozen=True)
class UniformState:
    u: float
    v: float
    rho: float
    k: float

    def phi(self, xi, eta):
        return -0.5 * (xi * xi + eta * eta) + self.u * xi + self.v * eta + self.k

    def pseudo_velocity(self, xi, eta):
        return self.u - xi, self.v - eta

    @property
    def velocity(self):
        return np.array([self.u, self.v])


@dataclass(frozen=True)
class IncidentShock:
    """Vertical incident shock ``{xi = xi0}``."""

    xi0: float


@dataclass(frozen=True)
class NormalReflection:
    """Flat reflected shock at ``xi = xi_bar`` with state at rest behind it."""

    rho2_bar: float
    xi_bar: float
    k2_bar: float

    def state(self) -> UniformState:
        return UniformState(0.0, 0.0, self.rho2_bar, self.k2_bar)


def bernoulli_defect(gas: GasModel, state: UniformState) -> float:
    """Relative violation of the uniform-state Bernoulli relation."""
    lhs = 0.5 * (state.u**2 + state.v**2) + state.k
    rhs = gas.enthalpy(gas.rho0) - gas.enthalpy(state.rho)
    return abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))


def state0(gas: GasModel) -> UniformState:
    return UniformState(0.0, 0.0, gas.rho0, 0.0)


def _check_densities(gas: GasModel, rho1: float):
    if not rho1 > gas.rho0:
        raise NoIncidentShock(
            f"incident shock needs rho1 > rho0 (rho0={gas.rho0}, rho1={rho1})"
        )


def incident_speed(gas: GasModel, rho1: float) -> float:
    """Velocity ``u1`` behind the incident shock.

    Eliminating ``xi0`` and ``k1`` from mass conservation, potential
    continuity and Bernoulli gives
    ``u1**2 = 2 (rho1 - rho0)(h(rho1) - h(rho0)) / (rho1 + rho0)``.
    """
    _check_densities(gas, rho1)
    rho0 = gas.rho0
    dh = gas.enthalpy(rho1) - gas.enthalpy(rho0)
    return math.sqrt(2.0 * (rho1 - rho0) * dh / (rho1 + rho0))


def solve_state1(gas: GasModel, rho1: float) -> tuple[UniformState, IncidentShock]:
    """State (1) and the incident shock position for densities rho0 < rho1."""
    u1 = incident_speed(gas, rho1)
    xi0 = rho1 * u1 / (rho1 - gas.rho0)
    k1 = -u1 * xi0
    return UniformState(u1, 0.0, rho1, k1), IncidentShock(xi0)


def paper_u1(gas: GasModel, rho1: float) -> float:
    """Closed form ``(rho1-rho0) sqrt(2 (rho1^(g-1) - rho0^(g-1)) / (rho1^2 - rho0^2))``.

    Kept for cross-checking only.  It omits a ``1/(gamma-1)`` factor relative
    to the enthalpy normalization and so equals :func:`incident_speed` only
    at ``gamma = 2``.
    """
    _check_densities(gas, rho1)
    rho0, g1 = gas.rho0, gas.gamma - 1.0
    return (rho1 - rho0) * math.sqrt(
        2.0 * (rho1**g1 - rho0**g1) / (rho1**2 - rho0**2)
    )


def evaluate_state(state: UniformState, point):
    """Return ``(phi, Dphi, rho)`` of a uniform state at ``point``."""
    xi, eta = float(point[0]), float(point[1])
    du, dv = state.pseudo_velocity(xi, eta)
    return state.phi(xi, eta), np.array([du, dv]), state.rho


def rh_residual(state_a: UniformState, state_b: UniformState, point, normal):
    """Jumps ``phi_a - phi_b`` and ``rho_a Dphi_a.n - rho_b Dphi_b.n`` at ``point``."""
    n = np.asarray(normal, dtype=float)
    if abs(math.hypot(n[0], n[1]) - 1.0) > 1e-12:
        raise ValueError("normal must have unit length")
    phi_a, d_a, rho_a = evaluate_state(state_a, point)
    phi_b, d_b, rho_b = evaluate_state(state_b, point)
    return phi_a - phi_b, rho_a * float(d_a @ n) - rho_b * float(d_b @ n)


def _normal_reflection_residual(gas, state1, x):
    # potential continuity at xi_bar after eliminating xi_bar by mass flux
    u1, rho1 = state1.u, state1.rho
    xi_bar = rho1 * u1 / (rho1 - x)
    k2 = gas.enthalpy(gas.rho0) - gas.enthalpy(x)
    return u1 * xi_bar + state1.k - k2


def normal_reflection(gas: GasModel, rho1: float) -> NormalReflection:
    """Reflection of the incident shock off a wall normal to it.

    Behind the reflected shock the gas is at rest with density ``rho2_bar``;
    the root is sought with ``rho2_bar > rho1`` so that the shock sits left of
    the wall (``xi_bar < 0``).
    """
    state1, _ = solve_state1(gas, rho1)

    def f(x):
        return _normal_reflection_residual(gas, state1, x)

    lo = rho1 * (1.0 + 1e-14)
    hi = 100.0 * rho1
    # f -> -inf as x -> rho1+, f -> +inf as x -> inf
    while f(hi) <= 0.0:
        hi *= 10.0
        if hi > 1e6 * rho1:
            raise BracketError(f"normal reflection: no sign change up to {hi:g}")
    if f(lo) >= 0.0:
        raise BracketError("normal reflection: residual non-negative at rho1+")
    rho2 = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    xi_bar = state1.rho * state1.u / (state1.rho - rho2)
    k2 = gas.enthalpy(gas.rho0) - gas.enthalpy(rho2)
    return NormalReflection(rho2, xi_bar, k2)
