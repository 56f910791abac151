"""Polytropic gas closures in the kappa = 1/gamma scaling.

With this scaling the sound speed obeys ``c**2 = rho**(gamma - 1)`` and the
enthalpy is ``h(rho) = (rho**(gamma - 1) - 1) / (gamma - 1)``.  The Bernoulli
constant is pinned to ``h(rho0)`` by the quiescent upstream state (0), which
gives the density as an explicit function of the pseudo-potential and its
gradient.

All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, VacuumError


def _out(x):
    # numpy scalars -> python floats, arrays untouched
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class GasModel:
    """Polytropic potential-flow gas.

    Parameters
    ----------
    gamma : float
        Adiabatic exponent, strictly greater than one.
    rho0 : float
        Density of the quiescent state (0); fixes the Bernoulli constant.
    """

    gamma: float
    rho0: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 1.0:
            raise DomainError(f"gamma must exceed 1, got {self.gamma!r}")
        if not np.isfinite(self.rho0) or self.rho0 <= 0.0:
            raise DomainError(f"rho0 must be positive, got {self.rho0!r}")

    @property
    def bernoulli_constant(self) -> float:
        return self.enthalpy(self.rho0)

    def _check_rho(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(~(rho > 0.0)):
            raise DomainError("density must be positive")
        return rho

    def enthalpy(self, rho):
        rho = self._check_rho(rho)
        g1 = self.gamma - 1.0
        return _out((rho**g1 - 1.0) / g1)

    def enthalpy_inverse(self, h):
        """Density with enthalpy ``h``; raises VacuumError if none exists."""
        g1 = self.gamma - 1.0
        arg = 1.0 + g1 * np.asarray(h, dtype=float)
        if np.any(~(arg > 0.0)):
            raise VacuumError("enthalpy below the vacuum value")
        return _out(arg ** (1.0 / g1))

    def sound_speed(self, rho):
        rho = self._check_rho(rho)
        return _out(rho ** (0.5 * (self.gamma - 1.0)))

    def density_argument(self, speed_sq, phi):
        """``rho**(gamma-1)`` from Bernoulli, without the vacuum check."""
        speed_sq = np.asarray(speed_sq, dtype=float)
        phi = np.asarray(phi, dtype=float)
        g1 = self.gamma - 1.0
        return self.rho0**g1 - g1 * (0.5 * speed_sq + phi)

    def density_from_bernoulli(self, speed_sq, phi):
        """Density from ``h(rho) + |Dphi|**2 / 2 + phi = h(rho0)``.

        Raises
        ------
        DomainError
            If ``speed_sq`` is negative.
        VacuumError
            If the Bernoulli law leaves no positive density.
        """
        if np.any(np.asarray(speed_sq) < 0.0):
            raise DomainError("squared speed must be non-negative")
        arg = self.density_argument(speed_sq, phi)
        if np.any(~(arg > 0.0)):
            raise VacuumError("cavitation: Bernoulli density argument <= 0")
        return _out(arg ** (1.0 / (self.gamma - 1.0)))

    def critical_speed_sq(self, phi):
        g = self.gamma
        phi = np.asarray(phi, dtype=float)
        return _out(2.0 / (g + 1.0) * (self.rho0 ** (g - 1.0) - (g - 1.0) * phi))

    def critical_speed(self, phi):
        """Sonic threshold ``c_*(phi)`` on ``|Dphi|``."""
        csq = np.asarray(self.critical_speed_sq(phi))
        if np.any(csq < 0.0):
            raise DomainError("no sonic threshold: negative radicand")
        return _out(np.sqrt(csq))

    def is_elliptic(self, pseudo_velocity, phi):
        """Type of the potential-flow equation at one state.

        Returns ``(elliptic, margin)`` with ``margin = c_*(phi) - |Dphi|``.
        The sonic case (zero margin) is not elliptic.
        """
        dphi = np.asarray(pseudo_velocity, dtype=float)
        speed_sq = float(dphi @ dphi)
        # raises VacuumError when the state cavitates
        self.density_from_bernoulli(speed_sq, phi)
        margin = self.critical_speed(phi) - np.sqrt(speed_sq)
        return bool(margin > 0.0), float(margin)
