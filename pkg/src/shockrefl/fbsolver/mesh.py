"""Body-fitted quadrilateral mesh of the elliptic region by transfinite interpolation.

Logical indices: ``i = 0..n1`` runs along the shock (from its start to P2)
and along the wedge (from P4 to the tip P3); ``j = 0..n2`` runs along the
sonic arc (from P4 to the shock start) and along the axis (from P3 to P2).
So the four corners are::

    (0, 0) = P4    (0, n2) = P1
    (n1, 0) = P3   (n1, n2) = P2

The shock is row ``j = n2`` and the sonic arc is column ``i = 0``; both
carry Dirichlet data.  The wedge (row ``j = 0``) and axis (column ``i = n1``)
carry the zero-flux condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..gas import GasModel
from ..geometry import ReflectionConfiguration, ShockCurve
from ..states import UniformState


@dataclass(frozen=True)
class Domain:
    """Boundary description of the elliptic region for a given shock curve."""

    gas: GasModel
    state1: UniformState
    state2: UniformState
    P4: np.ndarray
    shock: ShockCurve
    arc_center: Optional[np.ndarray] = None
    arc_radius: float = 0.0
    supersonic: bool = True
    e_dir: Optional[np.ndarray] = None

    @property
    def P1(self) -> np.ndarray:
        return self.shock.start

    @property
    def P2(self) -> np.ndarray:
        return self.shock.end

    @property
    def P3(self) -> np.ndarray:
        return np.zeros(2)

    def with_shock(self, shock: ShockCurve) -> "Domain":
        return Domain(
            self.gas,
            self.state1,
            self.state2,
            self.P4,
            shock,
            self.arc_center,
            self.arc_radius,
            self.supersonic,
            self.e_dir,
        )

    def arc_nodes(self, n2: int) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n2 + 1)
        if self.arc_center is None:
            return self.P4[None, :] + t[:, None] * (self.P1 - self.P4)[None, :]
        c = self.arc_center
        a4 = math.atan2(self.P4[1] - c[1], self.P4[0] - c[0])
        a1 = math.atan2(self.P1[1] - c[1], self.P1[0] - c[0])
        if a1 < a4:
            a1 += 2.0 * math.pi
        ang = a4 + t * (a1 - a4)
        pts = c[None, :] + self.arc_radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        pts[0], pts[-1] = self.P4, self.P1
        return pts


def domain_from_configuration(config: ReflectionConfiguration, shock: ShockCurve) -> Domain:
    return Domain(
        gas=config.gas,
        state1=config.state1,
        state2=config.state2,
        P4=np.asarray(config.P4, dtype=float),
        shock=shock,
        arc_center=np.asarray(config.sonic_center, dtype=float) if config.supersonic else None,
        arc_radius=float(config.sonic_radius) if config.supersonic else 0.0,
        supersonic=config.supersonic,
        e_dir=None if config.e_dir is None else np.asarray(config.e_dir, dtype=float),
    )


@dataclass(frozen=True)
class Mesh:
    """Structured mesh; ``nodes[i, j]`` holds ``(xi, eta)``."""

    nodes: np.ndarray

    @property
    def n1(self) -> int:
        return self.nodes.shape[0] - 1

    @property
    def n2(self) -> int:
        return self.nodes.shape[1] - 1

    @property
    def xy(self) -> np.ndarray:
        return self.nodes.reshape(-1, 2)

    def index(self, i, j):
        return np.asarray(i) * (self.n2 + 1) + np.asarray(j)

    def elements(self) -> np.ndarray:
        """Node indices of each cell, counter-clockwise in logical space."""
        i, j = np.meshgrid(np.arange(self.n1), np.arange(self.n2), indexing="ij")
        i, j = i.ravel(), j.ravel()
        return np.stack(
            [self.index(i, j), self.index(i + 1, j), self.index(i + 1, j + 1), self.index(i, j + 1)],
            axis=1,
        )

    def shock_nodes(self) -> np.ndarray:
        return self.index(np.arange(self.n1 + 1), self.n2)

    def arc_nodes(self) -> np.ndarray:
        return self.index(0, np.arange(self.n2 + 1))

    def cell_centers(self) -> np.ndarray:
        p = self.nodes
        c = 0.25 * (p[:-1, :-1] + p[1:, :-1] + p[1:, 1:] + p[:-1, 1:])
        return c.reshape(-1, 2)


def transfinite_mesh(domain: Domain, n1: int, n2: int) -> Mesh:
    """Coons-patch interpolation between the four boundary curves.

    The shock polyline must have ``n1 + 1`` points.
    """
    top = np.asarray(domain.shock.points, dtype=float)
    if len(top) != n1 + 1:
        raise ValueError(f"shock has {len(top)} points, mesh needs {n1 + 1}")
    s = np.linspace(0.0, 1.0, n1 + 1)
    t = np.linspace(0.0, 1.0, n2 + 1)
    P1, P2, P3, P4 = top[0], top[-1], domain.P3, domain.P4
    bottom = P4[None, :] + s[:, None] * (P3 - P4)[None, :]
    left = domain.arc_nodes(n2)
    right = P3[None, :] + t[:, None] * (P2 - P3)[None, :]

    S, T = s[:, None, None], t[None, :, None]
    nodes = (
        (1 - T) * bottom[:, None, :]
        + T * top[:, None, :]
        + (1 - S) * left[None, :, :]
        + S * right[None, :, :]
        - (
            (1 - S) * (1 - T) * P4
            + S * (1 - T) * P3
            + (1 - S) * T * P1
            + S * T * P2
        )
    )
    # keep boundary nodes exactly on their curves
    nodes[:, -1] = top
    nodes[:, 0] = bottom
    nodes[0, :] = left
    nodes[-1, :] = right
    return Mesh(nodes)
