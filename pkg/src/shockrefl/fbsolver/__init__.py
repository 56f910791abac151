"""Free-boundary solver for the elliptic region behind the reflected shock."""

from .diagnostics import Diagnostics, run_diagnostics
from .mesh import Domain, Mesh, domain_from_configuration, transfinite_mesh
from .solver import (
    Field,
    SolveResult,
    SolverConfig,
    shock_flux_residual,
    solve_bvp_fixed_shock,
    solve_regular_reflection,
    update_shock,
)

__all__ = [
    "Diagnostics",
    "Domain",
    "Field",
    "Mesh",
    "SolveResult",
    "SolverConfig",
    "domain_from_configuration",
    "run_diagnostics",
    "shock_flux_residual",
    "solve_bvp_fixed_shock",
    "solve_regular_reflection",
    "transfinite_mesh",
    "update_shock",
]
