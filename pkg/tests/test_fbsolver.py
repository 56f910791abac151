import dataclasses
import json
import math

import numpy as np
import pytest

from shockrefl import GasModel, normal_reflection
from shockrefl.errors import NoRoot, NotConverged
from shockrefl.fbsolver import (
    SolverConfig,
    run_diagnostics,
    shock_flux_residual,
    solve_bvp_fixed_shock,
    solve_regular_reflection,
    transfinite_mesh,
    update_shock,
)
from shockrefl.fbsolver.diagnostics import shock_curvature
from shockrefl.fbsolver.io import dumps, fmt, load_solution, rediagnose, write_solution
from shockrefl.fbsolver.solver import (
    iterate_free_boundary,
    normal_reflection_domain,
    shape_modes,
)

GAS = GasModel(2.0, 1.0)
COARSE = SolverConfig(n1=16, n2=16)


@pytest.fixture(scope="module")
def exact_column():
    dom = normal_reflection_domain(GAS, 2.0, n1=16)
    return dom, solve_bvp_fixed_shock(dom, COARSE)


def test_solver_config_defaults_and_validation():
    cfg = SolverConfig()
    assert (cfg.n1, cfg.n2) == (64, 64)
    assert cfg.to_dict()["delta_e"] == cfg.delta_e
    bad = [
        dict(n1=4),
        dict(n2=0),
        dict(delta_e=0.0),
        dict(delta_e=1.0),
        dict(relax=0.0),
        dict(relax=1.5),
        dict(tol_pde=0.0),
        dict(tol_rh=-1.0),
        dict(max_outer=0),
        dict(max_inner=0),
    ]
    for kw in bad:
        with pytest.raises(ValueError):
            SolverConfig(**kw)


def test_column_reproduces_reflected_state(exact_column):
    dom, fld = exact_column
    xy = fld.mesh.xy
    exact = dom.state2.phi(xy[:, 0], xy[:, 1])
    assert np.max(np.abs(fld.phi - exact)) < 1e-10
    assert np.max(np.abs(shock_flux_residual(fld))) < 1e-10 * fld.scale


def test_dirichlet_data_is_imposed(exact_column):
    dom, fld = exact_column
    mesh = fld.mesh
    shock = mesh.shock_nodes()
    arc = mesh.arc_nodes()
    xy = mesh.xy
    assert np.array_equal(fld.phi[shock], dom.state1.phi(xy[shock, 0], xy[shock, 1]))
    arc_only = np.setdiff1d(arc, shock)
    assert np.allclose(fld.phi[arc_only], dom.state2.phi(xy[arc_only, 0], xy[arc_only, 1]), atol=1e-14)


def test_exact_column_diagnostics_vanish(exact_column):
    _, fld = exact_column
    d = run_diagnostics(fld, fld.domain.shock)
    for name in ("bounds_violation", "monotonicity_violation", "shock_convexity_defect", "sonic_matching"):
        assert getattr(d, name) <= 1e-12, name
    assert d.rh_residual_max <= 1e-12 * d.scale
    assert d.ellipticity_min_margin > 0.0
    assert d.cutoff_cells_off_layer == 0


def test_update_leaves_exact_shock_in_place(exact_column):
    dom, fld = exact_column
    moved = update_shock(fld, dom.shock, COARSE)
    assert np.max(np.abs(moved.points - dom.shock.points)) < 1e-10


def test_update_contracts_towards_exact_shock():
    nr = normal_reflection(GAS, 2.0)
    dom = normal_reflection_domain(GAS, 2.0, n1=16, offset=0.1)
    fld = solve_bvp_fixed_shock(dom, COARSE)
    moved = update_shock(fld, dom.shock, COARSE)
    before = np.max(np.abs(dom.shock.points[:, 0] - nr.xi_bar))
    after = np.max(np.abs(moved.points[:, 0] - nr.xi_bar))
    assert after <= 0.7 * before
    # vertical coordinates are untouched
    assert np.array_equal(moved.points[:, 1], dom.shock.points[:, 1])


def test_column_free_boundary_converges():
    nr = normal_reflection(GAS, 2.0)
    dom = normal_reflection_domain(GAS, 2.0, n1=16, offset=0.1)
    res = iterate_free_boundary(dom, COARSE)
    assert res.converged
    assert np.max(np.abs(res.shock.points[:, 0] - nr.xi_bar)) < 1e-3


def test_shape_modes_keep_axis_orthogonality(golden_result):
    shock = golden_result.shock
    basis = shape_modes(shock, 6)
    eta = shock.points[:, 1]
    assert basis.shape == (len(eta), 6)
    # a fixed start does not move
    assert np.allclose(basis[0], 0.0, atol=1e-14)
    # even in eta: the one-sided slope at the foot is O(h), not O(1)
    h = eta[-2] - eta[-1]
    slope = (basis[-2] - basis[-1]) / h
    assert np.all(np.abs(slope) < 200.0 * h / eta[0] ** 2)


def test_curvature_sign_convention():
    # xi = eta^2 sampled from the top down: convex towards larger xi
    eta = np.linspace(1.0, 0.0, 21)
    kappa = shock_curvature(np.stack([eta**2, eta], axis=1))
    assert np.all(kappa > 0.0)
    assert np.allclose(kappa, 2.0 / (1.0 + 4.0 * eta[1:-1] ** 2) ** 1.5, rtol=1e-2)
    assert np.all(shock_curvature(np.stack([-(eta**2), eta], axis=1)) < 0.0)


def test_golden_run_properties(golden_result):
    res = golden_result
    d = res.diagnostics
    assert res.converged and d.converged
    assert all(d.within_acceptance().values())
    assert d.cutoff_cells_off_layer == 0
    hist = res.history
    assert all(b < a for a, b in zip(hist[:5], hist[1:5]))
    assert res.shock.is_simple()
    assert np.array_equal(res.shock.start, res.config.P1)
    assert res.shock.end[1] == 0.0
    mesh = transfinite_mesh(res.field.domain, 64, 64)
    assert np.array_equal(mesh.nodes, res.field.mesh.nodes)


def test_no_root_below_detachment(polar_golden):
    with pytest.raises(NoRoot):
        solve_regular_reflection(2.0, 1.0, 2.0, polar_golden["theta_d"] - 0.01, solver=COARSE)


def test_iteration_cap_reports_diagnostics():
    with pytest.raises(NotConverged) as info:
        solve_regular_reflection(2.0, 1.0, 2.0, math.radians(85.0), solver=SolverConfig(n1=16, n2=16, max_outer=1))
    res = info.value.result
    assert not res.converged and res.outer_iterations == 1
    d = res.diagnostics
    assert not d.converged and d.outer_iterations == 1
    assert all(math.isfinite(float(v)) for v in d.to_dict().values())
    assert d.rh_residual_max > SolverConfig().tol_rh * d.scale


def test_solve_is_deterministic():
    run = lambda: solve_regular_reflection(2.0, 1.0, 2.0, math.radians(85.0), solver=COARSE)
    a, b = run(), run()
    assert a.diagnostics == b.diagnostics
    assert np.array_equal(a.field.psi, b.field.psi)
    assert np.array_equal(a.shock.points, b.shock.points)


def test_export_round_trip(golden_result, tmp_path):
    inputs = {"gamma": 2.0, "rho0": 1.0, "rho1": 2.0, "theta_deg": 85.0, "branch": "weak"}
    paths = write_solution(golden_result, inputs, tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(p.name for p in paths.values())
    fld, shock, _, meta = load_solution(paths["sidecar"])
    assert np.max(np.abs(fld.phi - golden_result.field.phi)) <= 1e-12
    assert np.array_equal(shock.points, golden_result.shock.points)
    again = rediagnose(paths["sidecar"]).to_dict()
    for key, value in golden_result.diagnostics.to_dict().items():
        assert abs(float(again[key]) - float(value)) <= 1e-12, key
    assert meta["rh_history"] == [float(v) for v in golden_result.history]


def test_export_header(golden_result, tmp_path):
    paths = write_solution(golden_result, {}, tmp_path, stem="x")
    head = paths["field"].read_text().splitlines()[0]
    assert head == "xi,eta,phi,dphi_dxi,dphi_deta,rho,pseudo_mach,elliptic_margin"
    assert paths["shock"].read_text().startswith("xi,eta\n")


def test_seventeen_digit_formatting():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(3) == "3" and fmt(True) == "true"
    with pytest.raises(ValueError):
        fmt(float("nan"))
    text = dumps({"a": [1.0, 2.5], "b": None, "c": {"d": "x"}})
    assert json.loads(text) == {"a": [1.0, 2.5], "b": None, "c": {"d": "x"}}
    assert '"a": [1, 2.5]' in text


def test_diagnostics_are_finite_on_unconverged_field():
    dom = normal_reflection_domain(GAS, 2.0, n1=16, offset=0.2)
    fld = solve_bvp_fixed_shock(dom, COARSE)
    d = run_diagnostics(fld, dom.shock)
    assert all(math.isfinite(float(v)) for v in dataclasses.astuple(d))
    assert d.rh_residual_max > 1e-3
