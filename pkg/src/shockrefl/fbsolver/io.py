"""Export and re-import of free-boundary solutions.

Three files per solve: a node table (CSV), the shock polyline (CSV) and a
sidecar JSON with inputs, solver settings and diagnostics.  Floats are
written with 17 significant digits so a reload reproduces them exactly.
Every file is written to a temporary name and renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from ..geometry import ShockCurve, build_configuration
from ..gas import GasModel
from ..polar import solve_state2
from ..states import solve_state1
from .diagnostics import Diagnostics, node_gradients, run_diagnostics
from .discretization import Discretization
from .mesh import Mesh, domain_from_configuration
from .solver import Field, SolveResult, SolverConfig

SOLUTION_COLUMNS = (
    "xi",
    "eta",
    "phi",
    "dphi_dxi",
    "dphi_deta",
    "rho",
    "pseudo_mach",
    "elliptic_margin",
)


def fmt(x) -> str:
    """Float with 17 significant digits; integers and flags as themselves."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot be serialized")
    return f"{x:.17g}"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float at 17 significant digits.

    The standard encoder uses the shortest round-trip repr and cannot be
    told otherwise, so scalars go through :func:`fmt` and the rest through
    :func:`json.dumps`.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(fmt(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if obj is None or isinstance(obj, str):
        return json.dumps(obj)
    return fmt(obj)


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def node_table(fld: Field) -> np.ndarray:
    """Per-node values in the order of :data:`SOLUTION_COLUMNS`."""
    gas = fld.domain.gas
    xy = fld.mesh.xy
    phi = fld.phi
    grad = node_gradients(fld.mesh.nodes, phi).reshape(-1, 2)
    speed_sq = np.sum(grad * grad, axis=1)
    arg = gas.density_argument(speed_sq, phi)
    g = gas.gamma
    rho = np.where(arg > 0.0, np.maximum(arg, 0.0) ** (1.0 / (g - 1.0)), 0.0)
    c = np.sqrt(np.maximum(arg, 0.0))
    with np.errstate(divide="ignore"):
        mach = np.where(c > 0.0, np.sqrt(speed_sq) / np.where(c > 0.0, c, 1.0), np.finfo(float).max)
    cstar = np.sqrt(np.maximum(2.0 / (g + 1.0) * (gas.rho0 ** (g - 1.0) - (g - 1.0) * phi), 0.0))
    margin = cstar - np.sqrt(speed_sq)
    return np.column_stack([xy[:, 0], xy[:, 1], phi, grad[:, 0], grad[:, 1], rho, mach, margin])


def write_solution(result: SolveResult, inputs: dict, out_dir, stem: str = "solution") -> dict:
    """Write node table, shock polyline and sidecar JSON; return their paths."""
    out = Path(out_dir)
    fld = result.field
    paths = {
        "field": out / f"{stem}_field.csv",
        "shock": out / f"{stem}_shock.csv",
        "sidecar": out / f"{stem}.json",
    }
    atomic_write(paths["field"], _csv_text(SOLUTION_COLUMNS, node_table(fld)))
    atomic_write(paths["shock"], _csv_text(("xi", "eta"), result.shock.points))
    sidecar = {
        "inputs": inputs,
        "solver": result.solver.to_dict(),
        "mesh": {"n1": fld.mesh.n1, "n2": fld.mesh.n2},
        "shock_start_fixed": bool(result.shock.start_fixed),
        "configuration": result.config.to_dict() if result.config is not None else None,
        "diagnostics": result.diagnostics.to_dict(),
        "rh_history": [float(v) for v in result.history],
        "files": {k: v.name for k, v in paths.items() if k != "sidecar"},
    }
    atomic_write(paths["sidecar"], dumps(sidecar) + "\n")
    return paths


def _read_csv(path) -> tuple[list, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in row] for row in rows[1:]])


def load_solution(sidecar_path) -> tuple[Field, ShockCurve, object, dict]:
    """Rebuild ``(field, shock, config, sidecar)`` from files written by :func:`write_solution`."""
    sidecar_path = Path(sidecar_path)
    meta = json.loads(sidecar_path.read_text())
    base = sidecar_path.parent
    inp = meta["inputs"]
    solver = SolverConfig(**meta["solver"])
    gas = GasModel(inp["gamma"], inp["rho0"])
    state1, _ = solve_state1(gas, inp["rho1"])
    polar = solve_state2(gas, inp["rho1"], math.radians(inp["theta_deg"]), inp["branch"])
    config = build_configuration(gas, state1, polar)

    _, shock_pts = _read_csv(base / meta["files"]["shock"])
    shock = ShockCurve(shock_pts, meta["shock_start_fixed"])
    header, table = _read_csv(base / meta["files"]["field"])
    col = {name: i for i, name in enumerate(header)}
    n1, n2 = meta["mesh"]["n1"], meta["mesh"]["n2"]
    xy = table[:, [col["xi"], col["eta"]]]
    mesh = Mesh(xy.reshape(n1 + 1, n2 + 1, 2))
    domain = domain_from_configuration(config, shock)
    disc = Discretization(mesh, gas, solver.delta_e)
    psi = table[:, col["phi"]] + 0.5 * np.sum(xy * xy, axis=1)
    diag = meta["diagnostics"]
    fld = Field(domain, mesh, psi, disc, diag["inner_residual"], 0, diag["scale"])
    return fld, shock, config, meta


def rediagnose(sidecar_path) -> Diagnostics:
    """Diagnostics recomputed from the exported files alone."""
    fld, shock, config, meta = load_solution(sidecar_path)
    d = meta["diagnostics"]
    return run_diagnostics(fld, shock, config, d["converged"], d["outer_iterations"])
