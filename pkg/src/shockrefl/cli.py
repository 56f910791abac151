"""Command-line interface.

Every subcommand prints (or writes with ``--out``) machine-readable output
with floats at 17 significant digits.  Exit codes: 0 success, 2 invalid
input, 3 no state (2) or outside the solvable regime, 4 not converged (the
diagnostics are still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DegenerateAngle,
    GuessInfeasible,
    InnerDiverged,
    NoCriticalDensity,
    NoIntersection,
    NoRoot,
    NotConverged,
    SensitivityDegenerate,
    ShockReflectionError,
    VacuumEncountered,
)
from .fbsolver.io import atomic_write, dumps, fmt, write_solution
from .fbsolver.solver import SolverConfig, solve_regular_reflection
from .gas import GasModel
from .geometry import build_configuration
from .polar import PolarSolution, critical_density, regime, solve_state2, sweep, transition_angles
from .states import normal_reflection, solve_state1

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_ROOT = 3
EXIT_NOT_CONVERGED = 4

SWEEP_HEADER = (
    "theta_deg",
    "status",
    "q2_weak",
    "rho2_weak",
    "class_weak",
    "q2_strong",
    "rho2_strong",
    "class_strong",
    "delta_margin_weak",
)

log = logging.getLogger("shockrefl")


class InvalidInput(Exception):
    """Command-line input rejected before any computation."""


def _grid(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like N1xN2, got {text!r}") from None


def _thetas(text: str) -> np.ndarray:
    try:
        start, stop, count = text.split(":")
        return np.linspace(float(start), float(stop), int(count))
    except ValueError:
        raise argparse.ArgumentTypeError(f"angles must look like start:stop:count, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shockrefl",
        description="Regular shock reflection by a wedge in self-similar potential flow.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")

    gas = argparse.ArgumentParser(add_help=False)
    gas.add_argument("--gamma", type=float, required=True, help="adiabatic exponent (> 1)")
    gas.add_argument("--rho0", type=float, default=1.0, help="density ahead of the incident shock")
    gas.add_argument("--rho1", type=float, required=True, help="density behind the incident shock")
    gas.add_argument("--out", type=Path, default=None, help="output file (directory for solve)")
    gas.add_argument("--format", choices=("json", "csv"), default=None)

    angle = argparse.ArgumentParser(add_help=False)
    angle.add_argument("--theta-deg", type=float, required=True, help="wedge half-angle in degrees")
    angle.add_argument("--branch", choices=("weak", "strong"), default="weak")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("angles", parents=[gas], help="detachment and sonic angles, critical density")
    sub.add_parser("polar", parents=[gas, angle], help="state (2) on the shock polar")
    p = sub.add_parser("sweep", parents=[gas], help="shock-polar table over wedge angles")
    p.add_argument("--thetas", type=_thetas, required=True, help="degrees as start:stop:count")
    p.add_argument("--workers", type=int, default=None)
    sub.add_parser("configure", parents=[gas, angle], help="reflection geometry")
    p = sub.add_parser("solve", parents=[gas, angle], help="free-boundary solve in the elliptic region")
    defaults = SolverConfig()
    p.add_argument("--grid", type=_grid, default=(defaults.n1, defaults.n2), help="N1xN2 cells")
    p.add_argument("--tol-pde", type=float, default=defaults.tol_pde)
    p.add_argument("--tol-rh", type=float, default=defaults.tol_rh)
    p.add_argument("--relax", type=float, default=defaults.relax)
    p.add_argument("--delta-e", type=float, default=defaults.delta_e, help="ellipticity cutoff")
    p.add_argument("--max-outer", type=int, default=defaults.max_outer)
    sub.add_parser("normal-reflection", parents=[gas], help="reflected state for a wedge angle of 90 degrees")
    return parser


def _gas(args) -> GasModel:
    for name in ("gamma", "rho0", "rho1"):
        if not math.isfinite(getattr(args, name)):
            raise InvalidInput(f"--{name} must be finite")
    if not args.gamma > 1.0:
        raise InvalidInput("--gamma must exceed 1")
    if not args.rho0 > 0.0:
        raise InvalidInput("--rho0 must be positive")
    if not args.rho1 > args.rho0:
        raise InvalidInput("--rho1 must exceed --rho0")
    return GasModel(args.gamma, args.rho0)


def _theta(args) -> float:
    t = args.theta_deg
    if not (math.isfinite(t) and 0.0 < t < 90.0):
        raise InvalidInput("--theta-deg must lie strictly between 0 and 90")
    return math.radians(t)


def _only(args, *formats):
    fmt_ = args.format or formats[0]
    if fmt_ not in formats:
        raise InvalidInput(f"{args.command} supports --format {'|'.join(formats)}")
    return fmt_


def _emit(args, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
    else:
        atomic_write(args.out, text)


def polar_dict(sol: PolarSolution) -> dict:
    s = sol.state2
    return {
        "theta_deg": math.degrees(sol.theta_w),
        "branch": sol.branch.value,
        "classification": sol.classification.value,
        "q2": sol.q2,
        "rho2": s.rho,
        "u2": s.u,
        "v2": s.v,
        "k2": s.k,
        "pseudo_mach_at_P0": sol.pseudo_mach_at_P0,
        "delta_margin": sol.delta_margin,
        "delta_case": sol.delta_case(),
        "P0": [float(v) for v in sol.P0],
        "residual": sol.residual,
    }


def run_angles(args) -> int:
    gas = _gas(args)
    _only(args, "json")
    ta = transition_angles(gas, args.rho1)
    try:
        rho_cr = critical_density(gas).rho1_cr
    except NoCriticalDensity:
        rho_cr = None
    state1, _ = solve_state1(gas, args.rho1)
    report = {
        "theta_d_deg": math.degrees(ta.theta_d),
        "theta_s_deg": math.degrees(ta.theta_s),
        "rho1_cr": rho_cr,
        "u1": state1.u,
        "c1": gas.sound_speed(args.rho1),
        "regime": regime(gas, args.rho1),
    }
    _emit(args, dumps(report) + "\n")
    return EXIT_OK


def run_polar(args) -> int:
    gas = _gas(args)
    theta = _theta(args)
    _only(args, "json")
    sol = solve_state2(gas, args.rho1, theta, args.branch)
    _emit(args, dumps(polar_dict(sol)) + "\n")
    return EXIT_OK


def _sweep_cells(row) -> list[str]:
    cells = [fmt(math.degrees(row.theta_w)), row.status]
    for sol in (row.weak, row.strong):
        if sol is None:
            cells += ["", "", ""]
        else:
            cells += [fmt(sol.q2), fmt(sol.state2.rho), sol.classification.value]
    cells.append("" if row.weak is None else fmt(row.weak.delta_margin))
    return cells


def run_sweep(args) -> int:
    gas = _gas(args)
    out_fmt = _only(args, "csv", "json")
    degrees = args.thetas
    if np.any(~np.isfinite(degrees)):
        raise InvalidInput("--thetas must be finite")
    rows = sweep(gas, args.rho1, np.radians(degrees), workers=args.workers)
    if out_fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for row in rows:
            w.writerow(_sweep_cells(row))
        text = buf.getvalue()
    else:
        text = dumps([dict(zip(SWEEP_HEADER, _sweep_cells(r))) for r in rows]) + "\n"
    _emit(args, text)
    return EXIT_OK


def run_configure(args) -> int:
    gas = _gas(args)
    theta = _theta(args)
    _only(args, "json")
    state1, _ = solve_state1(gas, args.rho1)
    sol = solve_state2(gas, args.rho1, theta, args.branch)
    config = build_configuration(gas, state1, sol, theta)
    _emit(args, dumps(config.to_dict()) + "\n")
    return EXIT_OK


def run_solve(args) -> int:
    gas = _gas(args)
    theta = _theta(args)
    _only(args, "json")
    n1, n2 = args.grid
    try:
        solver = SolverConfig(
            n1=n1,
            n2=n2,
            delta_e=args.delta_e,
            relax=args.relax,
            tol_pde=args.tol_pde,
            tol_rh=args.tol_rh,
            max_outer=args.max_outer,
        )
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None
    inputs = {
        "gamma": gas.gamma,
        "rho0": gas.rho0,
        "rho1": args.rho1,
        "theta_deg": args.theta_deg,
        "branch": args.branch,
    }
    out = args.out if args.out is not None else Path(".")
    code = EXIT_OK
    try:
        result = solve_regular_reflection(gas.gamma, gas.rho0, args.rho1, theta, args.branch, solver)
    except NotConverged as exc:
        result = exc.result
        code = EXIT_NOT_CONVERGED
        print(f"shockrefl: {exc}", file=sys.stderr)
    paths = write_solution(result, inputs, out)
    sys.stdout.write(dumps(result.diagnostics.to_dict()) + "\n")
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return code


def run_normal_reflection(args) -> int:
    gas = _gas(args)
    _only(args, "json")
    nr = normal_reflection(gas, args.rho1)
    _emit(args, dumps({"rho2_bar": nr.rho2_bar, "xi_bar": nr.xi_bar}) + "\n")
    return EXIT_OK


COMMANDS = {
    "angles": run_angles,
    "polar": run_polar,
    "sweep": run_sweep,
    "configure": run_configure,
    "solve": run_solve,
    "normal-reflection": run_normal_reflection,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad input and 0 for --help / --version
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except InvalidInput as exc:
        print(f"shockrefl: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NoRoot, NoIntersection, GuessInfeasible, DegenerateAngle) as exc:
        print(f"shockrefl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NO_ROOT
    except (InnerDiverged, VacuumEncountered, SensitivityDegenerate) as exc:
        print(f"shockrefl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (ShockReflectionError, ValueError) as exc:
        print(f"shockrefl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
