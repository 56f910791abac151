import csv
import io
import json
import math
from pathlib import Path

import pytest

from shockrefl.cli import SWEEP_HEADER, main

EXPECTED = Path(__file__).resolve().parent / "golden" / "cli"
BASE = ["--gamma", "2", "--rho1", "2"]


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize(
    "argv,expected",
    [
        (["normal-reflection"], "normal_reflection.json"),
        (["angles"], "angles.json"),
        (["polar", "--theta-deg", "80"], "polar_80.json"),
        (["configure", "--theta-deg", "85"], "configure_85.json"),
        (["sweep", "--thetas", "50:89:4"], "sweep.csv"),
    ],
)
def test_output_is_byte_exact(capsys, argv, expected):
    code, out, _ = _run(capsys, argv[0], *BASE, *argv[1:])
    assert code == 0
    assert out == (EXPECTED / expected).read_text()


def test_normal_reflection_values(capsys):
    _, out, _ = _run(capsys, "normal-reflection", *BASE)
    data = json.loads(out)
    assert list(data) == ["rho2_bar", "xi_bar"]
    assert data["rho2_bar"] == pytest.approx(10.0 / 3.0, abs=1e-9)
    assert data["xi_bar"] == pytest.approx(-1.5 * math.sqrt(2.0 / 3.0), abs=1e-9)


def test_angles_schema(capsys):
    _, out, _ = _run(capsys, "angles", *BASE)
    data = json.loads(out)
    assert list(data) == ["theta_d_deg", "theta_s_deg", "rho1_cr", "u1", "c1", "regime"]
    assert data["regime"] == "u1<=c1"


def test_angles_without_critical_density(capsys):
    code, out, _ = _run(capsys, "angles", "--gamma", "4", "--rho1", "2")
    assert code == 0
    assert json.loads(out)["rho1_cr"] is None


def test_sweep_rows(capsys):
    code, out, _ = _run(capsys, "sweep", *BASE, "--thetas", "60:89:30")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == SWEEP_HEADER
    assert len(rows) == 31
    assert all(r[1] == "ok" for r in rows[1:])
    assert [float(r[0]) for r in rows[1:]] == pytest.approx([60.0 + k for k in range(30)])


def test_sweep_json(capsys):
    code, out, _ = _run(capsys, "sweep", *BASE, "--thetas", "50:80:2", "--format", "json")
    assert code == 0
    rows = json.loads(out)
    assert [r["status"] for r in rows] == ["no_root", "ok"]
    assert list(rows[0]) == list(SWEEP_HEADER)


def test_out_writes_file(capsys, tmp_path):
    target = tmp_path / "nr.json"
    code, out, _ = _run(capsys, "normal-reflection", *BASE, "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text() == (EXPECTED / "normal_reflection.json").read_text()


@pytest.mark.parametrize(
    "argv",
    [
        ["angles", "--gamma", "2", "--rho1", "1"],
        ["angles", "--gamma", "1", "--rho1", "2"],
        ["angles", "--gamma", "2", "--rho1", "2", "--rho0", "0"],
        ["angles", "--gamma", "nan", "--rho1", "2"],
        ["polar", *BASE, "--theta-deg", "90"],
        ["polar", *BASE, "--theta-deg", "0"],
        ["angles", *BASE, "--format", "csv"],
        ["solve", *BASE, "--theta-deg", "85", "--grid", "4x4"],
        ["solve", *BASE, "--theta-deg", "85", "--grid", "banana"],
        ["angles", "--rho1", "2"],
    ],
)
def test_invalid_input_exits_2(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 2
    assert err


def test_no_root_exits_3(capsys):
    code, out, err = _run(capsys, "polar", *BASE, "--theta-deg", "30")
    assert code == 3
    assert out == "" and "NoRoot" in err


def test_solve_not_converged_exits_4_and_writes(capsys, tmp_path):
    code, out, _ = _run(
        capsys, "solve", *BASE, "--theta-deg", "85", "--grid", "16x16", "--max-outer", "1", "--out", str(tmp_path)
    )
    assert code == 4
    diag = json.loads(out)
    assert diag["converged"] is False and diag["outer_iterations"] == 1
    assert {p.name for p in tmp_path.iterdir()} == {"solution.json", "solution_field.csv", "solution_shock.csv"}


def test_solve_round_trip(capsys, tmp_path):
    code, out, _ = _run(capsys, "solve", *BASE, "--theta-deg", "85", "--grid", "16x16", "--out", str(tmp_path))
    assert code == 0
    diag = json.loads(out)
    assert diag["converged"] is True
    sidecar = json.loads((tmp_path / "solution.json").read_text())
    assert sidecar["diagnostics"] == diag
    assert sidecar["inputs"] == {"gamma": 2.0, "rho0": 1.0, "rho1": 2.0, "theta_deg": 85.0, "branch": "weak"}
    assert sidecar["mesh"] == {"n1": 16, "n2": 16}
    field_lines = (tmp_path / "solution_field.csv").read_text().splitlines()
    assert len(field_lines) == 1 + 17 * 17


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
