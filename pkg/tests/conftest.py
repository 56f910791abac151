import json
import math
from pathlib import Path

import pytest

from shockrefl import GasModel

GOLDEN = Path(__file__).resolve().parent / "golden"

# outcome of each acceptance criterion, filled while test_acceptance runs
_CRITERIA: dict = {}


@pytest.fixture(scope="session")
def polar_golden():
    return json.loads((GOLDEN / "polar_gamma2.json").read_text())


@pytest.fixture(scope="session")
def golden_run_record():
    return json.loads((GOLDEN / "golden_run.json").read_text())


@pytest.fixture(scope="session")
def gas2():
    return GasModel(2.0, 1.0)


@pytest.fixture(scope="session")
def golden_result():
    """The reference 64x64 free-boundary solve, computed once per session."""
    from tests.oracles.golden_run import run

    return run()


@pytest.fixture(scope="session")
def theta85():
    return math.radians(85.0)


def pytest_runtest_logreport(report):
    number = getattr(report, "criterion", None)
    if number is None:
        for key, value in report.user_properties:
            if key == "criterion":
                number = value
    if number is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[number] = (report.outcome, report.nodeid.split("::")[-1])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        outcome, name = _CRITERIA[number]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  ({name})")
