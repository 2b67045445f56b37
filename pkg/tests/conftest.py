import json
from pathlib import Path

import pytest
from hypothesis import settings

from enesim.fieldsolver import solve_laplace
from enesim.geometry import ModeDrive, rasterize, shallow_si

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text())


@pytest.fixture(scope="session")
def shallow_geom():
    return shallow_si()


@pytest.fixture(scope="session")
def shallow_grid(shallow_geom):
    return rasterize(shallow_geom)


@pytest.fixture(scope="session")
def shallow_fields(shallow_grid):
    """DM and CM solves of the shallow fixture, shared by several modules."""
    return {m: solve_laplace(shallow_grid, ModeDrive.for_mode(m)) for m in ("CM", "DM")}


ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Criterion number -> (passed, detail); echoed in the terminal summary."""
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
