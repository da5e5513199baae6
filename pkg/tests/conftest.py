import warnings
from importlib import resources
from pathlib import Path

import pytest

from drpsps.formulation import make_instance
from drpsps.grid_model import load_network

DATA = Path(str(resources.files("drpsps") / "data"))

# scipy forwards HiGHS options it does not recognise with a RuntimeWarning
warnings.filterwarnings("ignore", message="Unrecognized options", category=RuntimeWarning)

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Store and print a one-line verdict for an acceptance criterion."""
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"CRITERION {criterion:>2}: {'PASS' if ok else 'FAIL'} | {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"CRITERION {k:>2}: {'PASS' if ok else 'FAIL'} | {detail}")


@pytest.fixture(scope="session")
def three_bus():
    return load_network(DATA / "three_bus.json")


@pytest.fixture(scope="session")
def rts24():
    return load_network(DATA / "rts24_reduced.json")


@pytest.fixture(scope="session")
def three_inst(three_bus):
    return make_instance(three_bus, nzr_cap=2)


@pytest.fixture(scope="session")
def rts_inst(rts24):
    return make_instance(rts24, nzr_cap=3)
