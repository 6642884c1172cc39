import pytest

from crotsim.device import DeviceParams
from crotsim.gates import GateSet

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def params():
    return DeviceParams()


@pytest.fixture(scope="session")
def gateset(params):
    """Calibrated primitives at the synchronised operating point (k = 1)."""
    return GateSet(params)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
