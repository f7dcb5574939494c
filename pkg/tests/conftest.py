import pytest

from daoctrl import paper_scenario
from daoctrl.topology import Topology

PAPER_MATRIX = [
    [0, 0, 0.1, 0, 0, 0.2, 0, 0, 0, 0],
    [0, 0, 0.3, 0.1, 0.1, 0, 0, 0, 0, 0],
    [-0.2, 0.2, 0, 0, 0.1, 0, 0, 0, 0.03, 0.1],
    [0, -0.1, 0, 0, 0, 0.5, 0.2, 0, 0, 0],
    [0, 0, -0.1, -0.03, 0, 0, 0, 0, 0.4, 0],
    [-0.02, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0.2, 0, 0, 0, 0.4, 0, 0],
    [0, 0, 0, 0.1, 0.2, 0, -0.1, 0, 0.3, 0],
    [0, 0, -0.1, 0, 0, 0, 0, 0.2, 0, 0],
    [0, 0, 0, 0.05, 0, 0, 0, 0, 0, 0],
]


@pytest.fixture
def paper_topology():
    return Topology(PAPER_MATRIX)


@pytest.fixture(scope="session")
def paper():
    return paper_scenario()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
