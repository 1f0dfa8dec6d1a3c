import pytest

from misesim.dram import DramConfig
from misesim.workloads import AppSpec


@pytest.fixture
def dram():
    return DramConfig()


@pytest.fixture
def hit_app():
    """Single-row streamer: every access after the first is a row hit."""
    return AppSpec(compute_gap=100, row_locality=1.0, working_rows=1, mlp_limit=1)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
