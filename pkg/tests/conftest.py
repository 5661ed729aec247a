import numpy as np
import pytest

from curtailplan.ingest import SLOTS_PER_WEEK, WEEKS, YEAR_SLOTS, WeeklyTraceSet
from curtailplan.synth import synthesize_year


@pytest.fixture(scope="session")
def synth_traces():
    return synthesize_year(seed=11)


@pytest.fixture(scope="session")
def constant_traces():
    return WeeklyTraceSet(np.ones(YEAR_SLOTS), np.ones(YEAR_SLOTS))


@pytest.fixture(scope="session")
def two_level_traces():
    """wind_unit = 2 in the first half of every week, 0 in the second; solar flat."""
    week = np.concatenate([np.full(SLOTS_PER_WEEK // 2, 2.0), np.zeros(SLOTS_PER_WEEK // 2)])
    return WeeklyTraceSet(np.tile(week, WEEKS), np.ones(YEAR_SLOTS))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
