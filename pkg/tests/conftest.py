import json
from pathlib import Path

import pytest

from cogrelay.config import SystemConfig, Topology, stats_from_topology
from cogrelay.power import power_budget

ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def stats():
    return stats_from_topology(Topology())


@pytest.fixture
def cfg():
    return SystemConfig()


@pytest.fixture
def budget(cfg, stats):
    return power_budget(cfg, stats)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
