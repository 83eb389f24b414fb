import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from acceptance_log import ACCEPTANCE  # noqa: E402
from pipingbot.scenario import bundled, load_scenario  # noqa: E402


@pytest.fixture(scope="session")
def lab():
    return load_scenario(bundled("lab26h.scenario"))


@pytest.fixture(scope="session")
def regional():
    return load_scenario(bundled("regional.scenario"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
