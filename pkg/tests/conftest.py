import numpy as np
import pytest

from bfamily import make_grid
from bfamily.verify import RunCache


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long evolution or continuation runs")


@pytest.fixture(scope="session")
def run_cache():
    """Evolution runs shared by every test module in the session."""
    return RunCache()


@pytest.fixture
def grid64():
    return make_grid(2 * np.pi, 64)


_ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def acceptance_lines():
    """Check lines collected by the acceptance suite, echoed in the summary."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
