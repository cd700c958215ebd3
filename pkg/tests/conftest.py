import sys

import numpy as np
import pytest

from effhist import Scenario


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def z_up():
    """Qubit with H = 0 prepared in |z+>."""
    return Scenario.free(np.diag([1.0, 0.0]))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
