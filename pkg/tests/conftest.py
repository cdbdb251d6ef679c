import numpy as np
import pytest

from wavebeam.spectrum import ModelParams, solve_spectrum


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def branches64(params):
    return solve_spectrum(params, 64)


@pytest.fixture(scope="session")
def branches16(branches64):
    return branches64[:16]


@pytest.fixture(scope="session")
def branches8(branches64):
    return branches64[:8]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
