import numpy as np
import pytest

from nelson2d.kspace import ModelParams, PolarGrid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def params_n2():
    return ModelParams(N=2, m_p=1.0, m_b=1.0, g=1.0, lam=5.0)


@pytest.fixture(scope="session")
def grid_n2(params_n2):
    return PolarGrid.build(0.0, params_n2.lam, 6, 8, 48)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = next((m for k, m in sys.modules.items() if k.endswith("test_acceptance")), None)
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
