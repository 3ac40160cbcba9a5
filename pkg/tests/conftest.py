import numpy as np
import pytest

from phodge.mesh import build_flat_torus, build_icosphere

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ico1():
    return build_icosphere(1)


@pytest.fixture(scope="session")
def ico2():
    return build_icosphere(2)


@pytest.fixture(scope="session")
def ico3():
    return build_icosphere(3)


@pytest.fixture(scope="session")
def torus8():
    return build_flat_torus(8)


@pytest.fixture(scope="session")
def unit_torus8():
    return build_flat_torus(8, period=1.0)
