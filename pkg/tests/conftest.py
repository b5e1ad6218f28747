import numpy as np
import pytest

from smoo.oracle import make_known_optimum_quadratic, make_stochastic_lp

LP_FIXTURE = dict(
    c_mean=[-1.0, -1.0, -1.0],
    A_mean=[[1.0, 0.5, 0.5], [0.5, 1.0, 0.5], [0.5, 0.5, 1.0]],
    b_mean=[1.0, 1.0, 1.0],
    noise_scale=0.5,
    R=2.0,
)


@pytest.fixture(scope="session")
def quad():
    return make_known_optimum_quadratic(5, 2, seed=0)


@pytest.fixture(scope="session")
def lp():
    return make_stochastic_lp(**LP_FIXTURE)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number}: {detail}"
        _ACCEPTANCE_LINES.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
