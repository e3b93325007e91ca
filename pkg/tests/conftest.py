import numpy as np
import pytest

from wavemaps import GaussianFamily, make_grid

# reference subcritical and supercritical parameter sets
SUBCRITICAL = GaussianFamily(1.0, 8.0, 2.3)
SUPERCRITICAL = GaussianFamily(2.0, 10.0, 2.3)
R_MAX = 30.0


@pytest.fixture
def grid():
    return make_grid(R_MAX, 1024)


@pytest.fixture
def rng():
    return np.random.default_rng(20260114)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line and return whether the criterion held."""

    def _report(label: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
