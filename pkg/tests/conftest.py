import numpy as np
import pytest

from vessellab import fixtures


@pytest.fixture(scope="session")
def grid():
    return fixtures.default_grid()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def v0():
    return fixtures.v0()


@pytest.fixture(scope="session")
def va1():
    return fixtures.va(1.0)


@pytest.fixture(scope="session")
def vg1():
    return fixtures.vg(1.0)


@pytest.fixture(scope="session")
def vc2():
    return fixtures.vc2()


@pytest.fixture(scope="session")
def fixture_set(v0, va1, vg1, vc2):
    return {"V0": v0, "VA(1)": va1, "VG(1)": vg1, "VC2": vc2}


@pytest.fixture(scope="session")
def random_vessels():
    rng = np.random.default_rng(7)
    return [fixtures.random_vessel(rng) for _ in range(4)]


_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Mapping ``criterion -> (passed, detail)`` shown in the terminal summary."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
