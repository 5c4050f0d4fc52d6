import pytest

from bcsgl.glcoeff import gl_coefficients
from bcsgl.pairing import InteractionPotential, find_tc

_LINES_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES_KEY] = []


def pytest_terminal_summary(terminalreporter):
    lines = terminalreporter.config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """``criterion(n, ok, detail)`` prints one pass/fail line and asserts ``ok``."""
    lines = request.config.stash[_LINES_KEY]

    def report(n, ok, detail):
        line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return report


@pytest.fixture(scope="session")
def well_1d():
    return InteractionPotential.gaussian(-3.0, 1.0, dimension=1)


@pytest.fixture(scope="session")
def pair_1d(well_1d):
    return find_tc(well_1d, 1.0)


@pytest.fixture(scope="session")
def coeffs_1d(pair_1d):
    return gl_coefficients(pair_1d, 1.0)


@pytest.fixture(scope="session")
def well_3d():
    return InteractionPotential.gaussian(-12.0, 1.0, dimension=3)


@pytest.fixture(scope="session")
def pair_3d(well_3d):
    return find_tc(well_3d, 1.0)


@pytest.fixture(scope="session")
def coeffs_3d(pair_3d):
    return gl_coefficients(pair_3d, 1.0)
