import pytest

from decobath.bath import discretize, reference_flat_spec
from decobath.propagator import HermitianPropagator


@pytest.fixture(scope="session")
def ref_bath():
    """Flat band [0.5, 1.5], gamma = 0.01, 400 modes, vacuum."""
    return discretize(reference_flat_spec(n_modes=400))


@pytest.fixture(scope="session")
def ref_prop(ref_bath):
    return HermitianPropagator(ref_bath)


@pytest.fixture(scope="session")
def small_bath():
    return discretize(reference_flat_spec(n_modes=16))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
