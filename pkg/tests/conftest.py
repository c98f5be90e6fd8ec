import random

import pytest

from mwi_forge.functionals import LocalFunctional, free_lagrangian
from mwi_forge.lattice_spacetime import Lattice


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def lat6():
    return Lattice(6, 6)


@pytest.fixture(scope="session")
def free6(lat6):
    return free_lagrangian(lat6)


@pytest.fixture(scope="session")
def quartic6(lat6):
    return free_lagrangian(lat6, potential={4: "1/24"})


def phi(t, x, comp=0):
    return LocalFunctional.var((t, x), comp)


# one line per acceptance criterion, repeated at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
