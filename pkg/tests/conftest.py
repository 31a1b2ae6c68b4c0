from __future__ import annotations

import pytest

from k3gauss.lattice import PicardLattice, make_rank2_lattice, make_rank5_lattice

# filled by test_acceptance; echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def r5():
    return make_rank5_lattice((3, 2, 2, 2, 2))


@pytest.fixture(scope="session")
def r2():
    return make_rank2_lattice()


@pytest.fixture(scope="session")
def diag_2_m2():
    return PicardLattice(((2, 0), (0, -2)), name="diag(2,-2)", basis_labels=("D", "L"))


@pytest.fixture(scope="session")
def hyperbolic_plane():
    return PicardLattice(((0, 1), (1, 0)), name="U")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
