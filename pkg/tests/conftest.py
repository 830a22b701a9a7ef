import numpy as np
import pytest

from krylovmor import assemble_mna, parse_netlist
from krylovmor.generators import power_grid, rc_ladder

SCALAR_RC = """* one resistor, one capacitor
R1 1 0 1
C1 1 0 1
.port P1 1
"""

# node 1 -- R -- node 2, both nodes with unit capacitance, R to ground at node 1
TWO_NODE_RC = """R1 1 0 1
R2 1 2 1
C1 1 0 1
C2 2 0 1
.port P1 1
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def netlist_system(text):
    return assemble_mna(parse_netlist(text))


@pytest.fixture
def scalar_rc():
    return netlist_system(SCALAR_RC)


@pytest.fixture
def two_node_rc():
    return netlist_system(TWO_NODE_RC)


@pytest.fixture(scope="session")
def ladder2():
    return netlist_system(rc_ladder(200, ports=2))


@pytest.fixture(scope="session")
def small_grid():
    return netlist_system(power_grid(120, 3, seed=3))


@pytest.fixture(scope="session")
def singular_grid():
    return netlist_system(power_grid(150, 3, cap_dropout=0.2, seed=11, inductors=True))


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), np.finfo(float).tiny)
