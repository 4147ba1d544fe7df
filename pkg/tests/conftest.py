import numpy as np
import pytest

from isaacs_fd.families import constant_family
from isaacs_fd.grid import DEFAULT_STENCIL, Box, Disk, build_grid
from isaacs_fd.problem import ControlSet, EllipticityBounds, IsaacsProblem, constant_function


def random_table(rng, nA, nB, drift=True, delta=0.2):
    """Per-pair constant coefficients that split nonnegatively on the 4-vector stencil.

    ``a`` has ``|a12| <= min(a11, a22)`` (so the closed-form split is
    nonnegative) and eigenvalues inside ``[delta, 1/delta]``.
    """
    table = []
    for _ in range(nA):
        row = []
        for _ in range(nB):
            d1, d2 = rng.uniform(0.5, 2.0, 2)
            off = rng.uniform(-1, 1) * 0.8 * min(d1, d2)
            a = np.array([[d1, off], [off, d2]])
            b = rng.uniform(-1, 1, 2) if drift else np.zeros(2)
            c = rng.uniform(0, 1)
            f = rng.uniform(-2, 2)
            row.append((a, b, c, f))
        table.append(row)
    return table


def problem_from_table(table, domain=None, g=None, delta=0.2, k0=10.0):
    nA, nB = len(table), len(table[0])
    A = ControlSet(list(range(nA)))
    B = ControlSet(list(range(nB)))
    co = constant_family(A, B,
                         a=[[e[0] for e in row] for row in table],
                         b=[[e[1] for e in row] for row in table],
                         c=[[e[2] for e in row] for row in table],
                         f=[[e[3] for e in row] for row in table])
    return IsaacsProblem(domain or Disk(1.0), A, B, co, g or constant_function(0.0),
                         EllipticityBounds(delta, k0), "table")


def lattice_dict(grid, values):
    return {tuple(int(c) for c in grid.coords[n]): float(values[n]) for n in range(grid.size)}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_disk_grid():
    return build_grid(Disk(1.0), DEFAULT_STENCIL, 0.25)


@pytest.fixture(scope="session")
def unit_box():
    return Box((0.0, 0.0), (1.0, 1.0))


# one line per acceptance criterion, printed after the test session
ACCEPTANCE = {}


def record(criterion, ok, detail):
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
