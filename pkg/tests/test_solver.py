import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isaacs_fd.errors import ConfigError, NoConvergence
from isaacs_fd.grid import DEFAULT_STENCIL, Disk, build_grid
from isaacs_fd.operators import Scheme
from isaacs_fd.problem import affine_function, constant_function
from isaacs_fd.solver import SolveConfig, solution_rows, solve_isaacs, solve_scheme, solve_truncated_pair

from conftest import lattice_dict, problem_from_table, random_table
from oracles import brute_Fh, dense_linear_solve, value_iteration

GRID = build_grid(Disk(1.0), DEFAULT_STENCIL, 0.25)
TIGHT = SolveConfig(residual_tol=1e-11)


def _coords(grid, n):
    return tuple(int(c) for c in grid.coords[n])


def test_linear_problem_matches_dense_solve(rng):
    table = random_table(rng, 1, 1)
    g = affine_function([0.5, -1.0], 0.2)
    problem = problem_from_table(table, g=g)
    w, rep = solve_isaacs(problem, GRID, TIGHT)
    a, b, c, f = table[0][0]
    points = [_coords(GRID, n) for n in range(GRID.size)]
    interior = [_coords(GRID, n) for n in GRID.interior]
    gd = {p: float(g.value(np.array(p) * GRID.h)) for p in points if p not in set(interior)}
    ref = dense_linear_solve(points, interior, GRID.h, lambda p: a, lambda p: b, lambda p: c,
                             lambda p: f, gd)
    np.testing.assert_allclose(w.values, [ref[p] for p in points], atol=1e-11)
    assert rep.method_used == "policy-iteration"


def test_affine_data_is_reproduced_exactly(rng):
    # second differences and upwind first differences of an affine function are exact
    table = random_table(rng, 2, 2)
    p, q = np.array([0.7, -0.3]), 0.4
    for row in table:
        for k, (a, b, c, f) in enumerate(row):
            row[k] = (a, b, 0.0, -float(b @ p))
    g = affine_function(p, q)
    w, rep = solve_isaacs(problem_from_table(table, g=g), GRID, TIGHT)
    np.testing.assert_allclose(w.values, g.value(GRID.points), atol=1e-12)


def test_zero_data_gives_zero(rng):
    table = random_table(rng, 2, 3)
    for row in table:
        for k, (a, b, c, f) in enumerate(row):
            row[k] = (a, b, c, 0.0)
    w, _ = solve_isaacs(problem_from_table(table), GRID)
    assert np.abs(w.values).max() <= 1e-12


def test_isaacs_matches_value_iteration():
    grid = build_grid(Disk(1.0), DEFAULT_STENCIL, 1 / 3)
    table = random_table(np.random.default_rng(4), 2, 2)
    problem = problem_from_table(table, g=constant_function(0.5))
    scheme = Scheme(problem, grid)
    w, rep = solve_scheme(scheme, TIGHT)
    points = [_coords(grid, n) for n in range(grid.size)]
    interior = {_coords(grid, n) for n in grid.interior}
    gd = {p: 0.5 for p in points}
    tau = 1.0 / float(np.max(-scheme.ops.center))
    ref, _ = value_iteration(points, interior, grid.h, lambda p: table, gd, tau, tol=1e-14)
    np.testing.assert_allclose(w.values, [ref[p] for p in points], atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_solution_satisfies_scheme(seed):
    table = random_table(np.random.default_rng(seed), 2, 3)
    problem = problem_from_table(table, g=affine_function([1.0, 0.5], 0.0))
    w, rep = solve_isaacs(problem, GRID, TIGHT)
    ud = lattice_dict(GRID, w.values)
    res = [brute_Fh(ud, _coords(GRID, n), GRID.h, table) for n in GRID.interior]
    assert np.abs(res).max() <= 1e-9
    np.testing.assert_array_equal(w.values[GRID.boundary], problem.g.value(GRID.points[GRID.boundary]))
    assert rep.final_residual <= 1e-11


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 2.0))
def test_comparison_in_the_data(seed, bump):
    # raising every f raises the solution, which is the discrete comparison principle
    table = random_table(np.random.default_rng(seed), 2, 2)
    w0, _ = solve_isaacs(problem_from_table(table), GRID, TIGHT)
    up = [[(a, b, c, f + bump) for a, b, c, f in row] for row in table]
    w1, _ = solve_isaacs(problem_from_table(up), GRID, TIGHT)
    assert np.all(w1.values >= w0.values - 1e-12)
    assert np.all(w1.values[GRID.interior] > w0.values[GRID.interior])


def test_truncated_pair_ordering_and_limit():
    table = random_table(np.random.default_rng(9), 2, 2)
    problem = problem_from_table(table, g=constant_function(0.0), k0=10.0)
    scheme = Scheme(problem, GRID)
    w, _ = solve_scheme(scheme, TIGHT)
    prev_u = prev_v = None
    for K in (1.0, 4.0, 16.0, 1e8):
        u, v, (ru, rv) = solve_truncated_pair(problem, GRID, K, TIGHT, scheme)
        assert np.all(v.values <= w.values + 1e-10) and np.all(w.values <= u.values + 1e-10)
        if prev_u is not None:
            assert np.all(u.values <= prev_u + 1e-10) and np.all(v.values >= prev_v - 1e-10)
        prev_u, prev_v = u.values, v.values
        assert ru.equation == "upper" and rv.equation == "lower" and ru.K == K
    np.testing.assert_allclose(prev_u, w.values, atol=1e-10)
    np.testing.assert_allclose(prev_v, w.values, atol=1e-10)
    assert not np.any(ru.active_branch == "P")


def test_small_truncation_activates_pucci_branch():
    table = random_table(np.random.default_rng(2), 1, 2)
    table = [[(a, b, c, f + 8.0) for a, b, c, f in row] for row in table]
    problem = problem_from_table(table, k0=12.0)
    u, v, (ru, rv) = solve_truncated_pair(problem, GRID, 1.0, TIGHT)
    assert np.any(ru.active_branch == "P")
    rows = list(solution_rows(Scheme(problem, GRID), u, ru))
    assert len(rows) == GRID.size
    assert {r[6] for r in rows} <= {"P", "F", "boundary"}
    assert any(r[6] == "P" and r[7] == "" for r in rows)


def test_determinism():
    table = random_table(np.random.default_rng(6), 3, 2)
    problem = problem_from_table(table)
    w1, r1 = solve_isaacs(problem, GRID)
    w2, r2 = solve_isaacs(problem, GRID)
    assert w1.values.tobytes() == w2.values.tobytes()
    assert r1.to_dict(with_time=False) == r2.to_dict(with_time=False)


FINE = build_grid(Disk(1.0), DEFAULT_STENCIL, 1 / 8)


def test_pseudo_time_fallback():
    # this table needs several outer policy steps, so a budget of one forces pseudo-time
    problem = problem_from_table(random_table(np.random.default_rng(3), 3, 3))
    ref, rep0 = solve_isaacs(problem, FINE, SolveConfig(residual_tol=1e-12))
    assert rep0.iterations > 1
    w, rep = solve_isaacs(problem, FINE, SolveConfig(residual_tol=1e-12, max_policy_iters=1))
    assert rep.method_used == "hybrid" and rep.pseudo_steps > 0
    assert rep.final_residual <= 1e-12
    np.testing.assert_allclose(w.values, ref.values, atol=1e-11)


def test_no_convergence_and_config_errors():
    problem = problem_from_table(random_table(np.random.default_rng(3), 3, 3))
    with pytest.raises(NoConvergence, match="residual"):
        solve_isaacs(problem, FINE, SolveConfig(residual_tol=1e-14, max_policy_iters=1, max_pseudo_steps=1))
    with pytest.raises(ConfigError):
        SolveConfig(residual_tol=0.0)
    with pytest.raises(ConfigError):
        SolveConfig(pseudo_step_safety=1.5)
