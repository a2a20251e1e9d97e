import numpy as np
import pytest
from scipy.optimize import linprog

from ctdispatch import DomainError, LpProblem, SolverFailure, solve
from ctdispatch.lp_solver import INFEASIBLE, OPTIMAL, UNBOUNDED, row_violations
from oracles import rational_simplex


def lp(c, A_ub=(), b_ub=(), A_eq=(), b_eq=()):
    n = len(c)
    return LpProblem(c, np.array(A_ub, float).reshape(-1, n), b_ub,
                     np.array(A_eq, float).reshape(-1, n), b_eq)


def test_examples():
    s = solve(lp([-1, -1], [[1, 1], [-1, 0], [0, -1]], [1, 0, 0]))
    assert s.status == OPTIMAL and s.objective == pytest.approx(-1)
    assert solve(lp([0], [[1], [-1]], [-1, 0])).status == INFEASIBLE
    assert solve(lp([-1], [[-1]], [0])).status == UNBOUNDED


def test_free_variables_and_equalities():
    s = solve(lp([1, 1], [], [], [[1, -1]], [3]))
    assert s.status == UNBOUNDED
    s = solve(lp([1, 2], [[-1, 0], [0, -1]], [-1, -1], [[1, 1]], [5]))
    assert s.objective == pytest.approx(6) and s.x == pytest.approx([4, 1])


def test_no_constraints():
    assert solve(lp([0, 0])).status == OPTIMAL
    assert solve(lp([1, 0])).status == UNBOUNDED


def test_zero_rows():
    assert solve(lp([1], [[0], [-1]], [-1, 0])).status == INFEASIBLE
    assert solve(lp([1], [[0], [-1]], [1, 0])).objective == pytest.approx(0)
    assert solve(lp([1], [[-1]], [0], [[0]], [2])).status == INFEASIBLE


def test_duals_certify_optimality(rng):
    for _ in range(30):
        n, m = 4, 8
        A = rng.normal(size=(m, n))
        x0 = rng.normal(size=n)
        b = A @ x0 + rng.uniform(0, 1, m)
        c = -A.T @ rng.uniform(0, 1, m)  # bounded: -c is in the cone of the rows
        s = solve(lp(c, A, b))
        assert s.status == OPTIMAL
        y = s.duals_ub
        assert np.all(y >= -1e-12)
        assert np.allclose(A.T @ y, -c, atol=1e-9)
        # weak duality bound -b @ y is attained
        assert s.objective == pytest.approx(-b @ y, abs=1e-8)
        assert c @ x0 >= s.objective - 1e-9


def test_degenerate_cycling_example():
    # Beale's example, which cycles under textbook Dantzig pricing
    c = [-0.75, 150, -0.02, 6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]] + (-np.eye(4)).tolist()
    s = solve(lp(c, A, [0, 0, 1, 0, 0, 0, 0]))
    assert s.objective == pytest.approx(-0.05)


def test_rank_deficient_columns():
    # x1 and x2 only appear as a sum
    s = solve(lp([1, 1, 0], [[-1, -1, 0], [0, 0, 1], [0, 0, -1]], [-2, 1, 1]))
    assert s.status == OPTIMAL and s.objective == pytest.approx(2)
    s = solve(lp([1, 2, 0], [[-1, -1, 0], [0, 0, 1]], [-2, 1]))
    assert s.status == UNBOUNDED


def test_agrees_with_highs_on_random_lps(rng):
    for _ in range(200):
        n, m, q = rng.integers(1, 8), rng.integers(0, 12), rng.integers(0, 3)
        c = rng.integers(-4, 5, n).astype(float)
        A = rng.integers(-3, 4, (m, n)).astype(float)
        E = rng.integers(-2, 3, (q, n)).astype(float)
        b = rng.integers(-2, 8, m).astype(float)
        e = rng.integers(-3, 4, q).astype(float)
        s = solve(lp(c, A, b, E, e))
        r = linprog(c, A_ub=A if m else None, b_ub=b if m else None, A_eq=E if q else None,
                    b_eq=e if q else None, bounds=[(None, None)] * n, method="highs")
        expected = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}[r.status]
        assert s.status == expected
        if expected == OPTIMAL:
            assert s.objective == pytest.approx(r.fun, abs=1e-9 * (1 + abs(r.fun)))
            ub, eq = row_violations(lp(c, A, b, E, e), s.x)
            assert max(ub.max(initial=0), eq.max(initial=0)) <= 1e-9


def test_agrees_with_rational_simplex(rng):
    for _ in range(25):
        n, m = rng.integers(1, 5), rng.integers(1, 6)
        c = rng.integers(-3, 4, n)
        A = rng.integers(-3, 4, (m, n))
        b = rng.integers(-2, 6, m)
        status, exact = rational_simplex(c, A, b, np.zeros((0, n)), [])
        s = solve(lp(c, A, b))
        assert s.status == status
        if status == OPTIMAL:
            assert s.objective == pytest.approx(float(exact), abs=1e-9)


def test_badly_scaled_rows():
    s = solve(lp([1, 1], [[-1e6, 0], [0, -1e-6]], [-1e6, -1e-6]))
    assert s.objective == pytest.approx(2)


def test_problem_validation():
    with pytest.raises(DomainError):
        LpProblem([1, 2], np.ones((1, 3)), [1], np.zeros((0, 2)), [])
    with pytest.raises(DomainError):
        LpProblem([1], np.ones((1, 1)), [np.inf], np.zeros((0, 1)), [])


def test_iteration_count_reported():
    s = solve(lp([-1, -1], [[1, 0], [0, 1]], [1, 1]))
    assert s.iterations >= 1


def test_solver_failure_is_an_error_type():
    assert issubclass(SolverFailure, RuntimeError)
