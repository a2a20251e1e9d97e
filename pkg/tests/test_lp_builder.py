import numpy as np
import pytest
from scipy.optimize import linprog

from ctdispatch import (DomainError, PwaFunction, VariableIndex, build_full_lp, build_master_lp,
                        build_scenario_lp, objective_coefficients, solve, vertex_demand,
                        worst_case_cost)
from ctdispatch.lp_builder import rule_from_solution, sigmas, to_lp_format
from ctdispatch.simulate import envelope_trajectory
from instances import random_instance, tiny
from oracles import rational_simplex


def highs(p):
    res = linprog(p.c, A_ub=p.A_ub if p.A_ub.size else None, b_ub=p.b_ub if p.A_ub.size else None,
                  A_eq=p.A_eq if p.A_eq.size else None, b_eq=p.b_eq if p.A_eq.size else None,
                  bounds=[(None, None)] * p.n, method="highs")
    return res


def test_variable_index_layout():
    idx = VariableIndex(2, 3, 4, total_cost=True)
    assert idx.n == 6 + 8 + 3 + 1
    assert idx.alpha(1, 2) == 5
    assert idx.beta(0, 0) == 6 and idx.beta(3, 1) == 13
    assert idx.eta_load(2) == 16 and idx.eta == 17
    x = np.arange(idx.n, dtype=float)
    alpha, beta = idx.split(x)
    assert alpha[1, 2] == 5 and beta[3, 1] == 13
    with pytest.raises(DomainError):
        VariableIndex(1, 1, 2, load_epigraphs=False).eta_load(0)


def test_vertex_demand():
    env, _ = tiny()
    assert vertex_demand(env, 0, [0]).tolist() == env.lower[0].tolist()
    assert vertex_demand(env, 1, [1]).tolist() == env.upper[1].tolist()


def test_sigmas_lexicographic():
    assert [s.tolist() for s in sigmas(2)] == [[0, 0], [0, 1], [1, 0], [1, 1]]


def test_full_lp_row_counts():
    env, sys_ = tiny()
    p = build_full_lp(env, sys_)
    vertex, ramp, epigraph = 2 * 2 * 4, 2 * 1 * 4, 2
    assert p.A_ub.shape == (vertex + ramp + epigraph, 2 + 4 + 1)
    assert p.A_eq.shape == (1 + 2, 7)


def test_full_lp_tiny_optimum():
    env, sys_ = tiny()
    p = build_full_lp(env, sys_)
    sol = solve(p)
    assert sol.objective == pytest.approx(4.0, abs=1e-9)
    rule = rule_from_solution(sol.x, env, sys_.G)
    assert worst_case_cost(rule, env, sys_.cost) == pytest.approx(4.0, abs=1e-9)
    # the optimum is not unique; the all-on-the-cheap-unit rule attains it
    x = np.zeros(p.n)
    x[0], x[-1] = 1.0, 8.0  # eta bounds twice the energy cost
    assert np.all(p.A_ub @ x <= p.b_ub + 1e-12) and np.allclose(p.A_eq @ x, p.b_eq)
    assert p.c @ x == pytest.approx(4.0)
    status, exact = rational_simplex(p.c, p.A_ub, p.b_ub, p.A_eq, p.b_eq)
    assert status == "optimal" and exact == 4
    assert highs(p).fun == pytest.approx(4.0, abs=1e-9)


def test_master_is_a_relaxation():
    env, sys_ = tiny()
    full = solve(build_full_lp(env, sys_)).objective
    for lp in ([0], [1]):
        v = solve(build_master_lp(env, sys_, lp)).objective
        assert -1e-12 <= v <= full + 1e-9
    # regression value with the lower-vertex selector, confirmed by HiGHS
    p = build_master_lp(env, sys_, [0])
    assert solve(p).objective == pytest.approx(2.0, abs=1e-9)
    assert highs(p).fun == pytest.approx(2.0, abs=1e-9)


def test_master_rejects_bad_selector():
    env, sys_ = tiny()
    with pytest.raises(DomainError):
        build_master_lp(env, sys_, [0.5])
    with pytest.raises(DomainError):
        build_master_lp(env, sys_, [0, 1])


def test_scenario_lp_with_envelopes_equals_full_lp_for_one_load():
    env, sys_ = tiny()
    scen = [envelope_trajectory(env, "upper"), envelope_trajectory(env, "lower")]
    assert solve(build_scenario_lp(scen, sys_, env)).objective == pytest.approx(4.0, abs=1e-9)


def test_scenario_lp_single_constant_trajectory():
    env, sys_ = tiny()
    sol = solve(build_scenario_lp([[PwaFunction.constant(3.0, 1.0)]], sys_, env))
    assert sol.objective == pytest.approx(3.0, abs=1e-9)  # cheapest unit serves 3 for 1 h


def test_scenario_lp_rejects_off_grid_breakpoints():
    env, sys_ = tiny()
    with pytest.raises(DomainError, match="not on the envelope grid"):
        build_scenario_lp([[PwaFunction([0, 0.3, 1], [3, 3, 3])]], sys_, env)


def test_objective_coefficients_match_worst_case_cost(rng):
    env, sys_ = tiny()
    c_beta, u, l = objective_coefficients(env, sys_.cost)
    assert c_beta.shape == (env.M, sys_.G) and u.shape == (sys_.G, env.D)
    # alpha = 0: cost of the intercept alone is the integral of C @ beta
    from ctdispatch import DecisionRule
    beta = rng.uniform(0, 1, (env.M, sys_.G))
    rule = DecisionRule(np.zeros((2, 1)), beta, env.grid)
    direct = 0.5 * np.sum(env.grid.deltas[:, None] * (beta[1:] + beta[:-1]) @ sys_.cost)
    assert worst_case_cost(rule, env, sys_.cost) == pytest.approx(direct, rel=1e-14)


def test_full_lp_agrees_with_highs(rng):
    for _ in range(5):
        env, sys_ = random_instance(rng)
        p = build_full_lp(env, sys_)
        assert solve(p).objective == pytest.approx(highs(p).fun, rel=1e-8)


def test_full_lp_solution_is_feasible_between_breakpoints(rng):
    """Feasibility at the vertices implies feasibility for any demand at any time."""
    from ctdispatch import assemble

    for _ in range(5):
        env, sys_ = random_instance(rng)
        rule = rule_from_solution(solve(build_full_lp(env, sys_)).x, env, sys_.G)
        stk = assemble(sys_)
        for t in rng.uniform(0, env.horizon, 1000):
            lo, hi = env.lower_at(t), env.upper_at(t)
            xi = lo + rng.uniform(size=env.D) * (hi - lo)
            x = rule.evaluate(t, xi)
            assert np.all(stk.A @ x + stk.B @ xi <= stk.a + 1e-8)


def test_lp_export():
    env, sys_ = tiny()
    p = build_full_lp(env, sys_)
    text = to_lp_format(p)
    lines = text.splitlines()
    assert lines[1] == "Minimize" and lines[-1] == "End"
    assert sum(line.startswith(" ub") for line in lines) == p.A_ub.shape[0]
    assert sum(line.startswith(" eq") for line in lines) == p.A_eq.shape[0]
    assert " alpha_gen1_load1 free" in lines
