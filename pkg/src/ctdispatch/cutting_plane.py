"""Row generation for the robust rule LP.

The master problem starts from one randomly chosen vertex selector. After
each master solve, every operating-limit row at every breakpoint and every
generator ramp bound on every segment is checked at its worst vertex, which
a sign rule finds without enumerating the ``2**D`` vertices. All violated
rows found in a round are added before the next solve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .envelope import DemandEnvelope
from .errors import IterationLimit, ModelInfeasible, SolverFailure
from .lp_builder import (VariableIndex, build_master_lp, ramp_rows, vertex_demand,
                         vertex_rows)
from .lp_solver import INFEASIBLE, LpProblem, LpSolution, solve
from .rule import DecisionRule
from .simulate import worst_case_cost
from .system import StackedInequalities, SystemModel, assemble

log = logging.getLogger(__name__)

VERTEX = "vertex-inequality"
RAMP_UPPER = "ramp-upper"
RAMP_LOWER = "ramp-lower"

SEPARATION_TOL = 1e-7


@dataclass(frozen=True)
class SeparationResult:
    family: str
    j: int  # breakpoint (vertex rows) or segment (ramp rows)
    row: int  # stacked-inequality row, or generator index for ramp rows
    sigma: tuple
    violation: float

    @property
    def key(self) -> tuple:
        return (self.family, self.j, self.row, self.sigma)


@dataclass
class SolveLog:
    iterations: int = 0
    master_objectives: list = field(default_factory=list)
    cuts_added: list = field(default_factory=list)
    objective: float = float("nan")
    rule: DecisionRule | None = None

    def lines(self) -> list[str]:
        return [f"{k + 1} {obj!r} {n}" for k, (obj, n) in
                enumerate(zip(self.master_objectives, self.cuts_added))]


def iteration_bound(D: int, M: int) -> int:
    return 2 ** D * (3 * M - 2)


def separate_vertex(alpha, beta_j, env: DemandEnvelope, stk: StackedInequalities, j: int,
                    p: int, tol: float = SEPARATION_TOL) -> SeparationResult | None:
    """Worst vertex of the demand box at breakpoint ``j`` for limit row ``p``."""
    v = stk.A[p] @ alpha + stk.B[p]
    sigma = (v >= 0).astype(float)
    lhs = v @ vertex_demand(env, j, sigma) + stk.A[p] @ beta_j
    excess = float(lhs - stk.a[p])
    if excess > tol:
        return SeparationResult(VERTEX, j, p, tuple(int(s) for s in sigma), excess)
    return None


def separate_ramp(alpha, g_j, env: DemandEnvelope, sys: SystemModel, j: int, generator: int,
                  bound: str, tol: float = SEPARATION_TOL) -> SeparationResult | None:
    """Worst demand-slope vertex on segment ``j`` for one generator ramp bound.

    ``g_j`` is the slope of the breakpoint values on the segment (length ``G``).
    """
    row = np.asarray(alpha)[generator]
    lo, hi = env.ramp_lo[j], env.ramp_hi[j]
    if bound == "upper":
        sigma = (row >= 0).astype(float)
        excess = row @ (lo + sigma * (hi - lo)) + g_j[generator] - sys.ramp_up[generator]
        family = RAMP_UPPER
    elif bound == "lower":
        sigma = (row < 0).astype(float)
        excess = sys.ramp_down[generator] - (row @ (lo + sigma * (hi - lo)) + g_j[generator])
        family = RAMP_LOWER
    else:
        raise ValueError(f"bound must be 'upper' or 'lower', got {bound!r}")
    if excess > tol:
        return SeparationResult(family, j, generator, tuple(int(s) for s in sigma), float(excess))
    return None


def separate_all(alpha, beta, env: DemandEnvelope, sys: SystemModel,
                 stk: StackedInequalities | None = None,
                 tol: float = SEPARATION_TOL) -> list[SeparationResult]:
    """Most violated vertex for every (breakpoint, row) and (segment, generator, bound)."""
    stk = stk or assemble(sys)
    out = []
    for j in range(env.M):
        for p in range(stk.rows):
            cut = separate_vertex(alpha, beta[j], env, stk, j, p, tol)
            if cut:
                out.append(cut)
    slopes = np.diff(beta, axis=0) / env.grid.deltas[:, None]
    for j in range(env.M - 1):
        for g in range(sys.G):
            for bound in ("upper", "lower"):
                cut = separate_ramp(alpha, slopes[j], env, sys, j, g, bound, tol)
                if cut:
                    out.append(cut)
    return out


def cut_row(cut: SeparationResult, idx: VariableIndex, env: DemandEnvelope, sys: SystemModel,
            stk: StackedInequalities) -> tuple[np.ndarray, float]:
    sigma = np.array(cut.sigma, dtype=float)
    if cut.family == VERTEX:
        rows, rhs = vertex_rows(idx, stk, cut.j, vertex_demand(env, cut.j, sigma))
        return rows[cut.row], rhs[cut.row]
    psi = env.ramp_lo[cut.j] + sigma * (env.ramp_hi[cut.j] - env.ramp_lo[cut.j])
    rows, rhs = ramp_rows(idx, sys, env.grid.deltas[cut.j], cut.j, psi)
    k = cut.row + (sys.G if cut.family == RAMP_LOWER else 0)
    return rows[k], rhs[k]


def _initial_keys(env, sys, stk, l_prime) -> set:
    s = tuple(int(v) for v in l_prime)
    keys = {(VERTEX, j, p, s) for j in range(env.M) for p in range(stk.rows)}
    for j in range(env.M - 1):
        for g in range(sys.G):
            keys.add((RAMP_UPPER, j, g, s))
            keys.add((RAMP_LOWER, j, g, s))
    return keys


def solve_robust(env: DemandEnvelope, sys: SystemModel, seed: int = 0,
                 tol: float = SEPARATION_TOL, max_iter: int | None = None,
                 solver: Callable[[LpProblem], LpSolution] = solve) -> tuple[DecisionRule, SolveLog]:
    """Cutting-plane solution of the robust rule LP.

    ``max_iter`` caps master solves and defaults to ``2**D * (3M - 2)``.
    ``solver`` may be any callable honouring the :func:`ctdispatch.lp_solver.solve`
    contract. The reported objective is the closed-form worst-case cost of
    the returned rule.
    """
    rng = np.random.default_rng(seed)
    l_prime = rng.integers(0, 2, size=env.D).astype(float)
    limit = iteration_bound(env.D, env.M) if max_iter is None else int(max_iter)
    stk = assemble(sys)
    idx = VariableIndex(sys.G, env.D, env.M, total_cost=True)
    problem = build_master_lp(env, sys, l_prime)
    seen = _initial_keys(env, sys, stk, l_prime)
    result = SolveLog()
    while True:
        if result.iterations >= limit:
            raise IterationLimit(f"no convergence within {limit} master solves")
        sol = solver(problem)
        result.iterations += 1
        if sol.status == INFEASIBLE:
            raise ModelInfeasible("the master problem is infeasible, so the robust model is too")
        if not sol.optimal:
            raise SolverFailure(f"master problem returned status {sol.status!r}")
        alpha, beta = idx.split(sol.x)
        cuts = [c for c in separate_all(alpha, beta, env, sys, stk, tol) if c.key not in seen]
        result.master_objectives.append(sol.objective)
        result.cuts_added.append(len(cuts))
        log.info("iteration %d: master objective %.10g, %d cuts", result.iterations,
                 sol.objective, len(cuts))
        if not cuts:
            break
        rows, rhs = zip(*(cut_row(c, idx, env, sys, stk) for c in cuts))
        seen.update(c.key for c in cuts)
        problem = problem.with_inequalities(np.array(rows), np.array(rhs))
    rule = DecisionRule(alpha, beta, env.grid)
    result.rule = rule
    result.objective = worst_case_cost(rule, env, sys.cost)
    return rule, result
