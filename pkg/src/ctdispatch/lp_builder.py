"""Linear programs for the robust rule and its scenario-based counterpart.

Column layout (``VariableIndex``): ``alpha`` row-major (``G*D``), then the
breakpoint values ``beta`` grouped by breakpoint (``M*G``), then one cost
epigraph variable per load (``D``) and, for the master problem, one overall
cost variable.

Rows come in families, each produced by a helper that the cutting-plane
loop reuses verbatim:

* vertex rows: ``(A alpha + B) xi + A beta_j <= a`` at every breakpoint
  ``j`` and every vertex ``xi = lower_j + sigma * width_j`` of the demand box;
* ramp rows: ``R_lo <= alpha psi + (beta_{j+1} - beta_j) / delta_j <= R_hi``
  on every segment for every vertex ``psi`` of the demand-slope box;
* balance equalities: column sums of ``alpha`` equal 1 and each ``beta_j``
  sums to 0;
* cost epigraph rows: ``eta_d >= u_d @ alpha[:, d]`` and
  ``eta_d >= l_d @ alpha[:, d]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .envelope import DemandEnvelope
from .errors import DomainError
from .lp_solver import LpProblem
from .pwa import PwaFunction
from .rule import DecisionRule
from .system import StackedInequalities, SystemModel, assemble

__all__ = [
    "LpProblem", "VariableIndex", "sigmas", "vertex_demand", "objective_coefficients",
    "vertex_rows", "ramp_rows", "balance_rows", "epigraph_rows",
    "build_full_lp", "build_master_lp", "build_scenario_lp", "rule_from_solution",
    "to_lp_format",
]


@dataclass(frozen=True)
class VariableIndex:
    G: int
    D: int
    M: int
    load_epigraphs: bool = True
    total_cost: bool = False

    @property
    def n(self) -> int:
        return (self.G * self.D + self.M * self.G
                + (self.D if self.load_epigraphs else 0) + int(self.total_cost))

    def alpha(self, g: int, d: int) -> int:
        return g * self.D + d

    def beta(self, j: int, g: int) -> int:
        return self.G * self.D + j * self.G + g

    @property
    def alpha_slice(self) -> slice:
        return slice(0, self.G * self.D)

    @property
    def beta_slice(self) -> slice:
        return slice(self.G * self.D, self.G * self.D + self.M * self.G)

    def eta_load(self, d: int) -> int:
        if not self.load_epigraphs:
            raise DomainError("this layout has no per-load epigraph variables")
        return self.G * self.D + self.M * self.G + d

    @property
    def eta(self) -> int:
        if not self.total_cost:
            raise DomainError("this layout has no total-cost variable")
        return self.n - 1

    def names(self, gen_names=None, load_names=None) -> tuple:
        gn = gen_names or [f"g{g + 1}" for g in range(self.G)]
        ln = load_names or [f"d{d + 1}" for d in range(self.D)]
        cols = [f"alpha_{gn[g]}_{ln[d]}" for g in range(self.G) for d in range(self.D)]
        cols += [f"beta_{j + 1}_{gn[g]}" for j in range(self.M) for g in range(self.G)]
        if self.load_epigraphs:
            cols += [f"eta_{ln[d]}" for d in range(self.D)]
        if self.total_cost:
            cols.append("eta")
        return tuple(cols)

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(alpha, beta)`` arrays (``G x D`` and ``M x G``) from a solution."""
        x = np.asarray(x, dtype=float)
        return (x[self.alpha_slice].reshape(self.G, self.D),
                x[self.beta_slice].reshape(self.M, self.G))


def sigmas(D: int) -> list[np.ndarray]:
    """All vertex selectors in lexicographic order, all-zeros first."""
    return [np.array(s, dtype=float) for s in product((0, 1), repeat=D)]


def vertex_demand(env: DemandEnvelope, j: int, sigma) -> np.ndarray:
    return env.lower[j] + np.asarray(sigma, dtype=float) * env.width[j]


def objective_coefficients(env: DemandEnvelope, cost) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form worst-case cost data.

    Returns ``(c_beta, u, l)``: ``c_beta`` (``M x G``) weights the breakpoint
    values, and column ``d`` of ``u`` / ``l`` (``G x D``) is the linear form in
    ``alpha[:, d]`` giving load ``d``'s cost along its upper / lower envelope.
    The worst-case cost is ``sum(c_beta * beta) + 0.5 * sum_d max(u_d @ a_d,
    l_d @ a_d)``.
    """
    cost = np.asarray(cost, dtype=float)
    dt = env.grid.deltas
    weight = np.zeros(env.M)
    weight[:-1] += 0.5 * dt
    weight[1:] += 0.5 * dt
    c_beta = weight[:, None] * cost[None, :]
    u = np.outer(cost, dt @ env.upper_sums)
    l = np.outer(cost, dt @ env.lower_sums)
    return c_beta, u, l


def vertex_rows(idx: VariableIndex, stk: StackedInequalities, j: int, xi) -> tuple[np.ndarray, np.ndarray]:
    """All ``P`` operating-limit rows at breakpoint ``j`` for demand ``xi``."""
    xi = np.asarray(xi, dtype=float)
    P, G, D = stk.rows, idx.G, idx.D
    rows = np.zeros((P, idx.n))
    rows[:, idx.alpha_slice] = (stk.A[:, :, None] * xi[None, None, :]).reshape(P, G * D)
    b0 = idx.beta(j, 0)
    rows[:, b0:b0 + G] = stk.A
    return rows, stk.a - stk.B @ xi


def ramp_rows(idx: VariableIndex, sys: SystemModel, dt: float, j: int, psi) -> tuple[np.ndarray, np.ndarray]:
    """Upper then lower ramp rows (``2G``) on segment ``j`` for demand slope ``psi``."""
    psi = np.asarray(psi, dtype=float)
    G, D = idx.G, idx.D
    up = np.zeros((G, idx.n))
    for g in range(G):
        up[g, idx.alpha(g, 0):idx.alpha(g, 0) + D] = psi
        up[g, idx.beta(j + 1, g)] += 1.0 / dt
        up[g, idx.beta(j, g)] -= 1.0 / dt
    return np.vstack([up, -up]), np.concatenate([sys.ramp_up, -sys.ramp_down])


def balance_rows(idx: VariableIndex) -> tuple[np.ndarray, np.ndarray]:
    G, D, M = idx.G, idx.D, idx.M
    rows = np.zeros((D + M, idx.n))
    for d in range(D):
        rows[d, [idx.alpha(g, d) for g in range(G)]] = 1.0
    for j in range(M):
        rows[D + j, idx.beta(j, 0):idx.beta(j, 0) + G] = 1.0
    return rows, np.concatenate([np.ones(D), np.zeros(M)])


def epigraph_rows(idx: VariableIndex, u: np.ndarray, l: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rows = np.zeros((2 * idx.D, idx.n))
    for d in range(idx.D):
        for k, form in enumerate((u, l)):
            r = rows[2 * d + k]
            for g in range(idx.G):
                r[idx.alpha(g, d)] = form[g, d]
            r[idx.eta_load(d)] = -1.0
    return rows, np.zeros(2 * idx.D)


def _ramp_vertex(env: DemandEnvelope, j: int, sigma) -> np.ndarray:
    lo, hi = env.ramp_lo[j], env.ramp_hi[j]
    return lo + np.asarray(sigma, dtype=float) * (hi - lo)


def _check(env: DemandEnvelope, sys: SystemModel):
    if env.D != sys.D:
        raise DomainError(f"envelope has {env.D} loads but the system has {sys.D}")


def _objective(idx: VariableIndex, env: DemandEnvelope, sys: SystemModel):
    c_beta, u, l = objective_coefficients(env, sys.cost)
    c = np.zeros(idx.n)
    c[idx.beta_slice] = c_beta.ravel()
    for d in range(idx.D):
        c[idx.eta_load(d)] = 0.5
    return c, u, l


def _slice_rows(idx, env, sys, stk, selectors_v, selectors_r):
    """Vertex and ramp rows for the given per-breakpoint / per-segment selectors."""
    rows, rhs = [], []
    for j in range(env.M):
        for s in selectors_v:
            r, b = vertex_rows(idx, stk, j, vertex_demand(env, j, s))
            rows.append(r)
            rhs.append(b)
    dts = env.grid.deltas
    for j in range(env.M - 1):
        for s in selectors_r:
            r, b = ramp_rows(idx, sys, dts[j], j, _ramp_vertex(env, j, s))
            rows.append(r)
            rhs.append(b)
    return rows, rhs


def build_full_lp(env: DemandEnvelope, sys: SystemModel) -> LpProblem:
    """Every vertex and ramp row for every selector, plus balance and epigraph rows."""
    _check(env, sys)
    idx = VariableIndex(sys.G, env.D, env.M)
    stk = assemble(sys)
    c, u, l = _objective(idx, env, sys)
    all_s = sigmas(env.D)
    rows, rhs = _slice_rows(idx, env, sys, stk, all_s, all_s)
    er, eb = epigraph_rows(idx, u, l)
    rows.append(er)
    rhs.append(eb)
    A_eq, b_eq = balance_rows(idx)
    return LpProblem(c, np.vstack(rows), np.concatenate(rhs), A_eq, b_eq,
                     idx.names(sys.gen_names, env.names))


def build_master_lp(env: DemandEnvelope, sys: SystemModel, l_prime) -> LpProblem:
    """Relaxation keeping only selector ``l_prime`` and minimising a cost bound ``eta >= 0``."""
    _check(env, sys)
    l_prime = np.asarray(l_prime, dtype=float)
    if l_prime.shape != (env.D,) or not np.all(np.isin(l_prime, (0.0, 1.0))):
        raise DomainError("l_prime must be a 0/1 vector with one entry per load")
    idx = VariableIndex(sys.G, env.D, env.M, total_cost=True)
    stk = assemble(sys)
    cost, u, l = _objective(idx, env, sys)
    rows, rhs = _slice_rows(idx, env, sys, stk, [l_prime], [l_prime])
    er, eb = epigraph_rows(idx, u, l)
    bound = cost.copy()
    bound[idx.eta] = -1.0
    nonneg = np.zeros(idx.n)
    nonneg[idx.eta] = -1.0
    rows += [er, bound[None, :], nonneg[None, :]]
    rhs += [eb, [0.0], [0.0]]
    A_eq, b_eq = balance_rows(idx)
    c = np.zeros(idx.n)
    c[idx.eta] = 1.0
    return LpProblem(c, np.vstack(rows), np.concatenate(rhs), A_eq, b_eq,
                     idx.names(sys.gen_names, env.names))


def _on_grid(f: PwaFunction, env: DemandEnvelope) -> np.ndarray:
    pts = env.grid.points
    tol = 1e-9 * env.horizon
    if abs(f.horizon - env.horizon) > tol:
        raise DomainError("scenario horizon differs from the envelope grid")
    pos = np.searchsorted(pts, f.breakpoints - tol)
    pos = np.minimum(pos, pts.size - 1)
    if np.any(np.abs(pts[pos] - f.breakpoints) > tol):
        bad = f.breakpoints[np.abs(pts[pos] - f.breakpoints) > tol][0]
        raise DomainError(f"scenario breakpoint t={bad:g} is not on the envelope grid")
    return np.interp(pts, f.breakpoints, f.values)


def build_scenario_lp(scenarios: Sequence[Sequence[PwaFunction]], sys: SystemModel,
                      env: DemandEnvelope) -> LpProblem:
    """Rule enforced only on finitely many joint demand trajectories.

    Each scenario is one PWA function per load with breakpoints on the
    envelope grid. A single variable ``theta`` (the last column) bounds the
    exact cost of every scenario from above and is minimised.
    """
    _check(env, sys)
    if len(scenarios) == 0:
        raise DomainError("at least one scenario is required")
    idx = VariableIndex(sys.G, env.D, env.M, load_epigraphs=False, total_cost=True)
    stk = assemble(sys)
    c_beta, _, _ = objective_coefficients(env, sys.cost)
    dts = env.grid.deltas
    rows, rhs = [], []
    cost_rows = []
    for s, traj in enumerate(scenarios):
        if len(traj) != env.D:
            raise DomainError(f"scenario {s} has {len(traj)} loads, expected {env.D}")
        X = np.column_stack([_on_grid(f, env) for f in traj])  # M x D
        for j in range(env.M):
            r, b = vertex_rows(idx, stk, j, X[j])
            rows.append(r)
            rhs.append(b)
        slopes = np.diff(X, axis=0) / dts[:, None]
        for j in range(env.M - 1):
            r, b = ramp_rows(idx, sys, dts[j], j, slopes[j])
            rows.append(r)
            rhs.append(b)
        energy = 0.5 * dts @ (X[1:] + X[:-1])  # integral of each load
        row = np.zeros(idx.n)
        row[idx.alpha_slice] = np.outer(sys.cost, energy).ravel()
        row[idx.beta_slice] = c_beta.ravel()
        row[idx.eta] = -1.0
        cost_rows.append(row)
    rows.append(np.array(cost_rows))
    rhs.append(np.zeros(len(cost_rows)))
    A_eq, b_eq = balance_rows(idx)
    c = np.zeros(idx.n)
    c[idx.eta] = 1.0
    return LpProblem(c, np.vstack(rows), np.concatenate(rhs), A_eq, b_eq,
                     idx.names(sys.gen_names, env.names))


def rule_from_solution(x, env: DemandEnvelope, G: int) -> DecisionRule:
    """Decision rule stored in the leading ``alpha`` and ``beta`` columns of ``x``."""
    alpha, beta = VariableIndex(G, env.D, env.M).split(x)
    return DecisionRule(alpha, beta, env.grid)


def _lp_terms(coefs, names) -> str:
    parts = []
    for v, name in zip(coefs, names):
        if v == 0.0:
            continue
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {abs(v)!r} {name}")
    if not parts:
        return "0 " + names[0]
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def to_lp_format(p: LpProblem) -> str:
    """CPLEX LP text with every variable declared free.

    Coefficients are written with ``repr`` so the file round-trips exactly.
    Row names are ``ub<k>`` and ``eq<k>`` in matrix order.
    """
    names = p.columns
    out = ["\\ ctdispatch export", "Minimize", " obj: " + _lp_terms(p.c, names), "Subject To"]
    for k, (row, b) in enumerate(zip(p.A_ub, p.b_ub)):
        out.append(f" ub{k}: {_lp_terms(row, names)} <= {float(b)!r}")
    for k, (row, b) in enumerate(zip(p.A_eq, p.b_eq)):
        out.append(f" eq{k}: {_lp_terms(row, names)} = {float(b)!r}")
    out.append("Bounds")
    out += [f" {name} free" for name in names]
    out.append("End")
    return "\n".join(out) + "\n"
