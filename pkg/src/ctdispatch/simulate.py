"""Sampling demand trajectories, replaying rules and auditing the outcome."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .envelope import DemandEnvelope
from .errors import DomainError, ModelInfeasible, SolverFailure
from .lp_builder import build_scenario_lp, objective_coefficients, rule_from_solution
from .lp_solver import INFEASIBLE, LpProblem, LpSolution, solve
from .pwa import PwaFunction, integrate, merge_times
from .rule import DecisionRule
from .system import SystemModel

FAMILIES = ("capacity", "line", "ramp", "balance")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One continuous PWA demand path per load."""

    loads: tuple
    names: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "loads", tuple(self.loads))
        if not self.names:
            object.__setattr__(self, "names", tuple(f"load{d + 1}" for d in range(len(self.loads))))

    def __len__(self) -> int:
        return len(self.loads)

    def __iter__(self):
        return iter(self.loads)

    def __getitem__(self, d: int) -> PwaFunction:
        return self.loads[d]

    @property
    def times(self) -> np.ndarray:
        return self.loads[0].breakpoints

    def values(self) -> np.ndarray:
        """``len(times) x D`` matrix (loads share breakpoints when sampled)."""
        return np.column_stack([np.interp(self.times, f.breakpoints, f.values) for f in self.loads])


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_trajectory(env: DemandEnvelope, points_per_horizon: int = 2401, seed=0) -> Trajectory:
    """Forward-sampled member of the uncertainty set.

    The time grid is ``points_per_horizon`` equally spaced points merged with
    the envelope grid. Each next value is uniform on the interval reachable
    within the ramp limits that also stays between the envelopes; that
    interval is never empty because both envelopes respect the ramp limits.
    ``seed`` may be an integer or a ``numpy.random.Generator``.
    """
    if points_per_horizon < 2:
        raise DomainError("points_per_horizon must be at least 2")
    rng = _rng(seed)
    t = merge_times([np.linspace(0.0, env.horizon, points_per_horizon), env.grid.points]).points
    hi = np.column_stack([np.interp(t, env.grid.points, env.upper[:, d]) for d in range(env.D)])
    lo = np.column_stack([np.interp(t, env.grid.points, env.lower[:, d]) for d in range(env.D)])
    r_up = np.array([r.up for r in env.ramps])
    r_dn = np.array([r.down for r in env.ramps])
    dt = np.diff(t)
    vals = np.empty_like(hi)
    vals[0] = rng.uniform(lo[0], hi[0])
    scale = 1.0 + np.max(np.abs(hi))
    for i in range(1, t.size):
        a = np.maximum(lo[i], vals[i - 1] + r_dn * dt[i - 1])
        b = np.minimum(hi[i], vals[i - 1] + r_up * dt[i - 1])
        if np.any(a > b + 1e-9 * scale):
            raise RuntimeError(f"empty sampling interval at t={t[i]:g}; envelope invariant broken")
        b = np.maximum(a, b)
        vals[i] = a + rng.uniform(size=env.D) * (b - a)
    return Trajectory(tuple(PwaFunction(t, vals[:, d]) for d in range(env.D)), env.names)


def envelope_trajectory(env: DemandEnvelope, which: str) -> Trajectory:
    """The upper (``"upper"``) or lower (``"lower"``) envelope as a trajectory."""
    data = {"upper": env.upper, "lower": env.lower}[which]
    return Trajectory(tuple(PwaFunction(env.grid.points, data[:, d]) for d in range(env.D)),
                      env.names)


@dataclass
class FamilyReport:
    max_violation: float = 0.0
    time: float = float("nan")
    count: int = 0


@dataclass
class FeasibilityReport:
    families: dict = field(default_factory=lambda: {k: FamilyReport() for k in FAMILIES})
    tol: float = 1e-6

    @property
    def ok(self) -> bool:
        return all(f.count == 0 for f in self.families.values())

    def __getitem__(self, family: str) -> FamilyReport:
        return self.families[family]

    def max_violations(self) -> dict:
        return {k: f.max_violation for k, f in self.families.items()}


def _record(rep: FamilyReport, excess: np.ndarray, times: np.ndarray, tol: float):
    if excess.size == 0:
        return
    k = int(np.argmax(excess))
    worst = max(float(excess[k]), 0.0)
    if worst > rep.max_violation:
        rep.max_violation, rep.time = worst, float(times[k])
    rep.count += int(np.count_nonzero(excess > tol))


def audit(outputs: Sequence[PwaFunction], traj: Sequence[PwaFunction], sys: SystemModel,
          tol: float = 1e-6) -> FeasibilityReport:
    """Operating limits, ramp limits and balance checked on exact PWA structure.

    Values are checked at every merged breakpoint and ramps on every merged
    segment, which covers the whole horizon because all inputs are PWA.
    Counts are violating breakpoints (segments for ramps) beyond ``tol``.
    """
    if len(outputs) != sys.G or len(traj) != sys.D:
        raise DomainError("output/trajectory counts do not match the system")
    horizons = {round(f.horizon, 9) for f in list(outputs) + list(traj)}
    if len(horizons) != 1:
        raise DomainError("outputs and trajectory have different horizons")
    t = merge_times([f.breakpoints for f in list(outputs) + list(traj)]).points
    x = np.column_stack([np.interp(t, f.breakpoints, f.values) for f in outputs])
    xi = np.column_stack([np.interp(t, f.breakpoints, f.values) for f in traj])
    rep = FeasibilityReport(tol=tol)
    cap = np.maximum(x - sys.x_max, sys.x_min - x).max(axis=1)
    _record(rep["capacity"], cap, t, tol)
    if sys.L:
        flow = x @ sys.ptdf_gen.T + xi @ sys.ptdf_load.T
        _record(rep["line"], (np.abs(flow) - sys.f_max).max(axis=1), t, tol)
    slope = np.diff(x, axis=0) / np.diff(t)[:, None]
    ramp = np.maximum(slope - sys.ramp_up, sys.ramp_down - slope).max(axis=1)
    _record(rep["ramp"], ramp, t[:-1], tol)
    _record(rep["balance"], np.abs(x.sum(axis=1) - xi.sum(axis=1)), t, tol)
    return rep


def realized_cost(rule: DecisionRule, traj: Sequence[PwaFunction], cost) -> float:
    """Exact integral of the generation cost along a replayed trajectory."""
    cost = np.asarray(cost, dtype=float)
    return float(sum(c * integrate(f) for c, f in zip(cost, rule.replay(list(traj)))))


def worst_case_cost(rule: DecisionRule, env: DemandEnvelope, cost) -> float:
    """Closed-form supremum of the cost over the uncertainty set."""
    if not rule.grid.same_as(env.grid):
        raise DomainError("rule grid differs from the envelope grid")
    c_beta, u, l = objective_coefficients(env, cost)
    demand = sum(max(u[:, d] @ rule.alpha[:, d], l[:, d] @ rule.alpha[:, d]) for d in range(env.D))
    return float(np.sum(c_beta * rule.beta) + 0.5 * demand)


def _solve_scenarios(scenarios, sys, env, solver) -> tuple[DecisionRule, float]:
    sol = solver(build_scenario_lp(scenarios, sys, env))
    if sol.status == INFEASIBLE:
        raise ModelInfeasible("the scenario problem is infeasible")
    if not sol.optimal:
        raise SolverFailure(f"scenario problem returned status {sol.status!r}")
    return rule_from_solution(sol.x, env, sys.G), float(sol.objective)


def cheapest_dispatch_cost(env: DemandEnvelope, sys: SystemModel,
                           solver: Callable[[LpProblem], LpSolution] = solve) -> float:
    """Optimal cost of serving only the lower envelope (a lower cost reference)."""
    return _solve_scenarios([envelope_trajectory(env, "lower")], sys, env, solver)[1]


def scenario_rule(env: DemandEnvelope, sys: SystemModel, n_scenarios: int = 30, seed=0,
                  solver: Callable[[LpProblem], LpSolution] = solve) -> tuple[DecisionRule, float]:
    """Rule trained on both envelopes plus ``n_scenarios`` sampled members.

    Sampled scenarios live on the envelope grid itself. Returns the rule and
    the worst cost over the training scenarios.
    """
    rng = _rng(seed)
    scen = [envelope_trajectory(env, "upper"), envelope_trajectory(env, "lower")]
    scen += [sample_trajectory(env, 2, rng) for _ in range(n_scenarios)]
    return _solve_scenarios(scen, sys, env, solver)
