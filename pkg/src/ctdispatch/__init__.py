"""Robust continuous-time generation scheduling with affine decision rules."""

from .cutting_plane import SeparationResult, SolveLog, separate_ramp, separate_vertex, solve_robust
from .envelope import (DemandEnvelope, RampLimits, StepBounds, build_envelope_set,
                       build_lower_envelope, build_upper_envelope, validate_membership)
from .errors import (CtDispatchError, DomainError, InfeasibleUncertaintySet, IterationLimit,
                     ModelInfeasible, SolverFailure)
from .lp_builder import (VariableIndex, build_full_lp, build_master_lp, build_scenario_lp,
                         objective_coefficients, vertex_demand)
from .lp_solver import LpProblem, LpSolution, solve
from .pwa import (PwaFunction, TimeGrid, evaluate, gamma, integrate, merge_breakpoints,
                  resample, segment_index)
from .rule import DecisionRule
from .simulate import (FeasibilityReport, Trajectory, audit, cheapest_dispatch_cost,
                       realized_cost, sample_trajectory, scenario_rule, worst_case_cost)
from .system import StackedInequalities, SystemModel, assemble

__version__ = "0.1.0"
