"""Command-line front end.

Subcommands::

    ctdispatch envelope        demand envelopes as CSV
    ctdispatch solve           robust rule by row generation
    ctdispatch solve-scenario  rule trained on sampled scenarios
    ctdispatch simulate        replay a rule on sampled trajectories and audit it
    ctdispatch experiment      all of the above on one case

Exit codes: 0 success, 1 solver breakdown, 2 bad or infeasible input,
3 infeasible scheduling model, 4 rule file does not fit the case.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .casefile import (Case, CaseError, bundled_case_path, format_rule, load_case, parse_rule,
                       write_csv)
from .cutting_plane import iteration_bound, solve_robust
from .envelope import DemandEnvelope
from .errors import (DomainError, InfeasibleUncertaintySet, IterationLimit, ModelInfeasible,
                     SolverFailure)
from .lp_builder import build_full_lp, to_lp_format
from .pwa import merge_times
from .rule import DecisionRule
from .simulate import (FAMILIES, audit, cheapest_dispatch_cost, realized_cost, sample_trajectory,
                       scenario_rule, worst_case_cost)

EXIT_OK, EXIT_SOLVER, EXIT_INPUT, EXIT_MODEL, EXIT_MISMATCH = 0, 1, 2, 3, 4


class RuleMismatch(Exception):
    """A rule file was produced for a different case."""


def _out_dir(args) -> Path:
    path = Path(args.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _settings(args, case: Case):
    run = case.run
    return dict(
        seed=run.seed if args.seed is None else args.seed,
        tol=run.tol if args.tol is None else args.tol,
        max_iter=run.max_iter if args.max_iter is None else args.max_iter,
        points=run.points_per_horizon if args.points is None else args.points,
    )


def write_envelope(env: DemandEnvelope, out: Path) -> None:
    """``envelope_steps.csv`` (value on ``[t, next t)``) and ``envelope.csv`` (PWA)."""
    grid = env.step_bounds[0].grid
    steps = {}
    for name, b in zip(env.names, env.step_bounds):
        steps[f"{name}_upper"] = np.append(b.upper, b.upper[-1])
        steps[f"{name}_lower"] = np.append(b.lower, b.lower[-1])
    write_csv(out / "envelope_steps.csv", grid, steps)
    pwa = {}
    for d, name in enumerate(env.names):
        pwa[f"{name}_upper"] = env.upper[:, d]
        pwa[f"{name}_lower"] = env.lower[:, d]
    write_csv(out / "envelope.csv", env.grid.points, pwa)


def cmd_envelope(args) -> int:
    case = load_case(args.case)
    env = case.envelope()
    out = _out_dir(args)
    write_envelope(env, out)
    print(f"M {env.M}")
    print(f"bound {env.breakpoint_bound}")
    return EXIT_OK


def _write_rule(out: Path, name: str, rule: DecisionRule, objective: float) -> Path:
    path = out / name
    path.write_text(format_rule(rule, objective))
    return path


def cmd_solve(args) -> int:
    case = load_case(args.case)
    env = case.envelope()
    s = _settings(args, case)
    out = _out_dir(args)
    if args.export_lp:
        Path(args.export_lp).write_text(to_lp_format(build_full_lp(env, case.system)))
    rule, log = solve_robust(env, case.system, seed=s["seed"], tol=s["tol"], max_iter=s["max_iter"])
    path = _write_rule(out, "rule.txt", rule, log.objective)
    (out / "iterations.log").write_text("".join(line + "\n" for line in log.lines()))
    print(f"iterations {log.iterations} (bound {iteration_bound(env.D, env.M)})")
    print(f"objective {log.objective!r}")
    print(f"rule {path}")
    return EXIT_OK


def cmd_solve_scenario(args) -> int:
    case = load_case(args.case)
    env = case.envelope()
    s = _settings(args, case)
    out = _out_dir(args)
    rule, obj = scenario_rule(env, case.system, args.n_scenarios, s["seed"])
    path = _write_rule(out, "scenario_rule.txt", rule, obj)
    print(f"scenarios {args.n_scenarios + 2}")
    print(f"objective {obj!r}")
    print(f"rule {path}")
    return EXIT_OK


def _load_rule(path, env: DemandEnvelope, case: Case) -> DecisionRule:
    rule, _ = parse_rule(Path(path).read_text())
    if rule.G != case.system.G or rule.D != env.D:
        raise RuleMismatch(f"rule has G={rule.G}, D={rule.D}; case has G={case.system.G}, D={env.D}")
    if not rule.grid.same_as(env.grid):
        raise RuleMismatch(f"rule grid ({len(rule.grid)} points) differs from the case "
                           f"breakpoint grid ({env.M} points)")
    return rule


def simulate_rule(rule: DecisionRule, env: DemandEnvelope, case: Case, n_traj: int, seed: int,
                  points: int, tol: float = 1e-6, out: Path | None = None, prefix: str = "traj"):
    """Sample, replay and audit; one summary row per trajectory.

    Rows are ``(index, cost, max violation per family...)``. With ``out``,
    each trajectory is written to ``<prefix>_<k>.csv``.
    """
    rng = np.random.default_rng(seed)
    sys_ = case.system
    rows = []
    for k in range(n_traj):
        traj = sample_trajectory(env, points, rng)
        outputs = rule.replay(list(traj))
        rep = audit(outputs, list(traj), sys_, tol)
        cost = realized_cost(rule, traj, sys_.cost)
        rows.append((k, cost) + tuple(rep[f].max_violation for f in FAMILIES))
        if out is not None:
            t = merge_times([f.breakpoints for f in outputs]).points
            cols = {name: np.interp(t, f.breakpoints, f.values) for name, f in zip(env.names, traj)}
            cols.update({name: np.interp(t, f.breakpoints, f.values)
                         for name, f in zip(sys_.gen_names, outputs)})
            write_csv(out / f"{prefix}_{k:03d}.csv", t, cols)
    return rows


def _write_summary(path: Path, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(("trajectory", "cost") + FAMILIES) + "\n")
        for k, *vals in rows:
            fh.write(",".join([str(k)] + [f"{v:.12g}" for v in vals]) + "\n")


def _print_summary(label: str, rows) -> None:
    if not rows:
        print(f"{label}: no trajectories")
        return
    costs = np.array([r[1] for r in rows])
    print(f"{label}: cost min {costs.min():.12g} mean {costs.mean():.12g} max {costs.max():.12g}")
    worst = np.max(np.array([r[2:] for r in rows]), axis=0)
    print(f"{label}: max violation " + " ".join(f"{f}={v:.3g}" for f, v in zip(FAMILIES, worst)))


def cmd_simulate(args) -> int:
    case = load_case(args.case)
    env = case.envelope()
    s = _settings(args, case)
    rule = _load_rule(args.rule, env, case)
    out = _out_dir(args)
    rows = simulate_rule(rule, env, case, args.n_traj, s["seed"], s["points"], out=out)
    _write_summary(out / "summary.csv", rows)
    _print_summary("simulation", rows)
    return EXIT_OK


def cmd_experiment(args) -> int:
    case = load_case(args.case)
    env = case.envelope()
    s = _settings(args, case)
    out = _out_dir(args)
    sys_ = case.system
    write_envelope(env, out)
    rule, log = solve_robust(env, sys_, seed=s["seed"], tol=s["tol"], max_iter=s["max_iter"])
    _write_rule(out, "rule.txt", rule, log.objective)
    (out / "iterations.log").write_text("".join(line + "\n" for line in log.lines()))
    sc_rule, sc_obj = scenario_rule(env, sys_, args.n_scenarios, s["seed"])
    _write_rule(out, "scenario_rule.txt", sc_rule, sc_obj)
    cheap = cheapest_dispatch_cost(env, sys_)
    robust_rows = simulate_rule(rule, env, case, args.n_traj, s["seed"] + 1, s["points"],
                                out=out, prefix="robust")
    sc_rows = simulate_rule(sc_rule, env, case, args.n_traj, s["seed"] + 1, s["points"],
                            out=out, prefix="scenario")
    _write_summary(out / "robust_summary.csv", robust_rows)
    _write_summary(out / "scenario_summary.csv", sc_rows)
    print(f"M {env.M} (bound {env.breakpoint_bound})")
    print(f"iterations {log.iterations}")
    print(f"worst-case cost {log.objective:.12g}")
    print(f"cheapest dispatch {cheap:.12g}")
    print(f"scenario rule worst case over Omega {worst_case_cost(sc_rule, env, sys_.cost):.12g}")
    _print_summary("robust", robust_rows)
    _print_summary("scenario", sc_rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctdispatch", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, solver=False, sampling=False):
        p.add_argument("--case", default=str(bundled_case_path()),
                       help="case file (default: bundled six-bus case)")
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--seed", type=int, help="random seed (default: from the case)")
        if solver:
            p.add_argument("--tol", type=float, help="separation tolerance")
            p.add_argument("--max-iter", type=int, help="cap on master solves")
        if sampling:
            p.add_argument("--points", type=int, help="sample points per horizon")
        p.set_defaults(tol=None, max_iter=None, points=None)
        return p

    common(sub.add_parser("envelope", help="write demand envelopes")).set_defaults(run=cmd_envelope)
    p = common(sub.add_parser("solve", help="robust rule by row generation"), solver=True)
    p.add_argument("--export-lp", metavar="PATH", help="also write the fully enumerated LP")
    p.set_defaults(run=cmd_solve)
    p = common(sub.add_parser("solve-scenario", help="rule trained on sampled scenarios"))
    p.add_argument("--n-scenarios", type=int, default=30)
    p.set_defaults(run=cmd_solve_scenario)
    p = common(sub.add_parser("simulate", help="replay and audit a rule"), sampling=True)
    p.add_argument("--rule", required=True, help="rule file written by solve or solve-scenario")
    p.add_argument("--n-traj", type=int, default=10)
    p.set_defaults(run=cmd_simulate)
    p = common(sub.add_parser("experiment", help="full six-bus style experiment"),
               solver=True, sampling=True)
    p.add_argument("--n-scenarios", type=int, default=30)
    p.add_argument("--n-traj", type=int, default=10)
    p.set_defaults(run=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    for name in ("n_traj", "n_scenarios"):
        if getattr(args, name, 0) < 0:
            print(f"error: --{name.replace('_', '-')} must be non-negative", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.run(args)
    except RuleMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except ModelInfeasible as exc:
        print(f"infeasible model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (CaseError, InfeasibleUncertaintySet, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverFailure, IterationLimit) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
