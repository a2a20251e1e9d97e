"""JSON case files, rule records and CSV output.

Case schema ``ctdispatch-case/1``::

    {
      "format": "ctdispatch-case/1",
      "horizon": 24.0,
      "system": {
        "generators": [{"name", "cost", "x_max", "x_min", "ramp_up", "ramp_down"}, ...],
        "lines": [{"name", "f_max"}, ...],
        "ptdf_gen": L x G, "ptdf_load": L x D   (load columns carry the withdrawal sign)
      },
      "demand": {
        "loads": [{"name", "upper": [N-1], "lower": [N-1], "ramp_up", "ramp_down"}, ...]
        or
        "loads": [{"name"}, ...], "profile": {"base": [N-1], "scale": [D], "margin": m}
      },
      "run": {"N", "tol", "seed", "points_per_horizon", "max_iter"}   (all optional)
    }

With a ``profile``, load ``d`` gets upper steps ``scale_d * base_j + m``,
lower steps ``scale_d * base_1 - m`` then ``min(up_{j-1}, up_{j+1},
scale_d * base_j) - m`` (``up_N := up_{N-1}``), and ramp limits
``scale_d`` times the largest / smallest hourly change of ``base``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .envelope import DemandEnvelope, RampLimits, StepBounds, build_envelope_set
from .errors import DomainError, InfeasibleUncertaintySet
from .pwa import TimeGrid
from .rule import DecisionRule
from .system import SystemModel

CASE_FORMAT = "ctdispatch-case/1"
RULE_FORMAT = "ctdispatch-rule/1"


class CaseError(DomainError):
    """A case or rule file is malformed; the message names the field."""


@dataclass(frozen=True)
class RunSettings:
    N: int | None = None
    tol: float = 1e-7
    seed: int = 0
    points_per_horizon: int = 2401
    max_iter: int | None = None


@dataclass(frozen=True, eq=False)
class Case:
    system: SystemModel
    loads: tuple  # (StepBounds, RampLimits) per load
    load_names: tuple
    run: RunSettings = field(default_factory=RunSettings)

    def envelope(self) -> DemandEnvelope:
        return build_envelope_set(list(self.loads), self.load_names)


def _get(obj: dict, key: str, where: str, default: Any = ...):
    if not isinstance(obj, dict):
        raise CaseError(f"{where}: expected an object")
    if key not in obj:
        if default is ...:
            raise CaseError(f"{where}.{key}: missing")
        return default
    return obj[key]


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CaseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _nums(value, where: str, n: int | None = None) -> list[float]:
    if not isinstance(value, list):
        raise CaseError(f"{where}: expected a list of numbers")
    out = [_num(v, f"{where}[{k}]") for k, v in enumerate(value)]
    if n is not None and len(out) != n:
        raise CaseError(f"{where}: expected {n} values, got {len(out)}")
    return out


def _matrix(value, where: str, rows: int, cols: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != rows:
        raise CaseError(f"{where}: expected {rows} rows")
    return np.array([_nums(r, f"{where}[{k}]", cols) for k, r in enumerate(value)]).reshape(rows, cols)


def _system(data: dict, D: int) -> SystemModel:
    gens = _get(data, "generators", "system")
    lines = _get(data, "lines", "system", [])
    if not isinstance(gens, list) or not gens:
        raise CaseError("system.generators: expected a non-empty list")
    if not isinstance(lines, list):
        raise CaseError("system.lines: expected a list")
    fields = ("cost", "x_max", "x_min", "ramp_up", "ramp_down")
    cols = {f: [_num(_get(g, f, f"system.generators[{k}]"), f"system.generators[{k}].{f}")
                for k, g in enumerate(gens)] for f in fields}
    names = tuple(str(_get(g, "name", "", f"gen{k + 1}")) for k, g in enumerate(gens))
    f_max = [_num(_get(l, "f_max", f"system.lines[{k}]"), f"system.lines[{k}].f_max")
             for k, l in enumerate(lines)]
    lnames = tuple(str(_get(l, "name", "", f"line{k + 1}")) for k, l in enumerate(lines))
    G, L = len(gens), len(lines)
    Fg = _matrix(_get(data, "ptdf_gen", "system", []), "system.ptdf_gen", L, G)
    Fd = _matrix(_get(data, "ptdf_load", "system", []), "system.ptdf_load", L, D)
    try:
        return SystemModel(f_max=f_max, ptdf_gen=Fg, ptdf_load=Fd, gen_names=names,
                           line_names=lnames, **cols)
    except DomainError as exc:
        raise CaseError(f"system: {exc}") from exc


def profile_steps(base: Sequence[float], scale: float, margin: float):
    """Upper/lower step values and ramp limits for one load from a system profile."""
    S = np.asarray(base, dtype=float)
    up = scale * S + margin
    ext = np.append(up, up[-1])
    lo = np.empty_like(up)
    lo[0] = scale * S[0] - margin
    for j in range(1, S.size):
        lo[j] = min(ext[j - 1], ext[j + 1], scale * S[j]) - margin
    dS = np.diff(S)
    return up, lo, scale * dS.max(), scale * dS.min()


def _demand(data: dict, horizon: float, n_expected: int | None):
    loads = _get(data, "loads", "demand")
    if not isinstance(loads, list) or not loads:
        raise CaseError("demand.loads: expected a non-empty list")
    names = tuple(str(_get(l, "name", "", f"load{k + 1}")) for k, l in enumerate(loads))
    profile = _get(data, "profile", "demand", None)
    steps = []
    if profile is not None:
        base = _nums(_get(profile, "base", "demand.profile"), "demand.profile.base")
        scale = _nums(_get(profile, "scale", "demand.profile"), "demand.profile.scale", len(loads))
        margin = _num(_get(profile, "margin", "demand.profile", 0.0), "demand.profile.margin")
        if len(base) < 2:
            raise CaseError("demand.profile.base: at least two values are required")
        for s in scale:
            up, lo, r_up, r_dn = profile_steps(base, s, margin)
            steps.append((up, lo, r_up, r_dn))
    else:
        for k, l in enumerate(loads):
            w = f"demand.loads[{k}]"
            up = _nums(_get(l, "upper", w), f"{w}.upper")
            lo = _nums(_get(l, "lower", w), f"{w}.lower", len(up))
            steps.append((up, lo, _num(_get(l, "ramp_up", w), f"{w}.ramp_up"),
                          _num(_get(l, "ramp_down", w), f"{w}.ramp_down")))
    n_int = len(steps[0][0])
    if n_expected is not None and n_int + 1 != n_expected:
        raise CaseError(f"run.N: {n_expected} disagrees with {n_int} demand intervals")
    grid = np.linspace(0.0, horizon, n_int + 1)
    out = []
    for k, (up, lo, r_up, r_dn) in enumerate(steps):
        if len(up) != n_int:
            raise CaseError(f"demand.loads[{k}]: expected {n_int} step values")
        try:
            out.append((StepBounds(grid, up, lo), RampLimits(r_up, r_dn)))
        except (DomainError, InfeasibleUncertaintySet) as exc:
            raise CaseError(f"demand.loads[{k}]: {exc}") from exc
    return tuple(out), names


def _run(data: dict) -> RunSettings:
    def opt_int(key, default):
        v = _get(data, key, "run", default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            raise CaseError(f"run.{key}: expected an integer")
        return v

    return RunSettings(
        N=opt_int("N", None),
        tol=_num(_get(data, "tol", "run", 1e-7), "run.tol"),
        seed=opt_int("seed", 0),
        points_per_horizon=opt_int("points_per_horizon", 2401),
        max_iter=opt_int("max_iter", None),
    )


def parse_case(data: dict) -> Case:
    fmt = _get(data, "format", "case")
    if fmt != CASE_FORMAT:
        raise CaseError(f"case.format: expected {CASE_FORMAT!r}, got {fmt!r}")
    horizon = _num(_get(data, "horizon", "case"), "case.horizon")
    if horizon <= 0:
        raise CaseError("case.horizon: must be positive")
    run = _run(_get(data, "run", "case", {}))
    loads, names = _demand(_get(data, "demand", "case"), horizon, run.N)
    system = _system(_get(data, "system", "case"), len(loads))
    return Case(system=system, loads=loads, load_names=names, run=run)


def load_case(path) -> Case:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CaseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_case(data)


def bundled_case_path() -> Path:
    """Location of the bundled six-bus case."""
    return Path(__file__).with_name("data") / "sixbus.case"


def format_rule(rule: DecisionRule, objective: float) -> str:
    lines = [
        RULE_FORMAT,
        f"G {rule.G}",
        f"D {rule.D}",
        f"M {len(rule.grid)}",
        f"objective {float(objective)!r}",
        "grid " + " ".join(repr(float(v)) for v in rule.grid.points),
        "alpha " + " ".join(repr(float(v)) for v in rule.alpha.ravel()),
    ]
    lines += [f"beta {j + 1} " + " ".join(repr(float(v)) for v in row)
              for j, row in enumerate(rule.beta)]
    return "\n".join(lines) + "\n"


def parse_rule(text: str) -> tuple[DecisionRule, float]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != RULE_FORMAT:
        raise CaseError(f"rule: first line must be {RULE_FORMAT!r}")
    try:
        head = {}
        for k, key in enumerate(("G", "D", "M", "objective", "grid", "alpha"), start=1):
            name, _, rest = lines[k].partition(" ")
            if name != key:
                raise CaseError(f"rule line {k + 1}: expected {key!r}")
            head[key] = rest
        G, D, M = int(head["G"]), int(head["D"]), int(head["M"])
        grid = [float(v) for v in head["grid"].split()]
        alpha = np.array([float(v) for v in head["alpha"].split()])
        beta = []
        for j in range(M):
            parts = lines[7 + j].split()
            if parts[0] != "beta" or int(parts[1]) != j + 1:
                raise CaseError(f"rule line {8 + j}: expected 'beta {j + 1}'")
            beta.append([float(v) for v in parts[2:]])
        if len(grid) != M or alpha.size != G * D:
            raise CaseError("rule: grid or alpha length disagrees with the header")
        rule = DecisionRule(alpha.reshape(G, D), np.array(beta).reshape(M, G), TimeGrid(grid))
    except (IndexError, ValueError) as exc:
        raise CaseError(f"rule: malformed record ({exc})") from exc
    return rule, float(head["objective"])


def write_csv(path, times, columns: dict) -> None:
    """CSV with a ``t`` column and one column per entry, 12 significant digits."""
    names = list(columns)
    data = np.column_stack([np.asarray(times, float)] + [np.asarray(columns[n], float) for n in names])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["t"] + names) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
