"""Demand uncertainty sets: step bounds plus ramp limits, and their envelopes.

Each load ``d`` is described by piecewise-constant upper/lower bounds on
``N - 1`` equal intervals and by the extreme average rates ``ramp.down <=
ramp.up``. The set of continuous trajectories respecting both is summarised
exactly by two continuous PWA functions, the pointwise largest (``upper``)
and smallest (``lower``) members. :func:`build_envelope_set` merges all
envelope breakpoints into one grid and precomputes the per-breakpoint and
per-segment quantities the LP builder needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, InfeasibleUncertaintySet
from .pwa import DEDUP_RTOL, PwaFunction, TimeGrid, merge_times, resample

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class StepBounds:
    """Interval-wise demand bounds on the equally spaced grid ``T_1..T_N``.

    ``upper[j]`` and ``lower[j]`` bound the demand on ``[grid[j], grid[j+1]]``
    (closed, so both neighbouring bounds apply at an interior grid point).
    """

    grid: np.ndarray
    upper: np.ndarray
    lower: np.ndarray

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float).ravel()
        upper = np.array(self.upper, dtype=float).ravel()
        lower = np.array(self.lower, dtype=float).ravel()
        if grid.size < 2:
            raise DomainError("step bounds need N >= 2 grid points")
        if upper.size != grid.size - 1 or lower.size != grid.size - 1:
            raise DomainError(
                f"expected {grid.size - 1} step values, got upper={upper.size} lower={lower.size}"
            )
        if grid[0] != 0.0:
            raise DomainError("step grid must start at 0")
        steps = np.diff(grid)
        if np.any(steps <= 0):
            raise DomainError("step grid must be strictly increasing")
        if np.max(np.abs(steps - steps.mean())) > DEDUP_RTOL * max(grid[-1], 1.0):
            raise DomainError("step grid must be equally spaced")
        bad = np.flatnonzero(lower > upper)
        if bad.size:
            raise InfeasibleUncertaintySet(
                f"lower step bound exceeds upper on interval(s) {bad.tolist()}"
            )
        for name, arr in (("grid", grid), ("upper", upper), ("lower", lower)):
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"step bounds {name} contains non-finite values")
            arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "lower", lower)

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def interval_index(self, t) -> np.ndarray:
        """0-based interval of ``t``; ``t == T`` belongs to the last interval."""
        k = np.searchsorted(self.grid, t, side="right") - 1
        return np.clip(k, 0, self.grid.size - 2)

    def upper_step(self, t):
        return self.upper[self.interval_index(t)]

    def lower_step(self, t):
        return self.lower[self.interval_index(t)]


@dataclass(frozen=True)
class RampLimits:
    """Extreme average rates of change of a load's demand (MW/h)."""

    up: float
    down: float

    def __post_init__(self):
        if not (np.isfinite(self.up) and np.isfinite(self.down)):
            raise DomainError("ramp limits must be finite")
        if self.down > self.up:
            raise DomainError(f"ramp down limit {self.down} exceeds ramp up limit {self.up}")


def _jump_offset(jump: float, rate: float, what: str, where: float) -> float:
    # 0/0 = 0 convention; a non-zero jump needs a rate of the same sign
    if jump == 0.0:
        return 0.0
    if rate == 0.0 or np.sign(rate) != np.sign(jump):
        raise InfeasibleUncertaintySet(
            f"{what}: step change {jump:g} at t={where:g} cannot be realised with ramp rate {rate:g}"
        )
    return jump / rate


def _build(b: StepBounds, r: RampLimits, upper: bool) -> PwaFunction:
    T = b.grid
    steps = b.upper if upper else b.lower
    ext = np.append(steps, steps[-1])
    what = "upper envelope" if upper else "lower envelope"
    # (order key, time, value): grid point i has key 3i; a transition at T_i
    # placed before it has key 3i - 1, one placed after it 3i + 1
    points = [(0, T[0], steps[0])]
    for i in range(1, T.size):
        if upper:
            points.append((3 * i, T[i], min(ext[i - 1], ext[i])))
        else:
            points.append((3 * i, T[i], max(ext[i - 1], ext[i])))
        if i > T.size - 2:
            continue
        jump = steps[i] - steps[i - 1]
        if upper:
            # rise after T_i at the upward rate, fall before T_i at the downward rate
            if jump >= 0:
                tb, key = T[i] + _jump_offset(jump, r.up, what, T[i]), 3 * i + 1
            else:
                tb, key = T[i] - _jump_offset(jump, r.down, what, T[i]), 3 * i - 1
            value = max(steps[i - 1], steps[i])
        else:
            if jump >= 0:
                tb, key = T[i] - _jump_offset(jump, r.up, what, T[i]), 3 * i - 1
            else:
                tb, key = T[i] + _jump_offset(jump, r.down, what, T[i]), 3 * i + 1
            value = min(steps[i - 1], steps[i])
        points.append((key, tb, value))
    points.sort(key=lambda p: p[0])
    times = np.array([p[1] for p in points])
    vals = np.array([p[2] for p in points])
    tol = DEDUP_RTOL * max(b.horizon, 1.0)
    order_bad = np.flatnonzero(np.diff(times) < -tol)
    if order_bad.size:
        t0 = times[order_bad[0]]
        raise InfeasibleUncertaintySet(
            f"{what}: consecutive step changes near t={t0:g} overlap; the ramp "
            "limits are too tight for the step bounds"
        )
    times = np.maximum.accumulate(np.clip(times, 0.0, b.horizon))
    try:
        f = PwaFunction.from_points(times, vals, tol)
    except DomainError as exc:
        raise InfeasibleUncertaintySet(f"{what}: {exc}") from exc
    problems = _membership_problems(f, b, r, 1e-9)
    if problems:
        raise InfeasibleUncertaintySet(f"{what} is not a member of the set: {problems[0]}")
    return f


def _membership_problems(f: PwaFunction, b: StepBounds, r: RampLimits, tol: float):
    """Violations of step bounds and ramp limits by ``f`` (exact for PWA ``f``)."""
    msgs = []
    scale = 1.0 + float(np.max(np.abs(f.values)))
    vtol = tol * scale
    # on each closed interval, breakpoints of f inside it plus the interval ends
    for k in range(b.grid.size - 1):
        a, c = b.grid[k], b.grid[k + 1]
        inside = f.breakpoints[(f.breakpoints > a) & (f.breakpoints < c)]
        t = np.concatenate(([a], inside, [c]))
        v = np.interp(t, f.breakpoints, f.values)
        if np.any(v > b.upper[k] + vtol):
            j = int(np.argmax(v))
            msgs.append(f"exceeds upper step {b.upper[k]:g} at t={t[j]:g} (value {v[j]:g})")
        if np.any(v < b.lower[k] - vtol):
            j = int(np.argmin(v))
            msgs.append(f"below lower step {b.lower[k]:g} at t={t[j]:g} (value {v[j]:g})")
    slopes = f.slopes()
    stol = _slope_tol(f, r, tol)
    if np.any(slopes > r.up + stol):
        j = int(np.argmax(slopes - stol))
        msgs.append(f"slope {slopes[j]:g} above ramp-up {r.up:g} after t={f.breakpoints[j]:g}")
    if np.any(slopes < r.down - stol):
        j = int(np.argmin(slopes + stol))
        msgs.append(f"slope {slopes[j]:g} below ramp-down {r.down:g} after t={f.breakpoints[j]:g}")
    return msgs


def _slope_tol(f: PwaFunction, r: RampLimits, tol: float) -> np.ndarray:
    # tol relative to the ramp scale, plus rounding of (v2 - v1) / dt
    vmax = float(np.max(np.abs(f.values)))
    return tol * max(1.0, abs(r.up), abs(r.down)) + 8 * _EPS * vmax / np.diff(f.breakpoints)


def build_upper_envelope(b: StepBounds, r: RampLimits) -> PwaFunction:
    """Pointwise largest continuous trajectory within ``b`` and ``r``."""
    return _build(b, r, upper=True)


def build_lower_envelope(b: StepBounds, r: RampLimits) -> PwaFunction:
    """Pointwise smallest continuous trajectory within ``b`` and ``r``."""
    return _build(b, r, upper=False)


@dataclass(frozen=True, eq=False)
class DemandEnvelope:
    """Envelopes of every load resampled onto the merged breakpoint grid.

    Array attributes are indexed ``[j, d]`` with ``j`` a breakpoint (``M``
    rows) or segment (``M - 1`` rows) and ``d`` a load.
    """

    step_bounds: tuple
    ramps: tuple
    upper_raw: tuple
    lower_raw: tuple
    grid: TimeGrid
    upper: np.ndarray
    lower: np.ndarray
    names: tuple = field(default=())

    def __post_init__(self):
        for name in ("upper", "lower"):
            getattr(self, name).setflags(write=False)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"load{d + 1}" for d in range(self.D)))
        width = np.maximum(self.upper - self.lower, 0.0)
        width.setflags(write=False)
        object.__setattr__(self, "_width", width)
        object.__setattr__(self, "_ramp_box", self._segment_ramps())

    @property
    def D(self) -> int:
        return int(self.upper.shape[1])

    @property
    def M(self) -> int:
        return len(self.grid)

    @property
    def horizon(self) -> float:
        return self.grid.horizon

    @property
    def width(self) -> np.ndarray:
        """``upper - lower`` at each breakpoint, clipped at zero (``M x D``)."""
        return self._width

    @property
    def upper_sums(self) -> np.ndarray:
        """``upper(T_j) + upper(T_{j+1})`` per segment (``(M-1) x D``)."""
        return self.upper[1:] + self.upper[:-1]

    @property
    def lower_sums(self) -> np.ndarray:
        return self.lower[1:] + self.lower[:-1]

    @property
    def ramp_hi(self) -> np.ndarray:
        """Largest demand slope possible on each segment (``(M-1) x D``)."""
        return self._ramp_box[0]

    @property
    def ramp_lo(self) -> np.ndarray:
        return self._ramp_box[1]

    def _segment_ramps(self):
        hi = np.empty((self.M - 1, self.D))
        lo = np.empty((self.M - 1, self.D))
        scale = 1.0 + np.max(np.abs(self.upper), axis=0)
        pinned = np.abs(self.upper - self.lower) <= DEDUP_RTOL * scale
        slope = np.diff(self.upper, axis=0) / self.grid.deltas[:, None]
        for d in range(self.D):
            both = pinned[:-1, d] & pinned[1:, d]
            # a single trajectory on the segment: both bounds are its slope
            hi[:, d] = np.where(both, slope[:, d], self.ramps[d].up)
            lo[:, d] = np.where(both, slope[:, d], self.ramps[d].down)
        hi.setflags(write=False)
        lo.setflags(write=False)
        return hi, lo

    def upper_function(self, d: int) -> PwaFunction:
        return PwaFunction(self.grid.points, self.upper[:, d])

    def lower_function(self, d: int) -> PwaFunction:
        return PwaFunction(self.grid.points, self.lower[:, d])

    def upper_at(self, t) -> np.ndarray:
        return np.array([np.interp(t, self.grid.points, self.upper[:, d]) for d in range(self.D)])

    def lower_at(self, t) -> np.ndarray:
        return np.array([np.interp(t, self.grid.points, self.lower[:, d]) for d in range(self.D)])

    @property
    def breakpoint_bound(self) -> int:
        """Largest possible grid size ``2 D (N - 2) + N``."""
        n = self.step_bounds[0].grid.size
        return 2 * self.D * (n - 2) + n


def build_envelope_set(loads: Sequence[tuple], names: Sequence[str] | None = None,
                       tol: float | None = None) -> DemandEnvelope:
    """Build envelopes for every ``(StepBounds, RampLimits)`` pair and merge grids."""
    if len(loads) == 0:
        raise DomainError("at least one load is required")
    bounds = tuple(b for b, _ in loads)
    ramps = tuple(r for _, r in loads)
    n0, h0 = bounds[0].grid.size, bounds[0].horizon
    for d, b in enumerate(bounds):
        if b.grid.size != n0 or b.horizon != h0:
            raise DomainError(f"load {d} does not share N={n0} and T={h0:g}")
    uppers, lowers = [], []
    for d, (b, r) in enumerate(loads):
        try:
            uppers.append(build_upper_envelope(b, r))
            lowers.append(build_lower_envelope(b, r))
        except InfeasibleUncertaintySet as exc:
            raise InfeasibleUncertaintySet(f"load {d}: {exc}") from exc
    grid = merge_times([f.breakpoints for f in uppers + lowers], tol)
    up = np.column_stack([resample(f, grid, tol).values for f in uppers])
    lo = np.column_stack([resample(f, grid, tol).values for f in lowers])
    scale = 1.0 + np.max(np.abs(up))
    bad = np.argwhere(up < lo - 1e-9 * scale)
    if bad.size:
        j, d = bad[0]
        raise InfeasibleUncertaintySet(
            f"load {d}: upper envelope below lower envelope at t={grid.points[j]:g}"
        )
    return DemandEnvelope(
        step_bounds=bounds,
        ramps=ramps,
        upper_raw=tuple(uppers),
        lower_raw=tuple(lowers),
        grid=grid,
        upper=up,
        lower=lo,
        names=tuple(names) if names else (),
    )


@dataclass
class Violation:
    load: int
    kind: str  # "upper", "lower", "ramp-up" or "ramp-down"
    time: float
    amount: float


@dataclass
class MembershipReport:
    ok: bool
    violations: list

    def __bool__(self) -> bool:
        return self.ok


def validate_membership(env: DemandEnvelope, traj: Sequence[PwaFunction],
                        tol: float = 1e-9) -> MembershipReport:
    """Check that ``traj`` (one PWA function per load) lies in the uncertainty set.

    Bounds are checked against the envelopes at the union of the trajectory's
    and the envelope's breakpoints; slopes against the load ramp limits. Both
    checks are exact for PWA data. Value tolerance is ``tol`` relative to the
    demand scale, slope tolerance ``tol`` relative to the ramp scale plus a
    rounding allowance for short segments.
    """
    if len(traj) != env.D:
        raise DomainError(f"trajectory has {len(traj)} loads, envelope has {env.D}")
    violations = []
    for d, xi in enumerate(traj):
        if abs(xi.horizon - env.horizon) > DEDUP_RTOL * max(env.horizon, 1.0):
            raise DomainError(f"load {d}: trajectory horizon {xi.horizon:g} != {env.horizon:g}")
        grid = merge_times([xi.breakpoints, env.grid.points])
        t = np.minimum(grid.points, xi.horizon)
        v = np.interp(t, xi.breakpoints, xi.values)
        hi = np.interp(grid.points, env.grid.points, env.upper[:, d])
        lo = np.interp(grid.points, env.grid.points, env.lower[:, d])
        vtol = tol * (1.0 + float(np.max(np.abs(hi))))
        for idx in np.flatnonzero(v > hi + vtol):
            violations.append(Violation(d, "upper", float(grid.points[idx]), float(v[idx] - hi[idx])))
        for idx in np.flatnonzero(v < lo - vtol):
            violations.append(Violation(d, "lower", float(grid.points[idx]), float(lo[idx] - v[idx])))
        r = env.ramps[d]
        slopes = xi.slopes()
        stol = _slope_tol(xi, r, tol)
        for idx in np.flatnonzero(slopes > r.up + stol):
            violations.append(Violation(d, "ramp-up", float(xi.breakpoints[idx]), float(slopes[idx] - r.up)))
        for idx in np.flatnonzero(slopes < r.down - stol):
            violations.append(Violation(d, "ramp-down", float(xi.breakpoints[idx]), float(r.down - slopes[idx])))
    return MembershipReport(ok=not violations, violations=violations)
