"""Continuous piecewise-affine functions of time and breakpoint grids.

Time is a plain float in hours on ``[0, T]``. A :class:`PwaFunction` is
stored as its breakpoints and the function values there; everything else
(interpolation, exact integrals, slopes) is derived from those two arrays.

Segment indices are 0-based: segment ``k`` is ``[points[k], points[k + 1])``,
except that ``t == T`` belongs to the last segment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

# relative tolerance (times T) below which two breakpoints are the same point
DEDUP_RTOL = 1e-9


def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing time points ``0 = points[0] < ... < points[-1] = T``."""

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points, "grid points")
        if pts.size < 2:
            raise DomainError("a time grid needs at least two points")
        if pts[0] != 0.0:
            raise DomainError(f"grid must start at 0, got {pts[0]!r}")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def horizon(self) -> float:
        return float(self.points[-1])

    @property
    def deltas(self) -> np.ndarray:
        return np.diff(self.points)

    def __len__(self) -> int:
        return int(self.points.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points, other.points)
        )

    def __hash__(self):
        return hash(self.points.tobytes())

    def same_as(self, other: "TimeGrid", tol: float | None = None) -> bool:
        if len(self) != len(other):
            return False
        if tol is None:
            tol = DEDUP_RTOL * max(self.horizon, 1.0)
        return bool(np.all(np.abs(self.points - other.points) <= tol))


@dataclass(frozen=True, eq=False)
class PwaFunction:
    """A continuous piecewise-affine scalar function on ``[0, T]``."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bps = _frozen(self.breakpoints, "breakpoints")
        vals = _frozen(self.values, "values")
        if bps.size != vals.size:
            raise DomainError(
                f"{bps.size} breakpoints but {vals.size} values"
            )
        if bps.size < 2:
            raise DomainError("a PWA function needs at least two breakpoints")
        if bps[0] != 0.0:
            raise DomainError(f"breakpoints must start at 0, got {bps[0]!r}")
        if np.any(np.diff(bps) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_points(cls, times: Sequence[float], values: Sequence[float],
                    tol: float | None = None) -> "PwaFunction":
        """Build from possibly repeated, non-decreasing breakpoints.

        Points closer than ``tol`` are merged; their values must agree within
        ``tol * (1 + |value|)`` or the data describes a jump.
        """
        t = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.size != v.size or t.size == 0:
            raise DomainError("times and values must be non-empty and equal length")
        if np.any(np.diff(t) < 0):
            raise DomainError("breakpoints must be non-decreasing")
        if tol is None:
            tol = DEDUP_RTOL * max(float(t[-1]), 1.0)
        keep_t, keep_v = [t[0]], [v[0]]
        for ti, vi in zip(t[1:], v[1:]):
            if ti - keep_t[-1] <= tol:
                if abs(vi - keep_v[-1]) > tol * (1.0 + abs(vi)):
                    raise DomainError(
                        f"discontinuity at t={ti!r}: {keep_v[-1]!r} vs {vi!r}"
                    )
                continue
            keep_t.append(ti)
            keep_v.append(vi)
        # the last input point is the horizon; snap a merged survivor onto it
        keep_t[-1] = t[-1]
        return cls(np.array(keep_t), np.array(keep_v))

    @classmethod
    def constant(cls, value: float, horizon: float) -> "PwaFunction":
        return cls(np.array([0.0, horizon]), np.array([value, value]))

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.breakpoints)

    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    def __call__(self, t):
        return evaluate(self, t)

    def __repr__(self) -> str:
        pts = ", ".join(f"({a:g}, {b:g})" for a, b in zip(self.breakpoints, self.values))
        return f"PwaFunction([{pts}])"


def _check_domain(t, horizon: float) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > horizon) or np.any(np.isnan(arr)):
        raise DomainError(f"time outside [0, {horizon:g}]")
    return arr


def evaluate(f: PwaFunction, t):
    """Value of ``f`` at ``t`` (scalar or array); exact at stored breakpoints."""
    arr = _check_domain(t, f.horizon)
    out = np.interp(arr, f.breakpoints, f.values)
    return float(out) if out.ndim == 0 else out


def segment_index(grid: TimeGrid, t):
    """0-based segment containing ``t``; ``t == T`` maps to the last segment."""
    arr = _check_domain(t, grid.horizon)
    k = np.searchsorted(grid.points, arr, side="right") - 1
    k = np.minimum(k, len(grid) - 2)
    return int(k) if np.ndim(k) == 0 else k


def gamma(grid: TimeGrid, t):
    """Relative position of ``t`` inside its segment, in ``[0, 1]``."""
    arr = _check_domain(t, grid.horizon)
    k = np.minimum(np.searchsorted(grid.points, arr, side="right") - 1, len(grid) - 2)
    g = (arr - grid.points[k]) / grid.deltas[k]
    g = np.where(arr == grid.horizon, 1.0, g)
    return float(g) if g.ndim == 0 else g


def integrate(f: PwaFunction, a: float = 0.0, b: float | None = None) -> float:
    """Exact integral of ``f`` over ``[a, b]`` (trapezoids are exact here)."""
    if b is None:
        b = f.horizon
    if not (0.0 <= a <= b <= f.horizon):
        raise DomainError(f"integration interval [{a!r}, {b!r}] not inside [0, {f.horizon:g}]")
    if a == b:
        return 0.0
    inner = f.breakpoints[(f.breakpoints > a) & (f.breakpoints < b)]
    t = np.concatenate(([a], inner, [b]))
    v = np.interp(t, f.breakpoints, f.values)
    return float(0.5 * np.sum(np.diff(t) * (v[1:] + v[:-1])))


def merge_times(arrays: Iterable[np.ndarray], tol: float | None = None) -> TimeGrid:
    """Sorted union of time arrays, collapsing points closer than ``tol``."""
    arrays = [np.asarray(a, dtype=float).ravel() for a in arrays]
    if not arrays:
        raise DomainError("nothing to merge")
    pts = np.sort(np.concatenate(arrays))
    horizon = float(pts[-1])
    if pts[0] != 0.0:
        raise DomainError("merged breakpoints must start at 0")
    if tol is None:
        tol = DEDUP_RTOL * max(horizon, 1.0)
    kept = [0.0]
    for p in pts[1:]:
        if p - kept[-1] > tol:
            kept.append(float(p))
    if horizon - kept[-1] <= tol:
        kept[-1] = horizon
    if len(kept) < 2:
        raise DomainError("merged grid collapses to a single point")
    return TimeGrid(np.array(kept))


def merge_breakpoints(fs: Sequence[PwaFunction], tol: float | None = None) -> TimeGrid:
    """Union of the breakpoints of ``fs`` (which must share a horizon)."""
    if len(fs) == 0:
        raise DomainError("merge_breakpoints needs at least one function")
    horizons = {f.horizon for f in fs}
    if len(horizons) != 1:
        raise DomainError(f"functions have different horizons: {sorted(horizons)}")
    return merge_times([f.breakpoints for f in fs], tol)


def resample(f: PwaFunction, grid: TimeGrid, tol: float | None = None) -> PwaFunction:
    """Rewrite ``f`` on a refinement ``grid`` of its own breakpoints."""
    if tol is None:
        tol = DEDUP_RTOL * max(f.horizon, 1.0)
    if abs(grid.horizon - f.horizon) > tol:
        raise DomainError(f"grid horizon {grid.horizon!r} != function horizon {f.horizon!r}")
    pos = np.searchsorted(grid.points, f.breakpoints)
    lo = np.abs(grid.points[np.clip(pos - 1, 0, len(grid) - 1)] - f.breakpoints)
    hi = np.abs(grid.points[np.clip(pos, 0, len(grid) - 1)] - f.breakpoints)
    missing = np.minimum(lo, hi) > tol
    if np.any(missing):
        raise DomainError(
            f"grid is missing breakpoint(s) {f.breakpoints[missing].tolist()}"
        )
    t = np.minimum(grid.points, f.horizon)
    values = np.interp(t, f.breakpoints, f.values)
    return PwaFunction(grid.points, values)
