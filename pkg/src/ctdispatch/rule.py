"""Time-interpolated affine decision rules.

A rule maps the demand vector observed *now* and the current time to
generator outputs::

    x(t) = alpha @ xi(t) + (1 - gamma(t)) * beta[k(t)] + gamma(t) * beta[k(t) + 1]

where ``k`` and ``gamma`` locate ``t`` on the breakpoint grid. Because only
``xi(t)`` enters, the rule is non-anticipative by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .pwa import PwaFunction, TimeGrid, gamma, merge_times, segment_index


@dataclass(frozen=True, eq=False)
class DecisionRule:
    alpha: np.ndarray  # G x D, MW per MW
    beta: np.ndarray  # M x G, MW at each grid point
    grid: TimeGrid

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float)
        beta = np.array(self.beta, dtype=float)
        if alpha.ndim != 2 or beta.ndim != 2:
            raise DomainError("alpha and beta must be 2-D arrays")
        if beta.shape != (len(self.grid), alpha.shape[0]):
            raise DomainError(
                f"beta has shape {beta.shape}, expected {(len(self.grid), alpha.shape[0])}"
            )
        alpha.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def G(self) -> int:
        return int(self.alpha.shape[0])

    @property
    def D(self) -> int:
        return int(self.alpha.shape[1])

    def beta_slopes(self) -> np.ndarray:
        """Slope of the constant term on each segment (``(M-1) x G``)."""
        return np.diff(self.beta, axis=0) / self.grid.deltas[:, None]

    def intercept(self, t) -> np.ndarray:
        k = segment_index(self.grid, t)
        g = gamma(self.grid, t)
        return (1.0 - g) * self.beta[k] + g * self.beta[k + 1]

    def evaluate(self, t: float, demand_now) -> np.ndarray:
        """Generator outputs at time ``t`` given the current demand vector."""
        xi = np.asarray(demand_now, dtype=float)
        if xi.shape != (self.D,):
            raise DomainError(f"demand vector has shape {xi.shape}, expected ({self.D},)")
        return self.alpha @ xi + self.intercept(t)

    def replay(self, traj: Sequence[PwaFunction]) -> list[PwaFunction]:
        """Output trajectories for a demand trajectory (one PWA per load).

        The result is PWA on the union of the trajectory breakpoints and the
        rule grid, and agrees with :meth:`evaluate` at every time.
        """
        if len(traj) != self.D:
            raise DomainError(f"trajectory has {len(traj)} loads, rule expects {self.D}")
        grid = merge_times([f.breakpoints for f in traj] + [self.grid.points])
        if grid.horizon != self.grid.horizon:
            raise DomainError("trajectory horizon differs from the rule grid")
        t = grid.points
        xi = np.column_stack([np.interp(t, f.breakpoints, f.values) for f in traj])
        base = np.column_stack(
            [np.interp(t, self.grid.points, self.beta[:, g]) for g in range(self.G)]
        )
        out = xi @ self.alpha.T + base
        return [PwaFunction(t, out[:, g]) for g in range(self.G)]
