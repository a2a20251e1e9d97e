"""Independent reference computations used as test oracles.

Nothing here imports the code paths it checks.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

import numpy as np


def rational_simplex(c, A_ub, b_ub, A_eq, b_eq):
    """Exact two-phase simplex with Bland's rule on free-variable LPs.

    ``x = u - v`` with ``u, v >= 0`` and one slack per ``<=`` row. Returns
    ``(status, objective)`` with the objective as a ``Fraction``.
    """
    F = Fraction
    c = [F(v) for v in c]
    n = len(c)
    A_ub = [[F(v) for v in row] for row in A_ub]
    A_eq = [[F(v) for v in row] for row in A_eq]
    m, q = len(A_ub), len(A_eq)
    n_std = 2 * n + m
    rows, rhs = [], []
    for i, row in enumerate(A_ub):
        slack = [F(0)] * m
        slack[i] = F(1)
        rows.append(row + [-v for v in row] + slack)
        rhs.append(F(b_ub[i]))
    for i, row in enumerate(A_eq):
        rows.append(row + [-v for v in row] + [F(0)] * m)
        rhs.append(F(b_eq[i]))
    k = len(rows)
    for i in range(k):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]
    # artificials
    for i in range(k):
        rows[i] = rows[i] + [F(1) if j == i else F(0) for j in range(k)]
    total = n_std + k
    basis = list(range(n_std, total))
    cost_std = c + [-v for v in c] + [F(0)] * m

    def run(cost, allowed):
        while True:
            cb = [cost[b] for b in basis]
            red = [cost[j] - sum(cb[i] * rows[i][j] for i in range(len(rows))) for j in range(total)]
            enter = next((j for j in range(total) if allowed[j] and j not in basis and red[j] < 0), None)
            if enter is None:
                return "optimal"
            best, leave = None, None
            for i in range(len(rows)):
                if rows[i][enter] > 0:
                    ratio = rhs[i] / rows[i][enter]
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                return "unbounded"
            pivot(leave, enter)

    def pivot(r, col):
        pv = rows[r][col]
        rows[r] = [v / pv for v in rows[r]]
        rhs[r] = rhs[r] / pv
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
                rhs[i] = rhs[i] - f * rhs[r]
        basis[r] = col

    phase1 = [F(0)] * n_std + [F(1)] * k
    run(phase1, [True] * total)
    if sum(rhs[i] for i in range(len(rows)) if basis[i] >= n_std) > 0:
        return "infeasible", None
    i = 0
    while i < len(rows):
        if basis[i] >= n_std:
            j = next((j for j in range(n_std) if rows[i][j] != 0), None)
            if j is None:
                del rows[i], rhs[i], basis[i]
                continue
            pivot(i, j)
        i += 1
    cost = cost_std + [F(0)] * k
    status = run(cost, [True] * n_std + [False] * k)
    if status == "unbounded":
        return "unbounded", None
    return "optimal", sum(cost[b] * rhs[i] for i, b in enumerate(basis))


def vertices(D: int):
    """All 0/1 vectors of length ``D``."""
    return [np.array(s, dtype=float) for s in product((0, 1), repeat=D)]


def reachable_bounds(step_grid, upper_steps, lower_steps, r_up, r_down, t):
    """Pointwise largest/smallest values reachable at fine grid ``t``.

    Forward/backward dynamic programming over the fine grid using only the
    step bounds and ramp limits; ``t`` must contain the step grid points.
    A value interval at each node is propagated forward with the ramp
    limits, then backward, intersecting with the closed-interval bounds.
    """
    t = np.asarray(t, float)
    grid = np.asarray(step_grid, float)
    # closed-interval bounds: at an interior grid point both neighbours apply
    hi = np.empty(t.size)
    lo = np.empty(t.size)
    for i, ti in enumerate(t):
        ks = [k for k in range(grid.size - 1) if grid[k] - 1e-12 <= ti <= grid[k + 1] + 1e-12]
        hi[i] = min(upper_steps[k] for k in ks)
        lo[i] = max(lower_steps[k] for k in ks)
    dt = np.diff(t)
    fhi, flo = hi.copy(), lo.copy()
    for i in range(1, t.size):
        fhi[i] = min(fhi[i], fhi[i - 1] + r_up * dt[i - 1])
        flo[i] = max(flo[i], flo[i - 1] + r_down * dt[i - 1])
    for i in range(t.size - 2, -1, -1):
        fhi[i] = min(fhi[i], fhi[i + 1] - r_down * dt[i])
        flo[i] = max(flo[i], flo[i + 1] - r_up * dt[i])
    return fhi, flo, hi, lo


def sample_reachable(step_grid, upper_steps, lower_steps, r_up, r_down, t, n, rng,
                     edge_prob=0.3):
    """``n`` random piecewise-linear members sampled on the fine grid ``t``.

    Uses :func:`reachable_bounds` so every forward step stays extendable;
    with probability ``edge_prob`` a step jumps to an end of its interval so
    extreme members are well represented. Returns an ``(n, len(t))`` array.
    """
    fhi, flo, _, _ = reachable_bounds(step_grid, upper_steps, lower_steps, r_up, r_down, t)
    dt = np.diff(t)
    out = np.empty((n, t.size))
    out[:, 0] = rng.uniform(flo[0], fhi[0], n)
    for i in range(1, t.size):
        prev = out[:, i - 1]
        a = np.maximum(flo[i], prev + r_down * dt[i - 1])
        b = np.minimum(fhi[i], prev + r_up * dt[i - 1])
        b = np.maximum(a, b)
        u = rng.uniform(size=n)
        pick = rng.uniform(size=n)
        v = a + u * (b - a)
        v = np.where(pick < edge_prob / 2, a, np.where(pick < edge_prob, b, v))
        out[:, i] = v
    return out


def trapezoid(f, a, b, step, kinks=()):
    """Composite trapezoid rule of a vectorised callable on a uniform grid.

    ``kinks`` are added to the grid; for a piecewise-smooth integrand this
    keeps every cell smooth so the step alone controls the error.
    """
    n = max(1, int(round((b - a) / step)))
    t = np.union1d(np.linspace(a, b, n + 1), np.clip(np.asarray(kinks, float), a, b))
    v = f(t)
    return float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(t)))
