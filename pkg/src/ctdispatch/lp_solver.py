"""Two-phase revised simplex for LPs with free variables.

Problems are ``min c @ x`` subject to ``A_ub @ x <= b_ub`` and
``A_eq @ x == b_eq`` with every variable sign-unrestricted. The robust
scheduling LPs have far more rows than columns, so instead of splitting free
variables and adding one slack per row, the solver runs the primal simplex on
the standard-form *dual*::

    min  b_ub @ y + b_eq @ (z+ - z-)
    s.t. A_ub.T @ y + A_eq.T @ (z+ - z-) = -c,   y, z+, z- >= 0

which has one equality row per primal variable. The primal solution is read
off as the simplex multipliers of the optimal dual basis. Dual unboundedness
certifies primal infeasibility; dual infeasibility means the primal is either
infeasible or unbounded, which a second feasibility-only solve decides.

Pricing is Dantzig's rule (over a rotating window of columns) until the
objective stalls for ``stall_limit`` pivots, then Bland's rule until it
strictly improves again, so the method terminates on degenerate problems.
The basis inverse is recomputed every ``refactor_every`` pivots and before
optimality is declared. Every verdict is checked against the original data
before it is returned; see :func:`solve`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, SolverFailure

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
HARRIS_DELTA = 1e-10
PERTURBATION = 1e-7
PIVOT_TOLERANCES = (1e-7, 1e-5, 1e-3)
CERT_TOL = 1e-7


def _matrix(data, n: int, name: str) -> np.ndarray:
    arr = np.array(data, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, n)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise DomainError(f"{name} has shape {arr.shape}, expected (rows, {n})")
    return arr


@dataclass(frozen=True, eq=False)
class LpProblem:
    """``min c @ x  s.t.  A_ub @ x <= b_ub,  A_eq @ x == b_eq``, ``x`` free."""

    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    columns: tuple = field(default=())

    def __post_init__(self):
        c = np.array(self.c, dtype=float).ravel()
        n = c.size
        A_ub = _matrix(self.A_ub, n, "A_ub")
        A_eq = _matrix(self.A_eq, n, "A_eq")
        b_ub = np.array(self.b_ub, dtype=float).ravel()
        b_eq = np.array(self.b_eq, dtype=float).ravel()
        if b_ub.size != A_ub.shape[0] or b_eq.size != A_eq.shape[0]:
            raise DomainError("row counts of matrices and right-hand sides differ")
        for arr in (c, A_ub, b_ub, A_eq, b_eq):
            if not np.all(np.isfinite(arr)):
                raise DomainError("LP data must be finite")
            arr.setflags(write=False)
        cols = tuple(self.columns) or tuple(f"x{k}" for k in range(n))
        if len(cols) != n:
            raise DomainError(f"{len(cols)} column names for {n} columns")
        for name, arr in (("c", c), ("A_ub", A_ub), ("b_ub", b_ub), ("A_eq", A_eq), ("b_eq", b_eq)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "columns", cols)

    @property
    def n(self) -> int:
        return int(self.c.size)

    def with_inequalities(self, rows, rhs) -> "LpProblem":
        rows = np.asarray(rows, dtype=float).reshape(-1, self.n)
        return LpProblem(self.c, np.vstack([self.A_ub, rows]),
                         np.concatenate([self.b_ub, np.ravel(rhs)]),
                         self.A_eq, self.b_eq, self.columns)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    duals_ub: np.ndarray | None = None
    duals_eq: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


Solver = Callable[[LpProblem], LpSolution]


class _Simplex:
    """Revised simplex for ``min cost @ w  s.t.  full @ w = rhs,  w >= 0``.

    The last ``n_rows`` columns of ``full`` are an identity block
    (artificials), so the all-artificial basis is a valid start when
    ``rhs >= 0``. The basis inverse is kept explicitly and updated per pivot;
    reduced costs are priced over a moving window of columns (partial
    pricing), and optimality is only declared after a full scan.
    """

    def __init__(self, full, rhs, piv_tol, opt_tol, stall_limit, refactor_every, max_pivots):
        self.FT = np.ascontiguousarray(full.T)
        self.r = rhs
        self.n_cols, self.n_rows = self.FT.shape
        self.n_real = self.n_cols - self.n_rows
        self.piv_tol = piv_tol
        self.opt_tol = opt_tol
        self.stall_limit = stall_limit
        self.refactor_every = refactor_every
        self.max_pivots = max_pivots
        self.basis = np.arange(self.n_real, self.n_cols)
        self.Binv = np.eye(self.n_rows)
        self.rhs = rhs.copy()
        self.pivots = 0
        self.since_refactor = 0
        self.cost = np.zeros(self.n_cols)
        self.allowed = np.ones(self.n_cols, dtype=bool)
        self.window = max(2000, -(-self.n_cols // 8))
        self.start = 0

    def set_cost(self, cost, allowed):
        self.cost = cost
        self.allowed = allowed

    def objective(self) -> float:
        return float(self.cost[self.basis] @ self.rhs)

    def _duals(self) -> np.ndarray:
        return self.cost[self.basis] @ self.Binv

    def _eligible(self, cols) -> np.ndarray:
        ok = self.allowed[cols].copy()
        ok[np.isin(cols, self.basis)] = False
        return ok

    def reduced_costs(self, cols) -> np.ndarray:
        return self.cost[cols] - self.FT[cols] @ self._duals()

    def refactor(self):
        try:
            self.Binv = np.linalg.inv(self.FT[self.basis].T)
        except np.linalg.LinAlgError as exc:
            raise SolverFailure("singular basis during refactorisation") from exc
        self.rhs = self.Binv @ self.r
        self.rhs[np.abs(self.rhs) < 1e-14] = 0.0
        self.since_refactor = 0

    def column(self, j: int) -> np.ndarray:
        return self.Binv @ self.FT[j]

    def pivot(self, row: int, j: int, a: np.ndarray):
        piv = a[row]
        e = a.copy()
        e[row] = 0.0
        brow = self.Binv[row] / piv
        self.Binv -= np.outer(e, brow)
        self.Binv[row] = brow
        xr = self.rhs[row] / piv
        self.rhs -= e * xr
        self.rhs[row] = xr
        self.basis[row] = j
        self.pivots += 1
        self.since_refactor += 1
        if self.pivots > self.max_pivots:
            raise SolverFailure(f"simplex exceeded {self.max_pivots} pivots")

    def ratio_test(self, a: np.ndarray, bland: bool) -> int:
        # entries tiny relative to the column are round-off, not pivots
        tol = self.piv_tol * max(1.0, float(np.max(np.abs(a))))
        rows = np.flatnonzero(a > tol)
        if rows.size == 0:
            return -1
        rhs = np.maximum(self.rhs[rows], 0.0)
        if bland:
            ratios = rhs / a[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + best)]
            return int(ties[np.argmin(self.basis[ties])])
        # Harris' two-pass test: bound the step with a small relaxation, then
        # take the largest pivot element among rows within that bound
        cap = np.min((rhs + HARRIS_DELTA) / a[rows])
        ok = rows[rhs / a[rows] <= cap]
        return int(ok[np.argmax(a[ok])])

    def _price(self, bland: bool) -> int:
        """Entering column, or -1 when no reduced cost is negative."""
        if bland:
            cols = np.arange(self.n_cols)
            d = self.reduced_costs(cols)
            cand = np.flatnonzero(self._eligible(cols) & (d < -self.opt_tol))
            return int(cand[0]) if cand.size else -1
        y = self._duals()
        for _ in range(-(-self.n_cols // self.window)):
            cols = np.arange(self.start, min(self.start + self.window, self.n_cols))
            d = self.cost[cols] - self.FT[cols] @ y
            d[~self._eligible(cols)] = 0.0
            k = int(np.argmin(d))
            if d[k] < -self.opt_tol:
                return int(cols[k])
            self.start = 0 if cols[-1] + 1 >= self.n_cols else int(cols[-1] + 1)
        return -1

    def run(self) -> str:
        """Iterate to optimality; returns OPTIMAL or UNBOUNDED."""
        best = self.objective()
        stall = 0
        bland = False
        while True:
            if self.since_refactor >= self.refactor_every:
                self.refactor()
            j = self._price(bland)
            if j < 0:
                if self.since_refactor:
                    # confirm on freshly computed data
                    self.refactor()
                    continue
                return OPTIMAL
            a = self.column(j)
            row = self.ratio_test(a, bland)
            if row < 0:
                if self.since_refactor:
                    self.refactor()
                    continue
                self.ray = np.zeros(self.n_cols)
                self.ray[self.basis] = np.maximum(-a, 0.0)
                self.ray[j] = 1.0
                return UNBOUNDED
            self.pivot(row, j, a)
            obj = self.objective()
            if obj < best - 1e-12 * (1.0 + abs(best)):
                best, stall, bland = obj, 0, False
            else:
                stall += 1
                if stall >= self.stall_limit:
                    bland = True

    def perturb(self, eps: float):
        """Shift every structural basic value up by a small random amount.

        The right-hand side becomes ``r + B @ delta`` so that refactoring
        reproduces the shifted values; degenerate ties disappear.
        """
        rng = np.random.default_rng(12345)
        delta = np.where(self.basis < self.n_real,
                         eps * (1.0 + np.abs(self.rhs)) * rng.uniform(0.5, 1.0, self.n_rows), 0.0)
        self.r = self.r + self.FT[self.basis].T @ delta
        self.rhs = self.rhs + delta

    def restore(self, rhs):
        self.r = rhs
        self.refactor()

    def dual_cleanup(self, feas_tol: float) -> bool:
        """Dual simplex pivots until the basic values are non-negative.

        Reduced costs stay non-negative throughout. Returns False when some
        row proves the equality system infeasible.
        """
        cols = np.arange(self.n_cols)
        while self.n_rows:
            i = int(np.argmin(self.rhs))
            if self.rhs[i] >= -feas_tol * (1.0 + np.max(np.abs(self.rhs))):
                self.rhs = np.maximum(self.rhs, 0.0)
                return True
            row = self.FT @ self.Binv[i]
            tol = self.piv_tol * max(1.0, float(np.max(np.abs(row))))
            cand = np.flatnonzero(self._eligible(cols) & (row < -tol))
            if cand.size == 0:
                return False
            d = self.reduced_costs(cand)
            j = int(cand[np.argmin(np.maximum(d, 0.0) / -row[cand])])
            self.pivot(i, j, self.column(j))
            if self.since_refactor >= self.refactor_every:
                self.refactor()
        return True

    def drive_out_artificials(self):
        for row in np.flatnonzero(self.basis >= self.n_real):
            entries = np.abs(self.FT[: self.n_real] @ self.Binv[row])
            entries[np.isin(np.arange(self.n_real), self.basis)] = 0.0
            j = int(np.argmax(entries)) if entries.size else -1
            if j >= 0 and entries[j] > 1e-7:
                self.pivot(row, j, self.column(j))
            else:
                # redundant row: the artificial stays basic at level zero
                self.rhs[row] = 0.0
        self.rhs[np.abs(self.rhs) < 1e-14] = 0.0


def _standard_form_solve(N, f, r, opts):
    """Two-phase simplex on ``min f @ w, N @ w = r, w >= 0``.

    Returns ``(status, w, pi, pivots, certificate)``. ``pi`` are the
    equality-row multipliers when OPTIMAL. The certificate is a ray ``u >= 0``
    with ``N @ u = 0, f @ u < 0`` when UNBOUNDED, and a vector ``z`` with
    ``N.T @ z <= 0, r @ z > 0`` when INFEASIBLE.
    """
    n_rows, n_real = N.shape
    flip = np.where(r < 0, -1.0, 1.0)
    full = np.hstack([N * flip[:, None], np.eye(n_rows)])
    rhs = r * flip
    tab = _Simplex(full, rhs, opts["piv_tol"], opts["opt_tol"], opts["stall_limit"],
                   opts["refactor_every"], opts["max_pivots"])
    phase1 = np.concatenate([np.zeros(n_real), np.ones(n_rows)])
    tab.set_cost(phase1, np.ones(n_real + n_rows, dtype=bool))
    tab.run()
    tab.refactor()
    infeas = tab.objective()
    if infeas > opts["p1_tol"] * (1.0 + float(np.sum(np.abs(rhs)))):
        return INFEASIBLE, None, None, tab.pivots, tab._duals() * flip
    tab.drive_out_artificials()
    cost = np.concatenate([f, np.zeros(n_rows)])
    allowed = np.concatenate([np.ones(n_real, dtype=bool), np.zeros(n_rows, dtype=bool)])
    tab.set_cost(cost, allowed)
    tab.refactor()
    tab.perturb(PERTURBATION)
    status = tab.run()
    if status == OPTIMAL:
        for _ in range(10):
            tab.restore(rhs)
            if not tab.dual_cleanup(1e-12):
                raise SolverFailure("basis lost feasibility after removing the perturbation")
            status = tab.run()
            if status == UNBOUNDED or np.all(tab.rhs >= 0.0):
                break
    if status == UNBOUNDED:
        return UNBOUNDED, None, None, tab.pivots, tab.ray[:n_real]
    Bm = full[:, tab.basis]
    w = np.zeros(n_real + n_rows)
    w[tab.basis] = np.linalg.solve(Bm, rhs)
    pi_flipped = np.linalg.solve(Bm.T, cost[tab.basis])
    return OPTIMAL, np.maximum(w[:n_real], 0.0), pi_flipped * flip, tab.pivots, None


def _ray_ok(N, f, u) -> bool:
    size = max(float(np.sum(u)), 1e-300)
    return (float(np.max(np.abs(N @ u), initial=0.0)) <= CERT_TOL * size
            and float(f @ u) < -CERT_TOL * size * max(1.0, float(np.max(np.abs(f), initial=0.0))))


def _farkas_ok(N, r, z) -> bool:
    size = max(float(np.max(np.abs(z), initial=0.0)), 1e-300)
    return (float(np.max(N.T @ z, initial=0.0)) <= CERT_TOL * size
            and float(r @ z) > CERT_TOL * size * max(1.0, float(np.max(np.abs(r), initial=0.0))))


def solve(p: LpProblem, feas_tol: float = 1e-9, opt_tol: float = 1e-9, *,
          stall_limit: int = 50, refactor_every: int = 100) -> LpSolution:
    """Solve ``p``; every reported status is checked before it is returned.

    An optimal point must satisfy the rows (residual of row ``i`` at most
    ``feas_tol * max(1, |b_i|, sum_j |A_ij x_j|)``) and close the duality gap;
    infeasible and unbounded verdicts must come with a verified Farkas
    certificate. When a check fails, the solve is repeated with a stricter
    pivot tolerance, and :class:`SolverFailure` is raised only if every
    attempt fails.
    """
    m, q, n = p.A_ub.shape[0], p.A_eq.shape[0], p.n
    A_ub, b_ub, A_eq, b_eq = p.A_ub, p.b_ub, p.A_eq, p.b_eq

    # rows without coefficients are either vacuous or certify infeasibility
    ub_norm = np.max(np.abs(A_ub), axis=1) if m else np.zeros(0)
    eq_norm = np.max(np.abs(A_eq), axis=1) if q else np.zeros(0)
    if np.any((ub_norm == 0) & (b_ub < -feas_tol * (1 + np.abs(b_ub)))) or np.any(
        (eq_norm == 0) & (np.abs(b_eq) > feas_tol * (1 + np.abs(b_eq)))
    ):
        return LpSolution(INFEASIBLE)
    keep_ub = ub_norm > 0
    keep_eq = eq_norm > 0
    s_ub = 1.0 / ub_norm[keep_ub]
    s_eq = 1.0 / eq_norm[keep_eq]
    Aub = A_ub[keep_ub] * s_ub[:, None]
    bub = b_ub[keep_ub] * s_ub
    Aeq = A_eq[keep_eq] * s_eq[:, None]
    beq = b_eq[keep_eq] * s_eq
    col_norm = np.max(np.abs(np.vstack([Aub, Aeq])), axis=0) if (Aub.size or Aeq.size) else np.zeros(n)
    t = np.where(col_norm > 0, 1.0 / np.where(col_norm > 0, col_norm, 1.0), 1.0)
    Aub = Aub * t
    Aeq = Aeq * t
    c = p.c * t

    K = np.vstack([Aub, Aeq])
    keep, descent = _independent_columns(K, c, opt_tol)
    N = np.hstack([Aub[:, keep].T, Aeq[:, keep].T, -Aeq[:, keep].T])
    f = np.concatenate([bub, beq, -beq])
    ck = c[keep]
    failure = None
    for piv_tol in PIVOT_TOLERANCES:
        opts = dict(piv_tol=piv_tol, opt_tol=opt_tol, p1_tol=max(feas_tol, 1e-12),
                    stall_limit=stall_limit, refactor_every=refactor_every,
                    max_pivots=200 * (N.shape[0] + N.shape[1]) + 1000)
        try:
            return _attempt(p, N, f, ck, keep, t, descent, keep_ub, keep_eq, s_ub, s_eq,
                            feas_tol, opts)
        except SolverFailure as exc:
            log.debug("attempt with pivot tolerance %g failed: %s", piv_tol, exc)
            failure = exc
    raise failure


def _attempt(p, N, f, ck, keep, t, descent, keep_ub, keep_eq, s_ub, s_eq, feas_tol, opts):
    n, m, q = p.n, p.A_ub.shape[0], p.A_eq.shape[0]
    if descent:
        status, pivots = INFEASIBLE, 0
    else:
        status, w, pi, pivots, cert = _standard_form_solve(N, f, -ck, opts)
        if status == INFEASIBLE and not _farkas_ok(N, -ck, cert):
            raise SolverFailure("unverified improving direction")
    if status == UNBOUNDED:
        if not _ray_ok(N, f, cert):
            raise SolverFailure("unverified infeasibility certificate")
        return LpSolution(INFEASIBLE, iterations=pivots)
    if status == INFEASIBLE:
        # an improving direction exists: the primal is unbounded iff it is feasible
        fstatus, _, _, more, fcert = _standard_form_solve(N, f, np.zeros(keep.size), opts)
        if fstatus == OPTIMAL:
            return LpSolution(UNBOUNDED, iterations=pivots + more)
        if fstatus == UNBOUNDED and _ray_ok(N, f, fcert):
            return LpSolution(INFEASIBLE, iterations=pivots + more)
        raise SolverFailure("feasibility check did not produce a verified verdict")

    x = np.zeros(n)
    x[keep] = pi * t[keep]
    _check_rows(p, x, feas_tol)
    dual_res = float(np.max(np.abs(N @ w + ck), initial=0.0))
    primal_obj = float(p.c @ x)
    gap = abs(primal_obj + float(f @ w))
    if dual_res > CERT_TOL * max(1.0, float(np.max(np.abs(w), initial=0.0))) or \
            gap > CERT_TOL * (1.0 + abs(primal_obj)):
        raise SolverFailure(f"optimality not verified (dual residual {dual_res:.2e}, gap {gap:.2e})")
    mu, nu = int(keep_ub.sum()), int(keep_eq.sum())
    y = np.zeros(m)
    y[keep_ub] = w[:mu] * s_ub
    z = np.zeros(q)
    z[keep_eq] = (w[mu:mu + nu] - w[mu + nu:]) * s_eq
    return LpSolution(OPTIMAL, x=x, objective=primal_obj, duals_ub=y, duals_eq=z,
                      iterations=pivots)


def _independent_columns(K: np.ndarray, c: np.ndarray, opt_tol: float, rtol: float = 1e-9):
    """Indices of columns of ``K`` independent of the earlier ones.

    A free variable whose column is a combination of kept columns can be
    fixed at zero without changing the feasible set of row activities. If its
    cost differs from the same combination of kept costs, moving along that
    combination changes the objective without touching any row, so the
    problem is unbounded whenever it is feasible; ``descent`` reports this.
    Modified Gram-Schmidt with one reorthogonalisation pass.
    """
    n = K.shape[1]
    Q = np.zeros((K.shape[0], 0))
    keep, dropped = [], []
    for j in range(n):
        v = K[:, j].copy()
        norm = np.linalg.norm(v)
        if norm == 0.0:
            dropped.append(j)
            continue
        for _ in range(2):
            v -= Q @ (Q.T @ v)
        res = np.linalg.norm(v)
        if res <= rtol * norm:
            dropped.append(j)
        else:
            keep.append(j)
            Q = np.column_stack([Q, v / res])
    keep = np.array(keep, dtype=int)
    descent = False
    if dropped and keep.size:
        lam, *_ = np.linalg.lstsq(K[:, keep], K[:, dropped], rcond=None)
        gap = c[dropped] - c[keep] @ lam
        # the direction is e_j - lam; judge its cost against its length
        size = np.max(np.abs(c)) * (1.0 + np.abs(lam).sum(axis=0))
        descent = bool(np.any(np.abs(gap) > opt_tol + 1e-7 * size))
    elif dropped:
        descent = bool(np.any(np.abs(c[dropped]) > opt_tol))
    return keep, descent


def row_violations(p: LpProblem, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scaled residuals ``(ub, eq)``: positive entries of ``ub`` are violations."""
    def scale(A, b):
        return np.maximum(np.maximum(1.0, np.abs(b)), np.abs(A) @ np.abs(x))
    ub = (p.A_ub @ x - p.b_ub) / scale(p.A_ub, p.b_ub) if p.A_ub.size else np.zeros(0)
    eq = np.abs(p.A_eq @ x - p.b_eq) / scale(p.A_eq, p.b_eq) if p.A_eq.size else np.zeros(0)
    return ub, eq


def _check_rows(p: LpProblem, x: np.ndarray, feas_tol: float):
    ub, eq = row_violations(p, x)
    worst = max(float(ub.max(initial=0.0)), float(eq.max(initial=0.0)))
    if worst > feas_tol:
        raise SolverFailure(f"solution violates a row by {worst:.3e} (relative); numerical breakdown")
