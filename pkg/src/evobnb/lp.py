"""Dense two-phase primal simplex for the node relaxations.

Solves min c.x subject to A x >= b and lo <= x <= hi. Bound changes coming
from branching stay in the lo/hi vectors, so the constraint count seen by
scoring policies is constant per instance.

The problem is rewritten over nonnegative shifted variables: finite lower
bounds shift, upper-only bounds mirror, free variables split into a
difference of two nonnegatives, and two-sided boxes add one upper-bound row.
Rows whose right-hand side stays positive after shifting receive an
artificial variable driven out in phase 1. Pricing is Dantzig with a
fallback to Bland's rule after a stall, which guarantees termination.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9

_OPTIMAL, _UNBOUNDED, _ITER_LIMIT = 0, 1, 2


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpNumericalError(RuntimeError):
    """Simplex failed to terminate; signals a solver bug, not bad input."""


@dataclass(frozen=True)
class LpProblem:
    """min objective . x  s.t.  lhs x >= rhs,  lower <= x <= upper."""

    objective: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "objective", np.asarray(self.objective, dtype=float))
        object.__setattr__(self, "lhs", np.asarray(self.lhs, dtype=float))
        object.__setattr__(self, "rhs", np.asarray(self.rhs, dtype=float))
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        n = self.objective.shape[0]
        if self.lhs.ndim != 2 or self.lhs.shape[1] != n:
            raise ValueError(f"lhs must be (m, {n}), got {self.lhs.shape}")
        if self.rhs.shape != (self.lhs.shape[0],):
            raise ValueError("rhs length must match lhs row count")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bound vectors must have one entry per variable")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def num_cons(self) -> int:
        return self.lhs.shape[0]


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float | None = None


@njit(cache=True)
def _pivot_loop(T, basis, allowed, tol, pivot_tol, stall_limit, max_iter):
    """Run simplex pivots in place; returns 0 optimal, 1 unbounded, 2 stuck.

    T is (rows+1, cols+1): constraint rows then the objective row holding
    reduced costs; the last column is the right-hand side and the objective
    cell holds -z.
    """
    m = T.shape[0] - 1
    ncols = T.shape[1] - 1
    stall = 0
    bland = False
    best_obj = T[m, ncols]
    for _ in range(max_iter):
        # entering column
        enter = -1
        if bland:
            for j in range(ncols):
                if allowed[j] and T[m, j] < -tol:
                    enter = j
                    break
        else:
            best = -tol
            for j in range(ncols):
                if allowed[j] and T[m, j] < best:
                    best = T[m, j]
                    enter = j
        if enter < 0:
            return _OPTIMAL
        # leaving row: min ratio, ties to the smallest basic column index
        leave = -1
        best_ratio = 0.0
        for i in range(m):
            a = T[i, enter]
            if a > pivot_tol:
                r = T[i, ncols] / a
                if leave < 0 or r < best_ratio or (r == best_ratio and basis[i] < basis[leave]):
                    leave = i
                    best_ratio = r
        if leave < 0:
            return _UNBOUNDED
        piv = T[leave, enter]
        for j in range(ncols + 1):
            T[leave, j] /= piv
        for i in range(m + 1):
            if i != leave:
                f = T[i, enter]
                if f != 0.0:
                    for j in range(ncols + 1):
                        T[i, j] -= f * T[leave, j]
                    T[i, enter] = 0.0
        basis[leave] = enter
        obj = T[m, ncols]
        if obj > best_obj + 1e-12:
            best_obj = obj
            stall = 0
        else:
            stall += 1
            if stall > stall_limit:
                bland = True
    return _ITER_LIMIT


def _price_out(T, basis):
    """Express the objective row in the current basis (basic columns are unit)."""
    m = T.shape[0] - 1
    for i in range(m):
        coef = T[m, basis[i]]
        if coef != 0.0:
            T[m, :] -= coef * T[i, :]


def solve_lp(p: LpProblem) -> LpResult:
    """Solve the LP; deterministic for identical inputs.

    Raises LpNumericalError if pivoting fails to terminate even under
    Bland's rule (which should never happen and would indicate a bug).
    """
    n = p.num_vars
    m = p.num_cons
    lo, hi = p.lower, p.upper

    lo_finite = np.isfinite(lo)
    hi_finite = np.isfinite(hi)
    free = ~lo_finite & ~hi_finite
    mirrored = ~lo_finite & hi_finite
    boxed = lo_finite & hi_finite

    # Column layout of the shifted problem: the n original columns (mirrored
    # ones negated), then one extra negated column per free variable.
    base = np.where(lo_finite, lo, 0.0)
    base = np.where(mirrored, hi, base)

    sign = np.where(mirrored, -1.0, 1.0)
    cols = p.lhs * sign
    cost = p.objective * sign
    free_idx = np.flatnonzero(free)
    if free_idx.size:
        cols = np.hstack([cols, -p.lhs[:, free_idx]])
        cost = np.concatenate([cost, -p.objective[free_idx]])
    const = float(p.objective @ base)
    b_shift = p.rhs - p.lhs @ base

    # Upper-bound rows u_j <= hi - lo for two-sided boxes.
    boxed_idx = np.flatnonzero(boxed)
    n_cols = cols.shape[1]
    if boxed_idx.size:
        bound_rows = np.zeros((boxed_idx.size, n_cols))
        bound_rows[np.arange(boxed_idx.size), boxed_idx] = -1.0
        cols = np.vstack([cols, bound_rows])
        b_shift = np.concatenate([b_shift, -(hi[boxed_idx] - lo[boxed_idx])])
    rows = cols.shape[0]

    # Rows with nonpositive rhs flip so their surplus can start basic; the
    # rest keep a -1 surplus and get an artificial variable.
    needs_art = b_shift > 0.0
    flip = np.where(needs_art, 1.0, -1.0)
    A = cols * flip[:, None]
    b = b_shift * flip
    art_idx = np.flatnonzero(needs_art)
    n_art = art_idx.size

    ncols = n_cols + rows + n_art
    T = np.zeros((rows + 1, ncols + 1))
    T[:rows, :n_cols] = A
    surplus_sign = np.where(needs_art, -1.0, 1.0)
    T[np.arange(rows), n_cols + np.arange(rows)] = surplus_sign
    for k, i in enumerate(art_idx):
        T[i, n_cols + rows + k] = 1.0
    T[:rows, ncols] = b

    basis = np.where(needs_art, 0, n_cols + np.arange(rows)).astype(np.int64)
    for k, i in enumerate(art_idx):
        basis[i] = n_cols + rows + k

    allowed = np.ones(ncols, dtype=np.bool_)
    allowed[n_cols + rows:] = False  # artificials never re-enter
    stall_limit = 10 * (n + m)
    max_iter = 2000 + 200 * (rows + n_cols)

    if n_art:
        T[rows, n_cols + rows:ncols] = 1.0
        _price_out(T, basis)
        code = _pivot_loop(T, basis, allowed, FEAS_TOL, PIVOT_TOL, stall_limit, max_iter)
        if code == _ITER_LIMIT:
            raise LpNumericalError("phase 1 failed to terminate")
        phase1 = -T[rows, ncols]
        if phase1 > FEAS_TOL:
            return LpResult(LpStatus.INFEASIBLE)
        # pivot lingering artificials out on any eligible column
        for i in range(rows):
            if basis[i] >= n_cols + rows:
                for j in range(n_cols + rows):
                    if allowed[j] and abs(T[i, j]) > PIVOT_TOL:
                        _single_pivot(T, basis, i, j)
                        break

    T[rows, :] = 0.0
    T[rows, :n_cols] = cost
    _price_out(T, basis)
    code = _pivot_loop(T, basis, allowed, FEAS_TOL, PIVOT_TOL, stall_limit, max_iter)
    if code == _ITER_LIMIT:
        raise LpNumericalError("phase 2 failed to terminate")
    if code == _UNBOUNDED:
        return LpResult(LpStatus.UNBOUNDED)

    u = np.zeros(n_cols)
    for i in range(rows):
        if basis[i] < n_cols:
            u[basis[i]] = T[i, ncols]
    x = base + sign * u[:n]
    if free_idx.size:
        x[free_idx] -= u[n:]
    return LpResult(LpStatus.OPTIMAL, x=x, objective=float(p.objective @ x))


def _single_pivot(T, basis, i, j):
    piv = T[i, j]
    T[i, :] /= piv
    col = T[:, j].copy()
    col[i] = 0.0
    T -= np.outer(col, T[i, :])
    T[:, j] = 0.0
    T[i, j] = 1.0
    basis[i] = j


def check_result(p: LpProblem, res: LpResult, tol: float = FEAS_TOL) -> bool:
    """Re-check the optimality certificate fields of an OPTIMAL result."""
    if res.status is not LpStatus.OPTIMAL:
        raise ValueError("only optimal results carry a certificate")
    x = res.x
    scale = 1.0 + float(np.max(np.abs(p.rhs))) if p.num_cons else 1.0
    ok = bool(np.all(p.lhs @ x >= p.rhs - tol * scale)) if p.num_cons else True
    ok &= bool(np.all(x >= p.lower - tol))
    ok &= bool(np.all(x <= p.upper + tol))
    ok &= abs(float(p.objective @ x) - res.objective) <= tol * (1.0 + abs(res.objective))
    return ok
