"""Bounded-variable two-phase simplex for the model's LP relaxations.

Revised simplex with a dense basis inverse (product-form row updates,
periodic refactorization) over a sparse constraint matrix. Variables carry
finite lower bounds and possibly infinite upper bounds; nonbasic variables
sit at a bound, and a cheaper bound flip is preferred to a basis change when
both limit the step. Pricing is steepest-violation (Dantzig) on reduced
costs that are updated incrementally each pivot and recomputed exactly at
refactorization, at phase switches, and before optimality is declared;
after a run of degenerate steps pricing falls back to Bland's rule to break
cycles.

Phase 1 starts from all variables at their lower bounds with slacks basic
where feasible and artificials elsewhere; phase 2 pins the artificials to
zero and optimizes the true costs from the phase-1 basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg.blas import dger

from ..errors import PivotLimitError
from .model import MilpModel

_DUAL_TOL = 1e-9
_PIVOT_TOL = 1e-10
_FEAS_TOL = 1e-7
_DEGENERATE_STEP = 1e-11
_BLAND_AFTER = 40
_REFACTOR_EVERY = 250


@dataclass(frozen=True)
class LpSolution:
    status: str  # 'optimal' | 'infeasible' | 'unbounded'
    objective: float
    values: np.ndarray | None  # structural variable values when optimal
    iterations: int


class _Arrays:
    """Constraint data shared across LP solves of one model."""

    __slots__ = ("a_ext", "at_ext", "b", "is_eq", "costs", "lower", "upper",
                 "n_structural", "n_ext", "slack_of_row")

    def __init__(self, model: MilpModel):
        m = len(model.rows)
        n = len(model.variables)
        data: list[float] = []
        rows: list[int] = []
        cols: list[int] = []
        b = np.empty(m)
        is_eq = np.zeros(m, dtype=bool)
        for ri, row in enumerate(model.rows):
            b[ri] = row.rhs
            is_eq[ri] = row.sense == "=="
            for vi, coef in row.coeffs.items():
                if coef != 0.0:
                    rows.append(ri)
                    cols.append(vi)
                    data.append(coef)
        slack_rows = np.flatnonzero(~is_eq)
        slack_of_row = np.full(m, -1, dtype=np.int64)
        for k, ri in enumerate(slack_rows):
            slack_of_row[ri] = n + k
            rows.append(ri)
            cols.append(n + k)
            data.append(1.0)
        n_ext = n + len(slack_rows)
        a_ext = sparse.csc_matrix((data, (rows, cols)), shape=(m, n_ext))
        costs = np.zeros(n_ext)
        for vi, coef in model.objective.items():
            costs[vi] = coef
        lower = np.zeros(n_ext)
        upper = np.full(n_ext, np.inf)
        for vi, var in enumerate(model.variables):
            lower[vi] = var.lower
            upper[vi] = var.upper
        if not np.all(np.isfinite(lower)):
            raise ValueError("all variables need finite lower bounds")
        self.a_ext = a_ext
        self.at_ext = a_ext.T.tocsr()
        self.b = b
        self.is_eq = is_eq
        self.costs = costs
        self.lower = lower
        self.upper = upper
        self.n_structural = n
        self.n_ext = n_ext
        self.slack_of_row = slack_of_row


def _arrays(model: MilpModel) -> _Arrays:
    cache = model._solver_cache
    if "arrays" not in cache:
        cache["arrays"] = _Arrays(model)
    return cache["arrays"]


class _Tableau:
    """Mutable simplex state over fixed constraint data."""

    def __init__(self, a: sparse.csc_matrix, b: np.ndarray, lower: np.ndarray,
                 upper: np.ndarray, basis: np.ndarray, vstat: np.ndarray,
                 binv: np.ndarray, xb: np.ndarray):
        self.a = a
        self.at = a.T.tocsr()
        self.indptr = a.indptr
        self.indices = a.indices
        self.data = a.data
        self.b = b
        self.lower = lower
        self.upper = upper
        self.basis = basis
        self.vstat = vstat  # 0 at lower, 1 at upper, 2 basic
        self.binv = binv
        self.xb = xb
        self.pivots_since_refactor = 0

    def column(self, e: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[e], self.indptr[e + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def ftran(self, e: int) -> np.ndarray:
        """Basis-inverse times column e (sparse gather)."""
        rows, vals = self.column(e)
        return self.binv[:, rows] @ vals

    def nonbasic_values(self) -> np.ndarray:
        vals = np.where(
            self.vstat == 1,
            np.where(np.isfinite(self.upper), self.upper, 0.0),
            self.lower)
        vals[self.basis] = 0.0
        return vals

    def reduced_costs(self, costs: np.ndarray) -> np.ndarray:
        y = self.binv.T @ costs[self.basis]
        return costs - self.at @ y

    def refactor(self) -> None:
        dense_b = self.a[:, self.basis].toarray()
        self.binv = np.asfortranarray(np.linalg.inv(dense_b))
        vals = self.nonbasic_values()
        self.xb = self.binv @ (self.b - self.a @ vals)
        self.pivots_since_refactor = 0

    def rank_one_update(self, w: np.ndarray, r: int) -> None:
        """Replace basis column r, where w = binv @ (entering column).

        In-place product-form update: new row r is binv[r]/w[r] and every
        other row i drops w[i] times the new row r.
        """
        rrow = self.binv[r] / w[r]
        u = w.copy()
        u[r] = w[r] - 1.0
        self.binv = dger(-1.0, u, rrow, a=self.binv, overwrite_a=1)

    def values(self) -> np.ndarray:
        vals = self.nonbasic_values()
        vals[self.basis] = self.xb
        return vals


def _run_phase(t: _Tableau, costs: np.ndarray, iterations: int,
               pivot_limit: int) -> tuple[str, int]:
    m = t.a.shape[0]
    span = t.upper > t.lower
    d = t.reduced_costs(costs)
    d_exact = True
    stall = 0
    use_bland = False
    while True:
        if iterations >= pivot_limit:
            raise PivotLimitError(f"simplex exceeded {pivot_limit} pivots")
        iterations += 1
        nonbasic = t.vstat != 2
        at_lower = (t.vstat == 0) & span & (d < -_DUAL_TOL) & nonbasic
        at_upper = (t.vstat == 1) & span & (d > _DUAL_TOL) & nonbasic
        eligible = at_lower | at_upper
        if not eligible.any():
            if d_exact:
                return "optimal", iterations
            d = t.reduced_costs(costs)
            d_exact = True
            continue
        if use_bland:
            e = int(np.flatnonzero(eligible)[0])
        else:
            score = np.where(eligible, np.abs(d), 0.0)
            e = int(np.argmax(score))
        direction = 1.0 if t.vstat[e] == 0 else -1.0
        w = t.ftran(e)
        g = direction * w
        step = np.full(m, np.inf)
        lo_b = t.lower[t.basis]
        up_b = t.upper[t.basis]
        pos = g > _PIVOT_TOL
        neg = g < -_PIVOT_TOL
        any_limit = pos.any() or neg.any()
        if pos.any():
            step[pos] = (t.xb[pos] - lo_b[pos]) / g[pos]
        if neg.any():
            step[neg] = (up_b[neg] - t.xb[neg]) / (-g[neg])
        np.maximum(step, 0.0, out=step)
        t_basic = step.min() if any_limit else np.inf
        t_span = t.upper[e] - t.lower[e]
        move = min(t_span, t_basic)
        if not np.isfinite(move):
            return "unbounded", iterations
        if t_basic < t_span:
            cand = np.flatnonzero(step <= t_basic + 1e-9)
            if use_bland:
                r = int(cand[np.argmin(t.basis[cand])])
            else:
                r = int(cand[np.argmax(np.abs(g[cand]))])
            # Update reduced costs with the outgoing pivot row, then the
            # basis inverse and basic values.
            alpha = t.at @ t.binv[r]
            ratio = d[e] / w[r]
            d -= ratio * alpha
            d[e] = 0.0
            d_exact = False
            t.xb -= move * g
            entering_value = (t.lower[e] if t.vstat[e] == 0
                              else t.upper[e]) + direction * move
            leaving = t.basis[r]
            t.vstat[leaving] = 0 if g[r] > 0 else 1
            t.basis[r] = e
            t.vstat[e] = 2
            t.xb[r] = entering_value
            t.rank_one_update(w, r)
            t.pivots_since_refactor += 1
            if t.pivots_since_refactor >= _REFACTOR_EVERY:
                t.refactor()
                d = t.reduced_costs(costs)
                d_exact = True
        else:
            t.xb -= move * g
            t.vstat[e] = 1 - t.vstat[e]
        if move <= _DEGENERATE_STEP:
            stall += 1
            if stall >= _BLAND_AFTER:
                use_bland = True
        else:
            stall = 0
            use_bland = False


def solve_lp_relaxation(model: MilpModel,
                        fixings: dict[int, tuple[float, float]] | None = None,
                        *, pivot_limit: int | None = None) -> LpSolution:
    """Solve the LP relaxation of `model` with extra bound fixings.

    `fixings` maps variable index -> (lower, upper) overriding the model
    bounds (used for branching). The reported objective includes the model's
    constant offset.
    """
    arr = _arrays(model)
    lower = arr.lower.copy()
    upper = arr.upper.copy()
    if fixings:
        for vi, (lo, hi) in fixings.items():
            lower[vi] = lo
            upper[vi] = hi
    if np.any(lower > upper + 1e-12):
        return LpSolution("infeasible", np.inf, None, 0)

    m = len(arr.b)
    n_ext = arr.n_ext
    if pivot_limit is None:
        pivot_limit = 50 * (m + n_ext) + 5000

    residual = arr.b - arr.a_ext @ lower[:n_ext]
    # Choose the starting basis: slack where it fits, artificial otherwise.
    art_rows: list[int] = []
    art_signs: list[float] = []
    basis = np.empty(m, dtype=np.int64)
    xb = np.empty(m)
    next_art = n_ext
    for ri in range(m):
        slack = arr.slack_of_row[ri]
        if slack >= 0 and residual[ri] >= 0.0:
            basis[ri] = slack
            xb[ri] = residual[ri]
        else:
            basis[ri] = next_art
            next_art += 1
            art_rows.append(ri)
            art_signs.append(1.0 if residual[ri] >= 0.0 else -1.0)
            xb[ri] = abs(residual[ri])
    n_art = len(art_rows)
    if n_art:
        art_col = sparse.csc_matrix(
            (art_signs, (art_rows, range(n_art))), shape=(m, n_art))
        a = sparse.hstack([arr.a_ext, art_col], format="csc")
        lower_full = np.concatenate([lower, np.zeros(n_art)])
        upper_full = np.concatenate([upper, np.full(n_art, np.inf)])
    else:
        a = arr.a_ext
        lower_full = lower
        upper_full = upper

    vstat = np.zeros(a.shape[1], dtype=np.int8)
    vstat[basis] = 2
    binv = np.eye(m, order="F")
    for k, ri in enumerate(art_rows):
        if art_signs[k] < 0:
            binv[ri, ri] = -1.0
    t = _Tableau(a, arr.b, lower_full, upper_full, basis, vstat, binv, xb)

    iterations = 0
    if n_art:
        phase1 = np.concatenate([np.zeros(n_ext), np.ones(n_art)])
        status, iterations = _run_phase(t, phase1, iterations, pivot_limit)
        if status != "optimal":
            # Phase 1 is bounded below by zero; anything else is numeric.
            return LpSolution("infeasible", np.inf, None, iterations)
        infeasibility = float(phase1 @ t.values())
        if infeasibility > _FEAS_TOL:
            return LpSolution("infeasible", np.inf, None, iterations)
        # Artificial variables are done: pin them to zero.
        t.upper[n_ext:] = 0.0

    costs = np.concatenate([arr.costs, np.zeros(n_art)])
    status, iterations = _run_phase(t, costs, iterations, pivot_limit)
    if status == "unbounded":
        return LpSolution("unbounded", -np.inf, None, iterations)
    vals = t.values()
    objective = float(costs @ vals) + model.objective_offset
    return LpSolution("optimal", objective, vals[:arr.n_structural].copy(),
                      iterations)
