"""Bounded-variable revised simplex with warm dual re-solves.

The solver works on an internal minimization form regardless of the
instance's declared sense: maximization objectives are negated when the
instance is compiled, and callers convert reported values back.  Every
objective and bound produced here is therefore in minimization sense.

``solve_root`` runs a two-phase primal simplex from the all-slack basis.
``resolve_bound_change`` re-solves after tightening one variable's bounds,
starting dual-feasible from the parent basis; it supports an iteration cap
and always reports a valid dual bound (every dual iterate is dual feasible).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import EQ, GE, LE, MAXIMIZE, Instance

FEAS_TOL = 1e-7
COST_TOL = 1e-7
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 100

BASIC, AT_LO, AT_UP, FREE = 0, 1, 2, 3

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
ITERATION_LIMIT = "IterationLimit"
UNBOUNDED = "Unbounded"


class SimplexError(RuntimeError):
    """Numerical breakdown (no acceptable pivot); never silent."""


class ContractError(ValueError):
    """Caller violated a solver precondition."""


class _Compiled:
    """Instance data compiled once: augmented matrix, rhs, canonical costs."""

    def __init__(self, inst: Instance) -> None:
        n, m = inst.num_vars, inst.num_rows
        rows_i, cols_i, vals = [], [], []
        for i, row in enumerate(inst.rows):
            rows_i.extend([i] * len(row.indices))
            cols_i.extend(row.indices)
            vals.extend(row.coefs)
        a_struct = sp.csc_matrix(
            (vals, (rows_i, cols_i)), shape=(m, n), dtype=float
        )
        self.A = sp.hstack([a_struct, sp.identity(m, format="csc")], format="csc")
        self.AT = self.A.T.tocsr()
        self.b = np.array([row.rhs for row in inst.rows], dtype=float)
        sign = -1.0 if inst.sense == MAXIMIZE else 1.0
        self.c = np.zeros(n + m)
        self.c[:n] = sign * np.asarray(inst.objective)
        self.slack_lo = np.zeros(m)
        self.slack_hi = np.zeros(m)
        for i, row in enumerate(inst.rows):
            if row.relation == LE:
                self.slack_lo[i], self.slack_hi[i] = 0.0, math.inf
            elif row.relation == GE:
                self.slack_lo[i], self.slack_hi[i] = -math.inf, 0.0
            else:  # EQ
                self.slack_lo[i], self.slack_hi[i] = 0.0, 0.0
        self.n, self.m = n, m


def _compiled(inst: Instance) -> _Compiled:
    comp = inst._compiled.get("lp")
    if comp is None:
        comp = _Compiled(inst)
        inst._compiled["lp"] = comp
    return comp


@dataclass(frozen=True, eq=False)
class LpView:
    """An instance plus an overlay of tightened variable bounds."""

    instance: Instance
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def root(cls, inst: Instance) -> "LpView":
        return cls(inst, np.asarray(inst.var_lower, dtype=float), np.asarray(inst.var_upper, dtype=float))

    @classmethod
    def with_fixings(cls, inst: Instance, fixings: dict[int, int]) -> "LpView":
        view = cls.root(inst)
        lo, hi = view.lower.copy(), view.upper.copy()
        for var, val in fixings.items():
            lo[var] = hi[var] = float(val)
        return cls(inst, lo, hi)

    def tighten(self, var: int, lo: float, hi: float) -> "LpView":
        new_lo, new_hi = self.lower.copy(), self.upper.copy()
        new_lo[var] = max(new_lo[var], lo)
        new_hi[var] = min(new_hi[var], hi)
        return LpView(self.instance, new_lo, new_hi)

    @property
    def trivially_infeasible(self) -> bool:
        return bool(np.any(self.lower > self.upper))


class BasisSnapshot:
    """Opaque basis state: basic column indices and nonbasic sides.

    A snapshot may carry a cached basis inverse so sibling re-solves from the
    same parent share one factorization; the cache is dropped explicitly by
    the owner once the children are solved.
    """

    __slots__ = ("basis", "status", "_binv")

    def __init__(self, basis: np.ndarray, status: np.ndarray) -> None:
        self.basis = basis
        self.status = status
        self._binv = None

    def drop_cache(self) -> None:
        self._binv = None


@dataclass(frozen=True)
class LpOutcome:
    status: str
    objective: float
    dual_bound: float
    primal: tuple[float, ...] | None
    basis: BasisSnapshot | None
    iterations: int


class _Worker:
    """Mutable simplex state over the augmented (structural+slack) columns."""

    def __init__(self, comp: _Compiled, view: LpView) -> None:
        self.comp = comp
        self.m = comp.m
        self.ncols = comp.n + comp.m
        self.A = comp.A
        self.AT = comp.AT
        self.b = comp.b
        self.c = comp.c
        self.lo = np.concatenate([view.lower, comp.slack_lo])
        self.hi = np.concatenate([view.upper, comp.slack_hi])
        self.status = np.empty(self.ncols, dtype=np.int8)
        self.basis = np.empty(self.m, dtype=np.int64)
        self.binv = np.eye(self.m)
        self.xb = np.zeros(self.m)
        self._rank1 = np.empty((self.m, self.m))
        self.iterations = 0
        self.pivots_since_refactor = 0
        self.degenerate_streak = 0
        # phase-1 artificials: appended columns e_row * sign
        self.art_rows: list[int] = []
        self.art_signs: list[float] = []

    # -- linear algebra helpers -------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        if j < self.ncols:
            return self.A[:, j].toarray().ravel()
        k = j - self.ncols
        col = np.zeros(self.m)
        col[self.art_rows[k]] = self.art_signs[k]
        return col

    def _n_total(self) -> int:
        return self.ncols + len(self.art_rows)

    def nonbasic_point(self) -> np.ndarray:
        x = np.zeros(self._n_total())
        at_lo = self.status == AT_LO
        at_up = self.status == AT_UP
        x[at_lo] = self.lo[at_lo]
        x[at_up] = self.hi[at_up]
        return x

    def recompute_xb(self) -> None:
        x = self.nonbasic_point()
        rhs = self.b - self.A @ x[: self.ncols]
        for k, (row, sign) in enumerate(zip(self.art_rows, self.art_signs)):
            rhs[row] -= sign * x[self.ncols + k]
        self.xb = self.binv @ rhs

    def refactorize(self) -> None:
        cols = [self._column(j) for j in self.basis]
        bmat = np.column_stack(cols) if cols else np.zeros((0, 0))
        try:
            self.binv = np.linalg.inv(bmat)
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular basis during refactorization") from exc
        self.pivots_since_refactor = 0

    def reduced_costs(self, costs: np.ndarray) -> np.ndarray:
        y = self.binv.T @ costs[self.basis]
        d = costs - self._at_dot(y)
        return d

    def _at_dot(self, y: np.ndarray) -> np.ndarray:
        d = np.empty(self._n_total())
        d[: self.ncols] = self.AT @ y
        for k, (row, sign) in enumerate(zip(self.art_rows, self.art_signs)):
            d[self.ncols + k] = sign * y[row]
        return d

    def _pivot(self, r: int, q: int, w: np.ndarray) -> None:
        pivot = w[r]
        if abs(pivot) < PIVOT_TOL:
            raise SimplexError(f"pivot {pivot:.3e} below tolerance with no alternative")
        self.binv[r, :] /= pivot
        scale = w.copy()
        scale[r] = 0.0
        np.multiply(scale[:, None], self.binv[r, :], out=self._rank1)
        self.binv -= self._rank1
        self.basis[r] = q
        self.status[q] = BASIC
        self.iterations += 1
        self.pivots_since_refactor += 1
        if self.pivots_since_refactor >= REFACTOR_EVERY:
            self.refactorize()

    def objective_value(self, costs: np.ndarray) -> float:
        x = self.nonbasic_point()
        val = float(costs[self.basis] @ self.xb)
        nb = self.status != BASIC
        val += float(costs[nb] @ x[nb])
        return val

    # -- primal simplex ----------------------------------------------------

    def primal(self, costs: np.ndarray) -> str:
        """Primal iterations until optimal or unbounded for ``costs``."""
        bland_after = 3 * (self.m + self._n_total())
        hard_limit = 50 * (self.m + self._n_total()) + 10000
        steps = 0
        while True:
            steps += 1
            if steps > hard_limit:
                raise SimplexError("primal simplex exceeded the safety iteration limit")
            d = self.reduced_costs(costs)
            use_bland = self.degenerate_streak >= bland_after
            eligible = (
                ((self.status == AT_LO) & (d < -COST_TOL))
                | ((self.status == AT_UP) & (d > COST_TOL))
                | ((self.status == FREE) & (np.abs(d) > COST_TOL))
            )
            idx = np.flatnonzero(eligible)
            if idx.size == 0:
                return OPTIMAL
            if use_bland:
                q = int(idx[0])
            else:
                q = int(idx[np.argmax(np.abs(d[idx]))])
            sigma = 1.0 if (self.status[q] == AT_LO or (self.status[q] == FREE and d[q] < 0)) else -1.0
            w = self.binv @ self._column(q)

            # ratio test: basics first, then the entering variable's own span
            g = sigma * w
            t_best = math.inf
            leave = -1
            leave_side = AT_LO
            dec = np.flatnonzero(g > PIVOT_TOL)
            inc = np.flatnonzero(g < -PIVOT_TOL)
            lo_b = self.lo[self.basis]
            hi_b = self.hi[self.basis]
            for i in dec:
                if math.isinf(lo_b[i]):
                    continue
                t = (self.xb[i] - lo_b[i]) / g[i]
                if t < t_best - PIVOT_TOL or (t < t_best + PIVOT_TOL and (leave < 0 or abs(g[i]) > abs(g[leave]))):
                    t_best, leave, leave_side = max(t, 0.0), int(i), AT_LO
            for i in inc:
                if math.isinf(hi_b[i]):
                    continue
                t = (self.xb[i] - hi_b[i]) / g[i]
                if t < t_best - PIVOT_TOL or (t < t_best + PIVOT_TOL and (leave < 0 or abs(g[i]) > abs(g[leave]))):
                    t_best, leave, leave_side = max(t, 0.0), int(i), AT_UP
            span = self.hi[q] - self.lo[q]
            if span < t_best:
                t_best, leave = span, -1
            if math.isinf(t_best):
                return UNBOUNDED

            self.degenerate_streak = self.degenerate_streak + 1 if t_best <= FEAS_TOL else 0
            if leave < 0:
                # bound flip, no basis change
                self.status[q] = AT_UP if self.status[q] == AT_LO else AT_LO
                self.iterations += 1
            else:
                out = int(self.basis[leave])
                self.status[out] = leave_side
                self._pivot(leave, q, w)
            self.recompute_xb()

    # -- dual simplex --------------------------------------------------------

    def dual(self, costs: np.ndarray, iter_cap: int | None) -> str:
        """Dual iterations from a dual-feasible basis until primal feasible.

        Returns OPTIMAL, INFEASIBLE, or ITERATION_LIMIT when the cap binds.
        """
        bland_after = 3 * (self.m + self._n_total())
        hard_limit = 50 * (self.m + self._n_total()) + 10000
        steps = 0
        stall = 0
        if self.m == 0:
            return OPTIMAL
        while True:
            lo_b = self.lo[self.basis]
            hi_b = self.hi[self.basis]
            viol_lo = lo_b - self.xb
            viol_hi = self.xb - hi_b
            viol = np.maximum(viol_lo, viol_hi)
            r = int(np.argmax(viol))
            if viol[r] <= FEAS_TOL:
                return OPTIMAL
            if iter_cap is not None and self.iterations >= iter_cap:
                return ITERATION_LIMIT
            steps += 1
            if steps > hard_limit:
                raise SimplexError("dual simplex exceeded the safety iteration limit")
            below = viol_lo[r] > viol_hi[r]

            d = self.reduced_costs(costs)
            alpha = self._at_dot(self.binv[r, :].copy())
            if below:
                # leaving variable exits at its lower bound
                ok_lo = ((self.status == AT_LO) | (self.status == FREE)) & (alpha < -PIVOT_TOL)
                ok_up = (self.status == AT_UP) & (alpha > PIVOT_TOL)
            else:
                ok_lo = ((self.status == AT_LO) | (self.status == FREE)) & (alpha > PIVOT_TOL)
                ok_up = (self.status == AT_UP) & (alpha < -PIVOT_TOL)
            cand = np.flatnonzero(ok_lo | ok_up)
            if cand.size == 0:
                return INFEASIBLE
            ratios = np.abs(d[cand] / alpha[cand])
            best = ratios.min()
            ties = cand[np.flatnonzero(ratios <= best + 1e-9)]
            if self.degenerate_streak >= bland_after:
                q = int(ties[0])
            else:
                q = int(ties[np.argmax(np.abs(alpha[ties]))])

            self.degenerate_streak = self.degenerate_streak + 1 if best <= 1e-12 else 0
            old_infeas = float(np.maximum(viol, 0.0).sum())
            out = int(self.basis[r])
            self.status[out] = AT_LO if below else AT_UP
            w = self.binv @ self._column(q)
            self._pivot(r, q, w)
            self.recompute_xb()
            # stall guard: no primal progress over many degenerate pivots
            lo_b = self.lo[self.basis]
            hi_b = self.hi[self.basis]
            new_infeas = float(
                np.maximum(np.maximum(lo_b - self.xb, self.xb - hi_b), 0.0).sum()
            )
            stall = stall + 1 if new_infeas >= old_infeas - 1e-12 else 0
            if stall > hard_limit:
                raise SimplexError("dual simplex stalled")

    # -- phase 1 -------------------------------------------------------------

    def install_start_basis(self) -> None:
        n = self.comp.n
        for j in range(n):
            if math.isfinite(self.lo[j]):
                self.status[j] = AT_LO
            elif math.isfinite(self.hi[j]):
                self.status[j] = AT_UP
            else:
                self.status[j] = FREE
        self.status[n:] = BASIC
        self.basis = np.arange(n, self.ncols, dtype=np.int64)
        self.binv = np.eye(self.m)
        self.recompute_xb()

    def add_artificials(self) -> None:
        """Swap out-of-bound basic slacks for nonnegative artificials."""
        n = self.comp.n
        for i in range(self.m):
            s = n + i
            resid = self.xb[i]
            lo, hi = self.lo[s], self.hi[s]
            if lo - FEAS_TOL <= resid <= hi + FEAS_TOL:
                continue
            anchor = lo if resid < lo else hi
            side = AT_LO if resid < lo else AT_UP
            sign = 1.0 if resid - anchor > 0 else -1.0
            self.art_rows.append(i)
            self.art_signs.append(sign)
            self.status[s] = side
            self.basis[i] = self.ncols + len(self.art_rows) - 1
        if self.art_rows:
            k = len(self.art_rows)
            self.status = np.concatenate([self.status, np.full(k, BASIC, dtype=np.int8)])
            self.lo = np.concatenate([self.lo, np.zeros(k)])
            self.hi = np.concatenate([self.hi, np.full(k, math.inf)])
            self.refactorize()
            self.recompute_xb()

    def drive_out_artificials(self) -> None:
        for r in range(self.m):
            if self.basis[r] < self.ncols:
                continue
            alpha = self._at_dot(self.binv[r, :].copy())[: self.ncols]
            alpha[self.status[: self.ncols] == BASIC] = 0.0
            q = int(np.argmax(np.abs(alpha)))
            if abs(alpha[q]) < PIVOT_TOL:
                self.refactorize()
                alpha = self._at_dot(self.binv[r, :].copy())[: self.ncols]
                alpha[self.status[: self.ncols] == BASIC] = 0.0
                q = int(np.argmax(np.abs(alpha)))
                if abs(alpha[q]) < PIVOT_TOL:
                    raise SimplexError("cannot remove artificial from the basis")
            w = self.binv @ self._column(q)
            self._pivot(r, q, w)
        # all artificials nonbasic now; drop them
        self.status = self.status[: self.ncols]
        self.lo = self.lo[: self.ncols]
        self.hi = self.hi[: self.ncols]
        self.art_rows = []
        self.art_signs = []
        self.recompute_xb()

    # -- outcome assembly ------------------------------------------------------

    def snapshot(self) -> BasisSnapshot:
        return BasisSnapshot(self.basis.copy(), self.status.copy())

    def primal_point(self) -> tuple[float, ...]:
        x = self.nonbasic_point()[: self.ncols]
        x[self.basis] = self.xb
        return tuple(float(v) for v in x[: self.comp.n])


def _infeasible_outcome(iterations: int = 0) -> LpOutcome:
    return LpOutcome(INFEASIBLE, math.inf, math.inf, None, None, iterations)


def solve_root(view: LpView) -> LpOutcome:
    """Two-phase primal solve of the view from the all-slack basis."""
    if view.trivially_infeasible:
        return _infeasible_outcome()
    comp = _compiled(view.instance)
    w = _Worker(comp, view)
    w.install_start_basis()
    w.add_artificials()
    if w.art_rows:
        phase1 = np.zeros(w._n_total())
        phase1[w.ncols:] = 1.0
        status = w.primal(phase1)
        if status == UNBOUNDED:  # phase-1 objective is bounded below by zero
            raise SimplexError("phase-1 reported unbounded")
        if w.objective_value(phase1) > FEAS_TOL * max(1.0, float(np.abs(w.b).max(initial=0.0))):
            return _infeasible_outcome(w.iterations)
        w.drive_out_artificials()
    status = w.primal(w.c)
    if status == UNBOUNDED:
        return LpOutcome(UNBOUNDED, -math.inf, -math.inf, None, None, w.iterations)
    obj = w.objective_value(w.c)
    return LpOutcome(OPTIMAL, obj, obj, w.primal_point(), w.snapshot(), w.iterations)


def resolve_bound_change(
    parent: LpOutcome,
    view: LpView,
    var: int,
    new_bounds: tuple[float, float],
    iter_cap: int | None = None,
) -> LpOutcome:
    """Dual-simplex re-solve from the parent basis after one bound change.

    ``view`` must already carry the new bounds of ``var``; ``new_bounds`` is
    used for validation only.  With ``iter_cap`` the result may be an
    ITERATION_LIMIT outcome whose ``dual_bound`` is still a valid lower bound.
    """
    if parent.status != OPTIMAL or parent.basis is None:
        raise ContractError("parent outcome must be Optimal with a basis snapshot")
    lo, hi = new_bounds
    if not (view.lower[var] == lo and view.upper[var] == hi):
        raise ContractError("view bounds disagree with new_bounds")
    if view.trivially_infeasible:
        return _infeasible_outcome()
    comp = _compiled(view.instance)
    snap = parent.basis
    if snap.basis.shape[0] != comp.m or snap.status.shape[0] != comp.n + comp.m:
        raise ContractError("basis snapshot does not match the view dimensions")

    w = _Worker(comp, view)
    w.basis = snap.basis.copy()
    w.status = snap.status.copy()
    st = w.status[var]
    if st != BASIC:
        # nonbasic variable: its resting value follows the tightened side
        if st == AT_LO and not math.isfinite(w.lo[var]):
            raise ContractError("nonbasic variable rests on an infinite bound")
        if st == AT_UP and not math.isfinite(w.hi[var]):
            raise ContractError("nonbasic variable rests on an infinite bound")
    if snap._binv is None:
        cols = [w._column(j) for j in w.basis]
        bmat = np.column_stack(cols) if cols else np.zeros((0, 0))
        try:
            snap._binv = np.linalg.inv(bmat)
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular parent basis") from exc
    w.binv = snap._binv.copy()
    w.recompute_xb()

    status = w.dual(w.c, iter_cap)
    if status == INFEASIBLE:
        return _infeasible_outcome(w.iterations)
    obj = w.objective_value(w.c)
    if status == ITERATION_LIMIT:
        return LpOutcome(ITERATION_LIMIT, obj, obj, None, None, w.iterations)
    return LpOutcome(OPTIMAL, obj, obj, w.primal_point(), w.snapshot(), w.iterations)
