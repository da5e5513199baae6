"""Bounded-variable revised simplex used as the reference LP engine.

The problem ``min c'x  s.t.  row_lb <= A x <= row_ub,  lb <= x <= ub`` is put in
the form ``[A, -I] (x, w) = 0`` where the row activities ``w`` carry the row
bounds.  The slack basis ``B = -I`` is always a valid start; rows whose
activity lies outside its bounds get an artificial column and are repaired in
phase 1.

The basis inverse is kept as a dense LU factorization followed by a file of eta
columns (product form) and is refactorized every ``refactor`` pivots.  Pricing
is Dantzig's rule, switching to Bland's smallest-index rule after a run of
degenerate pivots to rule out cycling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .model import INFEASIBLE, OPTIMAL, UNBOUNDED, SolverError

AT_LB, AT_UB, FREE, BASIC = 0, 1, 2, 3


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int = 0


class _Simplex:
    def __init__(self, M, lb, ub, refactor, feas_tol, opt_tol, piv_tol, max_iter):
        self.M = M
        self.lb = lb
        self.ub = ub
        self.m = M.shape[0]
        self.refactor_every = refactor
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.piv_tol = piv_tol
        self.max_iter = max_iter
        self.iterations = 0

    # basis inverse ---------------------------------------------------------
    def factor(self):
        B = self.M[:, self.basis]
        try:
            self.lu = la.lu_factor(B, check_finite=False)
        except (la.LinAlgError, ValueError) as exc:
            raise SolverError(f"basis factorization failed: {exc}") from exc
        diag = np.abs(np.diag(self.lu[0]))
        if diag.size and diag.min() <= 1e-13 * max(1.0, diag.max()):
            raise SolverError("singular basis")
        self.etas: list[tuple[int, np.ndarray]] = []
        nb = self.state != BASIC
        rhs = -(self.M[:, nb] @ self.x[nb])
        self.x[self.basis] = self.ftran(rhs)

    def ftran(self, a):
        v = la.lu_solve(self.lu, a, check_finite=False)
        for r, eta in self.etas:
            vr = v[r]
            if vr != 0.0:
                v += eta * vr
        return v

    def btran(self, cb):
        v = np.array(cb, dtype=float)
        for r, eta in reversed(self.etas):
            v[r] += eta @ v
        return la.lu_solve(self.lu, v, trans=1, check_finite=False)

    # main loop -------------------------------------------------------------
    def run(self, cost) -> str:
        degenerate = 0
        while True:
            if self.iterations >= self.max_iter:
                raise SolverError("simplex iteration limit reached")
            if len(self.etas) >= self.refactor_every:
                self.factor()
            y = self.btran(cost[self.basis])
            d = cost - self.M.T @ y
            st = self.state
            movable = self.lb < self.ub
            elig = movable & (((st == AT_LB) & (d < -self.opt_tol))
                              | ((st == AT_UB) & (d > self.opt_tol))
                              | ((st == FREE) & (np.abs(d) > self.opt_tol)))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return OPTIMAL
            if degenerate > 30:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[q] < 0 else -1.0
            alpha = self.ftran(self.M[:, q])
            delta = -direction * alpha
            xb = self.x[self.basis]
            lbb = self.lb[self.basis]
            ubb = self.ub[self.basis]

            t_best, r_best = math.inf, -1
            dec = delta < -self.piv_tol
            inc = delta > self.piv_tol
            ratios = np.full(self.m, math.inf)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios[dec] = (xb[dec] - lbb[dec]) / -delta[dec]
                ratios[inc] = (ubb[inc] - xb[inc]) / delta[inc]
            ratios = np.maximum(ratios, 0.0)
            finite = np.isfinite(ratios)
            if finite.any():
                t_best = float(ratios[finite].min())
                ties = np.flatnonzero(finite & (ratios <= t_best + 1e-12))
                if degenerate > 30:
                    r_best = int(ties[np.argmin(self.basis[ties])])
                else:
                    r_best = int(ties[np.argmax(np.abs(delta[ties]))])
            t_flip = self.ub[q] - self.lb[q]
            if t_flip <= t_best:
                if not math.isfinite(t_flip):
                    return UNBOUNDED
                self.x[q] = self.ub[q] if direction > 0 else self.lb[q]
                self.state[q] = AT_UB if direction > 0 else AT_LB
                self.x[self.basis] = xb + delta * t_flip
                degenerate = 0
            else:
                t = t_best
                self.x[self.basis] = xb + delta * t
                self.x[q] += direction * t
                leave = int(self.basis[r_best])
                if delta[r_best] < 0:
                    self.x[leave], self.state[leave] = self.lb[leave], AT_LB
                else:
                    self.x[leave], self.state[leave] = self.ub[leave], AT_UB
                self.state[q] = BASIC
                self.basis[r_best] = q
                ar = alpha[r_best]
                eta = -alpha / ar
                eta[r_best] = 1.0 / ar - 1.0
                self.etas.append((r_best, eta))
                degenerate = degenerate + 1 if t <= 1e-12 else 0
            self.iterations += 1


def solve_lp(c, A, row_lb, row_ub, lb, ub, *, refactor: int = 50, feas_tol: float = 1e-9,
             opt_tol: float = 1e-9, piv_tol: float = 1e-9, max_iter: int = 100_000) -> LpResult:
    """Solve ``min c'x`` over row and column bounds.  Returns an :class:`LpResult`."""
    c = np.asarray(c, dtype=float)
    n = c.size
    A = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float).reshape(-1, n)
    m = A.shape[0]
    row_lb = np.asarray(row_lb, dtype=float)
    row_ub = np.asarray(row_ub, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if np.any(lb > ub + feas_tol) or np.any(row_lb > row_ub + feas_tol):
        return LpResult(INFEASIBLE, None, math.nan)

    if m == 0:
        x = np.where(c > 0, lb, np.where(c < 0, ub, np.where(np.isfinite(lb), lb,
                                                          np.where(np.isfinite(ub), ub, 0.0))))
        if not np.all(np.isfinite(x)):
            return LpResult(UNBOUNDED, None, -math.inf)
        return LpResult(OPTIMAL, x, float(c @ x))

    # nonbasic structurals start at a finite bound (or zero when free)
    x0 = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    st0 = np.where(np.isfinite(lb), AT_LB, np.where(np.isfinite(ub), AT_UB, FREE))
    act = A @ x0
    low = act < row_lb - feas_tol
    high = act > row_ub + feas_tol
    bad = np.flatnonzero(low | high)
    k = bad.size

    M = np.zeros((m, n + m + k))
    M[:, :n] = A
    M[:, n:n + m] = -np.eye(m)
    w0 = np.clip(act, row_lb, row_ub)
    resid = act - w0  # A x - w for the clipped w
    for j, i in enumerate(bad):
        M[i, n + m + j] = -np.sign(resid[i])
    N = n + m + k
    lb_all = np.concatenate([lb, row_lb, np.zeros(k)])
    ub_all = np.concatenate([ub, row_ub, np.full(k, math.inf)])

    s = _Simplex(M, lb_all, ub_all, refactor, feas_tol, opt_tol, piv_tol, max_iter)
    s.x = np.concatenate([x0, w0, np.abs(resid[bad])])
    s.state = np.concatenate([st0, np.full(m, BASIC), np.full(k, BASIC)]).astype(int)
    basis = np.arange(n, n + m)
    for j, i in enumerate(bad):
        s.state[n + i] = AT_LB if low[i] else AT_UB
        s.x[n + i] = row_lb[i] if low[i] else row_ub[i]
        basis[i] = n + m + j
    s.basis = basis
    s.factor()

    if k:
        cost1 = np.zeros(N)
        cost1[n + m:] = 1.0
        s.run(cost1)
        infeas = float(s.x[n + m:].sum())
        if infeas > feas_tol * max(1.0, np.abs(act).max(initial=0.0)):
            return LpResult(INFEASIBLE, None, math.nan, s.iterations)
        # pin artificials to zero; basic ones leave through degenerate pivots
        s.ub[n + m:] = 0.0
        s.x[n + m:][s.state[n + m:] != BASIC] = 0.0
        s.factor()

    cost2 = np.zeros(N)
    cost2[:n] = c
    status = s.run(cost2)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, None, -math.inf, s.iterations)
    s.factor()
    x = s.x[:n].copy()
    return LpResult(OPTIMAL, x, float(c @ x), s.iterations)
