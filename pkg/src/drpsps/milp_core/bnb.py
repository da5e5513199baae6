"""Reference branch-and-bound.

Most-fractional branching (ties to the lowest index), best-bound node
selection with depth-first plunging, no cuts and no presolve beyond rounding
integer bounds.  Every choice is deterministic, so the same model and options
give the same incumbent sequence.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .model import GAP_LIMIT, INFEASIBLE, OPTIMAL, UNBOUNDED, ModelArrays, SolverError
from .simplex import LpResult, solve_lp


@dataclass
class BnbResult:
    status: str
    x: np.ndarray | None
    objective: float
    bound: float
    nodes: int
    incumbents: list[float]


# HiGHS defaults (1e-7) accept degenerate vertices that are off by that much in the
# objective, which is visible on the robust blocks with tiny kappa
LP_OPTIONS = {"dual_feasibility_tolerance": 1e-10, "primal_feasibility_tolerance": 1e-10}


def highs_lp(c, A, row_lb, row_ub, lb, ub) -> LpResult:
    """LP through scipy's HiGHS wrapper, used when the model is too big for the
    dense reference simplex."""
    eq = row_lb == row_ub
    up = ~eq & np.isfinite(row_ub)
    lo = ~eq & np.isfinite(row_lb)
    A_ub = sp.vstack([A[np.flatnonzero(up)], -A[np.flatnonzero(lo)]]).tocsr()
    b_ub = np.concatenate([row_ub[up], -row_lb[lo]])
    kwargs = {}
    if A_ub.shape[0]:
        kwargs.update(A_ub=A_ub, b_ub=b_ub)
    if eq.any():
        kwargs.update(A_eq=A[np.flatnonzero(eq)], b_eq=row_lb[eq])
    bounds = np.column_stack([np.where(np.isfinite(lb), lb, -np.inf),
                              np.where(np.isfinite(ub), ub, np.inf)])
    res = linprog(c, bounds=bounds, method="highs", options=LP_OPTIONS, **kwargs)
    if res.status == 0:
        return LpResult(OPTIMAL, res.x, float(res.fun), int(res.nit))
    if res.status == 2:
        # HiGHS folds "infeasible or unbounded" into one code; a zero objective tells them apart
        if np.any(c) and linprog(np.zeros_like(c), bounds=bounds, method="highs",
                                 **kwargs).status == 0:
            return LpResult(UNBOUNDED, None, -math.inf)
        return LpResult(INFEASIBLE, None, math.nan)
    if res.status == 3:
        return LpResult(UNBOUNDED, None, -math.inf)
    raise SolverError(f"HiGHS LP failed: {res.message}")


def branch_and_bound(arr: ModelArrays, *, int_tol: float = 1e-6, gap_tol: float = 1e-6,
                     node_limit: int = 100_000, time_limit: float | None = None,
                     lp_engine: str = "simplex") -> BnbResult:
    lp = solve_lp if lp_engine == "simplex" else highs_lp
    A = arr.A if lp_engine != "simplex" else arr.A.toarray()
    ints = np.flatnonzero(arr.integer)
    lb0 = arr.lb.copy()
    ub0 = arr.ub.copy()
    lb0[ints] = np.ceil(lb0[ints] - int_tol)
    ub0[ints] = np.floor(ub0[ints] + int_tol)
    t0 = time.monotonic()

    def relax(lb, ub) -> LpResult:
        if np.any(lb > ub):
            return LpResult(INFEASIBLE, None, math.nan)
        return lp(arr.c, A, arr.row_lb, arr.row_ub, lb, ub)

    best_x: np.ndarray | None = None
    best = math.inf
    incumbents: list[float] = []
    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = []
    counter = 0
    nodes = 0
    limit_hit = False

    root = relax(lb0, ub0)
    nodes += 1
    if root.status == INFEASIBLE:
        return BnbResult(INFEASIBLE, None, math.nan, math.nan, nodes, incumbents)
    if root.status == UNBOUNDED:
        return BnbResult(UNBOUNDED, None, -math.inf, -math.inf, nodes, incumbents)
    current: tuple[np.ndarray, np.ndarray, LpResult] | None = (lb0, ub0, root)

    while True:
        if current is None:
            # discard nodes that can no longer improve, then take the best bound
            while heap and heap[0][0] >= best - gap_tol:
                heapq.heappop(heap)
            if not heap:
                break
            if nodes >= node_limit or (time_limit is not None
                                       and time.monotonic() - t0 > time_limit):
                limit_hit = True
                break
            _, _, lb, ub = heapq.heappop(heap)
            res = relax(lb, ub)
            nodes += 1
            current = (lb, ub, res)
        lb, ub, res = current
        current = None
        if res.status == INFEASIBLE:
            continue
        if res.status == UNBOUNDED:
            raise SolverError("unbounded relaxation below the root")
        if res.objective >= best - gap_tol:
            continue
        xv = res.x
        frac = np.abs(xv[ints] - np.round(xv[ints]))
        if ints.size == 0 or frac.max() <= int_tol:
            x = xv.copy()
            x[ints] = np.round(x[ints])
            best_x, best = x, float(arr.c @ x)
            incumbents.append(best + arr.obj_constant)
            continue
        # most fractional, lowest index on ties
        dist = np.abs(frac - 0.5)
        k = int(np.flatnonzero(dist <= dist.min() + 1e-12)[0])
        j = int(ints[k])
        v = xv[j]
        down_ub = ub.copy()
        down_ub[j] = math.floor(v)
        up_lb = lb.copy()
        up_lb[j] = math.ceil(v)
        children = [(lb, down_ub), (up_lb, ub)]
        if v - math.floor(v) >= 0.5:
            children.reverse()
        dive, park = children
        counter += 1
        heapq.heappush(heap, (res.objective, counter, park[0], park[1]))
        if nodes >= node_limit or (time_limit is not None and time.monotonic() - t0 > time_limit):
            limit_hit = True
            heapq.heappush(heap, (res.objective, counter + 1, dive[0], dive[1]))
            break
        child = relax(*dive)
        nodes += 1
        current = (dive[0], dive[1], child)

    open_bound = min((h[0] for h in heap), default=math.inf)
    if limit_hit:
        bound = min(open_bound, best)
        return BnbResult(GAP_LIMIT, best_x, best + arr.obj_constant if best_x is not None
                         else math.nan, bound + arr.obj_constant, nodes, incumbents)
    if best_x is None:
        return BnbResult(INFEASIBLE, None, math.nan, math.nan, nodes, incumbents)
    return BnbResult(OPTIMAL, best_x, best + arr.obj_constant, best + arr.obj_constant,
                     nodes, incumbents)
