"""Solver front end: one ``solve`` call, two interchangeable backends.

``bnb`` is the in-house branch-and-bound over the reference simplex.  It is the
ground truth for small models.  ``highs`` hands the same arrays to HiGHS through
``scipy.optimize.milp`` and is what the planners use on full-size networks,
where a dense simplex is far too slow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .bnb import branch_and_bound, highs_lp
from .model import (GAP_LIMIT, INFEASIBLE, OPTIMAL, UNBOUNDED, MilpModel, MilpSolution,
                    SolverError)
from .simplex import solve_lp

BACKENDS = ("highs", "bnb")


@dataclass(frozen=True)
class SolveOptions:
    feas_tol: float = 1e-7
    int_tol: float = 1e-6
    gap_tol: float = 1e-6
    node_limit: int = 100_000
    time_limit: float | None = None
    backend: str = "highs"
    lp_engine: str = "simplex"  # LP engine for the bnb backend: "simplex" or "highs"
    rel_gap: float = 1e-9  # HiGHS only accepts a relative gap through scipy
    check: bool = True


def solve(model: MilpModel, opts: SolveOptions | None = None) -> MilpSolution:
    """Minimise ``model``.  Raises :class:`SolverError` on numerical failure."""
    opts = opts or SolveOptions()
    model.validate()
    arr = model.arrays()
    if opts.backend == "bnb":
        res = branch_and_bound(arr, int_tol=opts.int_tol, gap_tol=opts.gap_tol,
                               node_limit=opts.node_limit, time_limit=opts.time_limit,
                               lp_engine=opts.lp_engine)
        sol = MilpSolution(res.status, res.objective, res.x, res.bound,
                           abs(res.objective - res.bound) if res.x is not None else math.nan,
                           res.nodes, res.incumbents, "bnb", model.var_names)
    elif opts.backend == "highs":
        sol = _solve_highs(model, arr, opts)
    else:
        raise ValueError(f"unknown backend {opts.backend!r}; expected one of {BACKENDS}")
    if opts.check and sol.x is not None:
        _check(arr, sol, opts)
    return sol


def lp_relaxation(model: MilpModel, opts: SolveOptions | None = None) -> MilpSolution:
    """The continuous relaxation, solved by the same LP engine the backend uses."""
    opts = opts or SolveOptions()
    arr = model.arrays()
    if opts.backend == "bnb" and opts.lp_engine == "simplex":
        res = solve_lp(arr.c, arr.A, arr.row_lb, arr.row_ub, arr.lb, arr.ub)
    else:
        res = highs_lp(arr.c, arr.A, arr.row_lb, arr.row_ub, arr.lb, arr.ub)
    obj = res.objective + arr.obj_constant if res.x is not None else res.objective
    return MilpSolution(res.status, obj, res.x, obj, 0.0, 0, [], "lp", model.var_names)


def _solve_highs(model: MilpModel, arr, opts: SolveOptions) -> MilpSolution:
    n = arr.c.size
    options = {"mip_rel_gap": opts.rel_gap,
               "node_limit": opts.node_limit, "presolve": True}
    if opts.time_limit is not None:
        options["time_limit"] = opts.time_limit
    constraints = [LinearConstraint(arr.A, arr.row_lb, arr.row_ub)] if arr.A.shape[0] else []
    if n == 0:
        return MilpSolution(OPTIMAL, arr.obj_constant, np.zeros(0), arr.obj_constant, 0.0,
                            0, [], "highs", model.var_names)
    if not arr.integer.any():
        return _solve_highs_lp(model, arr)
    res = milp(arr.c, integrality=arr.integer.astype(int), bounds=Bounds(arr.lb, arr.ub),
               constraints=constraints, options=options)
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    bound = getattr(res, "mip_dual_bound", None)
    if res.status == 0:
        x = res.x.copy()
        ints = arr.integer
        x[ints] = np.round(x[ints])
        obj = arr.objective(x)
        b = obj if bound is None or not math.isfinite(bound) else bound + arr.obj_constant
        return MilpSolution(OPTIMAL, obj, x, b, abs(obj - b), nodes, [obj], "highs",
                            model.var_names)
    if res.status == 1:  # iteration, node or time limit
        if res.x is None:
            return MilpSolution(GAP_LIMIT, math.nan, None, math.nan, math.inf, nodes, [],
                                "highs", model.var_names)
        x = res.x.copy()
        obj = arr.objective(x)
        b = -math.inf if bound is None else bound + arr.obj_constant
        return MilpSolution(GAP_LIMIT, obj, x, b, abs(obj - b), nodes, [obj], "highs",
                            model.var_names)
    if res.status == 2:
        return MilpSolution(INFEASIBLE, math.nan, None, math.nan, math.nan, nodes, [], "highs",
                            model.var_names)
    if res.status == 3:
        return MilpSolution(UNBOUNDED, -math.inf, None, -math.inf, math.nan, nodes, [],
                            "highs", model.var_names)
    raise SolverError(f"HiGHS failed: {res.message}")


def _solve_highs_lp(model: MilpModel, arr) -> MilpSolution:
    res = highs_lp(arr.c, arr.A, arr.row_lb, arr.row_ub, arr.lb, arr.ub)
    if res.status == OPTIMAL:
        obj = arr.objective(res.x)
        return MilpSolution(OPTIMAL, obj, res.x, obj, 0.0, 0, [obj], "highs", model.var_names)
    obj = -math.inf if res.status == UNBOUNDED else math.nan
    return MilpSolution(res.status, obj, None, obj, math.nan, 0, [], "highs", model.var_names)


def _check(arr, sol: MilpSolution, opts: SolveOptions) -> None:
    x = sol.x
    scale = max(1.0, float(np.abs(x).max(initial=0.0)))
    viol = arr.max_violation(x)
    if sol.status == OPTIMAL and viol > 1e-5 * scale:
        raise SolverError(f"solution violates constraints by {viol:.3g}")
    frac = np.abs(x[arr.integer] - np.round(x[arr.integer]))
    if frac.size and frac.max() > opts.int_tol:
        raise SolverError("integer variable off integrality")


def with_backend(opts: SolveOptions | None, backend: str) -> SolveOptions:
    return replace(opts or SolveOptions(), backend=backend)
