"""Linear model builder, reference MILP solver and MPS export."""

from .model import (EQ, GAP_LIMIT, GE, INFEASIBLE, LE, OPTIMAL, UNBOUNDED, MilpModel,
                    MilpSolution, ModelError, SolverError)
from .mps import write_mps
from .simplex import solve_lp
from .solve import SolveOptions, lp_relaxation, solve

__all__ = [
    "EQ", "GE", "LE", "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "GAP_LIMIT",
    "MilpModel", "MilpSolution", "ModelError", "SolverError", "SolveOptions",
    "solve", "lp_relaxation", "solve_lp", "write_mps",
]
