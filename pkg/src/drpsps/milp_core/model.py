"""Sparse linear model container shared by every formulation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = "<=", "==", ">="
_SENSES = {"<=": LE, "<": LE, "L": LE, "==": EQ, "=": EQ, "E": EQ, ">=": GE, ">": GE, "G": GE}

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
GAP_LIMIT = "gap_limit"


class ModelError(ValueError):
    pass


class SolverError(RuntimeError):
    """Raised when a solve fails for numerical reasons rather than by proof."""


@dataclass
class MilpModel:
    """Minimisation model built incrementally through :meth:`add_var` and
    :meth:`add_constraint`.  Variables and rows are addressed by integer index."""

    name: str = "model"
    var_names: list[str] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    integer: list[bool] = field(default_factory=list)
    obj: list[float] = field(default_factory=list)
    obj_constant: float = 0.0
    row_names: list[str] = field(default_factory=list)
    row_sense: list[str] = field(default_factory=list)
    row_rhs: list[float] = field(default_factory=list)
    _row_idx: list[np.ndarray] = field(default_factory=list, repr=False)
    _row_val: list[np.ndarray] = field(default_factory=list, repr=False)
    _names: set = field(default_factory=set, repr=False)

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    @property
    def n_integer(self) -> int:
        return sum(self.integer)

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf,
                integer: bool = False, obj: float = 0.0) -> int:
        if name in self._names:
            raise ModelError(f"duplicate name {name!r}")
        if not lb <= ub:
            raise ModelError(f"variable {name!r}: lb {lb} > ub {ub}")
        self._names.add(name)
        self.var_names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.integer.append(bool(integer))
        self.obj.append(float(obj))
        return len(self.var_names) - 1

    def add_binary(self, name: str, obj: float = 0.0) -> int:
        return self.add_var(name, 0.0, 1.0, integer=True, obj=obj)

    def add_constraint(self, name: str, terms: Mapping[int, float] | Iterable[tuple[int, float]],
                       sense: str, rhs: float) -> int:
        """Add ``sum(coef * x[idx]) <sense> rhs``.  Repeated indices are summed."""
        if name in self._names:
            raise ModelError(f"duplicate name {name!r}")
        try:
            sense = _SENSES[sense]
        except KeyError:
            raise ModelError(f"constraint {name!r}: bad sense {sense!r}") from None
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[int, float] = {}
        for j, a in items:
            j = int(j)
            if not 0 <= j < self.n_vars:
                raise ModelError(f"constraint {name!r} references unknown variable {j}")
            acc[j] = acc.get(j, 0.0) + float(a)
        self._names.add(name)
        self.row_names.append(name)
        self.row_sense.append(sense)
        self.row_rhs.append(float(rhs))
        self._row_idx.append(np.fromiter(acc.keys(), dtype=np.int64, count=len(acc)))
        self._row_val.append(np.fromiter(acc.values(), dtype=float, count=len(acc)))
        return len(self.row_names) - 1

    def set_obj(self, j: int, coef: float) -> None:
        self.obj[j] = float(coef)

    def add_obj(self, j: int, coef: float) -> None:
        self.obj[j] += float(coef)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self._row_idx[i], self._row_val[i]

    def var_index(self, name: str) -> int:
        return self.var_names.index(name)

    def validate(self) -> None:
        if len(self._names) != self.n_vars + self.n_rows:
            raise ModelError("variable and constraint names overlap")
        for j in range(self.n_vars):
            if not self.lb[j] <= self.ub[j]:
                raise ModelError(f"variable {self.var_names[j]!r}: lb > ub")

    def arrays(self) -> "ModelArrays":
        """Column/row data in solver-friendly form (CSR matrix, row ranges)."""
        m, n = self.n_rows, self.n_vars
        counts = [len(ix) for ix in self._row_idx]
        rows = np.repeat(np.arange(m), counts)
        cols = np.concatenate(self._row_idx) if m else np.zeros(0, dtype=np.int64)
        vals = np.concatenate(self._row_val) if m else np.zeros(0)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
        rhs = np.array(self.row_rhs, dtype=float)
        sense = np.array(self.row_sense, dtype=object)
        row_lb = np.where(sense == LE, -np.inf, rhs) if m else np.zeros(0)
        row_ub = np.where(sense == GE, np.inf, rhs) if m else np.zeros(0)
        return ModelArrays(
            c=np.array(self.obj, dtype=float), A=A,
            row_lb=np.asarray(row_lb, dtype=float), row_ub=np.asarray(row_ub, dtype=float),
            lb=np.array(self.lb, dtype=float), ub=np.array(self.ub, dtype=float),
            integer=np.array(self.integer, dtype=bool), obj_constant=self.obj_constant,
        )


@dataclass
class ModelArrays:
    c: np.ndarray
    A: sp.csr_matrix
    row_lb: np.ndarray
    row_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    obj_constant: float = 0.0

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x) + self.obj_constant

    def max_violation(self, x: np.ndarray) -> float:
        act = self.A @ x if self.A.shape[0] else np.zeros(0)
        viol = [0.0]
        if act.size:
            viol.append(float(np.max(np.maximum(self.row_lb - act, 0.0))))
            viol.append(float(np.max(np.maximum(act - self.row_ub, 0.0))))
        if x.size:
            viol.append(float(np.max(np.maximum(self.lb - x, 0.0))))
            viol.append(float(np.max(np.maximum(x - self.ub, 0.0))))
        return max(viol)


@dataclass
class MilpSolution:
    status: str
    objective: float = math.nan
    x: np.ndarray | None = None
    bound: float = math.nan
    gap: float = math.nan
    nodes: int = 0
    incumbents: list[float] = field(default_factory=list)
    backend: str = ""
    var_names: list[str] | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL or (self.status == GAP_LIMIT and self.x is not None)

    def value(self, ref: int | str) -> float:
        if self.x is None:
            raise SolverError(f"no solution values (status {self.status})")
        if isinstance(ref, str):
            ref = self.var_names.index(ref)  # type: ignore[union-attr]
        return float(self.x[ref])

    def values(self, idx) -> np.ndarray:
        if self.x is None:
            raise SolverError(f"no solution values (status {self.status})")
        return self.x[np.asarray(idx, dtype=np.int64)]
