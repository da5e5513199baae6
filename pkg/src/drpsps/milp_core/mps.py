"""Fixed-format MPS export, for cross-checking models with an outside solver."""

from __future__ import annotations

import math
from pathlib import Path

from .model import EQ, GE, LE, MilpModel

_ROW_TYPE = {LE: "L", GE: "G", EQ: "E"}


def _compact(s: str) -> str:
    # "1e-05" -> "1e-5", "0.25" -> ".25": each saved character buys a digit
    mant, _, exp = s.partition("e")
    if mant.startswith("0."):
        mant = mant[1:]
    elif mant.startswith("-0."):
        mant = "-" + mant[2:]
    if exp:
        sign = "-" if exp[0] == "-" else ""
        exp = "e" + sign + exp.lstrip("+-").lstrip("0")
    return mant + exp


def _num(v: float) -> str:
    """Most precise rendering that fits the 12-character numeric field.

    Fixed format caps the field, so coefficients keep 7 to 12 significant
    digits depending on sign and exponent.
    """
    if v == int(v) and abs(v) < 1e11:
        return str(int(v))
    for digits in range(12, 0, -1):
        s = _compact(f"{v:.{digits}g}")
        if len(s) <= 12:
            return s
    raise ValueError(f"cannot fit {v!r} in an MPS field")


def _line(f1: str, f2: str, f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    out = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        out += f"   {f5:<8}  {f6:>12}"
    return out.rstrip()


def _short_names(names: list[str], prefix: str) -> list[str]:
    if all(len(n) <= 8 and " " not in n and n for n in names) and len(set(names)) == len(names):
        return list(names)
    width = 7
    return [f"{prefix}{i:0{width}d}" for i in range(len(names))]


def write_mps(model: MilpModel, path: str | Path, objective_name: str = "OBJ") -> None:
    """Write ``model`` in fixed MPS format.

    Names longer than eight characters are replaced by positional ones
    (``C0000001``, ``R0000001``).  Integer columns sit between
    ``MARKER INTORG/INTEND`` lines and 0-1 columns are flagged ``BV``.
    A nonzero objective constant goes into the RHS of the objective row with the
    sign flipped, which is how common readers store an objective offset.
    """
    cols = _short_names(model.var_names, "C")
    rows = _short_names(model.row_names, "R")
    entries: list[list[tuple[str, float]]] = [[] for _ in range(model.n_vars)]
    for j, c in enumerate(model.obj):
        if c != 0.0:
            entries[j].append((objective_name, c))
    for i in range(model.n_rows):
        idx, val = model.row(i)
        for j, a in zip(idx, val):
            if a != 0.0:
                entries[int(j)].append((rows[i], float(a)))

    out = [f"NAME          {model.name[:8] or 'MODEL'}", "ROWS", _line("N", objective_name)]
    out += [_line(_ROW_TYPE[s], r) for s, r in zip(model.row_sense, rows)]

    out.append("COLUMNS")
    in_int = False
    marker = 0
    for j in range(model.n_vars):
        if model.integer[j] and not in_int:
            out.append(_line("", f"M{marker:07d}", "'MARKER'", "", "'INTORG'"))
            in_int = True
        elif not model.integer[j] and in_int:
            out.append(_line("", f"M{marker:07d}", "'MARKER'", "", "'INTEND'"))
            marker += 1
            in_int = False
        ent = entries[j] or [(objective_name, 0.0)]
        for k in range(0, len(ent), 2):
            pair = ent[k:k + 2]
            if len(pair) == 2:
                out.append(_line("", cols[j], pair[0][0], _num(pair[0][1]),
                                 pair[1][0], _num(pair[1][1])))
            else:
                out.append(_line("", cols[j], pair[0][0], _num(pair[0][1])))
    if in_int:
        out.append(_line("", f"M{marker:07d}", "'MARKER'", "", "'INTEND'"))

    out.append("RHS")
    if model.obj_constant != 0.0:
        out.append(_line("", "RHS", objective_name, _num(-model.obj_constant)))
    for i, r in enumerate(rows):
        if model.row_rhs[i] != 0.0:
            out.append(_line("", "RHS", r, _num(model.row_rhs[i])))

    out.append("BOUNDS")
    for j, c in enumerate(cols):
        lo, hi = model.lb[j], model.ub[j]
        if model.integer[j] and lo == 0.0 and hi == 1.0:
            out.append(_line("BV", "BND", c))
            continue
        if lo == hi:
            out.append(_line("FX", "BND", c, _num(lo)))
            continue
        if lo == -math.inf and hi == math.inf:
            out.append(_line("FR", "BND", c))
            continue
        if lo == -math.inf:
            out.append(_line("MI", "BND", c))
        elif lo != 0.0 or model.integer[j]:
            out.append(_line("LO", "BND", c, _num(lo)))
        if hi != math.inf:
            out.append(_line("UP", "BND", c, _num(hi)))
        elif model.integer[j]:
            # some readers default integer columns to [0, 1]; make +inf explicit
            out.append(_line("PL", "BND", c))
    out.append("ENDATA")
    Path(path).write_text("\n".join(out) + "\n")
