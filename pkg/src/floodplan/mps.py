"""MPS export/import for built instances.

The writer emits the classic section layout (NAME / ROWS / COLUMNS with
INTORG-INTEND integrality markers / RHS / BOUNDS / ENDATA) with generated
8-character-safe names: row i becomes ``R<i>``, column j becomes ``C<j>``,
and the objective row is ``OBJ``.  Numeric fields use Python's shortest
exact float representation so a write/read round trip reproduces every
coefficient bit-for-bit; when that representation is longer than the
traditional 12-character field the line simply grows, which every
tokenising reader (including ours) accepts.

The reader parses the same dialect back into a :class:`MilpInstance`
(generated names, role ``imported``), enough to re-solve or cross-check
the model with an independent solver.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .milp import EQUAL, GREATER, LESS, LinearConstraint, MilpInstance, VarCatalog

_SENSE_TO_TYPE = {LESS: "L", GREATER: "G", EQUAL: "E"}
_TYPE_TO_SENSE = {v: k for k, v in _SENSE_TO_TYPE.items()}


def _num(v: float) -> str:
    """Shortest decimal string that round-trips the double exactly."""
    return repr(float(v))


def write_mps(instance: MilpInstance, path: str | Path, *, name: str = "FLOODPLAN") -> dict:
    """Write ``instance`` to ``path``; returns the generated-name maps
    ``{"rows": {mps: original}, "columns": {mps: original}}``."""
    path = Path(path)
    cat = instance.catalog
    col_name = {j: f"C{j + 1}" for j in range(len(cat))}
    row_name = {i: f"R{i + 1}" for i in range(len(instance.constraints))}

    # column-major entries, constraint rows in file order then implicit OBJ
    entries: list[list[tuple[str, float]]] = [[] for _ in range(len(cat))]
    for i, con in enumerate(instance.constraints):
        for j, coef in con.coeffs:
            entries[j].append((row_name[i], coef))
    for j, coef in enumerate(instance.objective):
        if coef != 0.0:
            entries[j].append(("OBJ", float(coef)))

    lines: list[str] = [f"NAME          {name}"]
    lines.append("ROWS")
    lines.append(" N  OBJ")
    for i, con in enumerate(instance.constraints):
        lines.append(f" {_SENSE_TO_TYPE[con.sense]}  {row_name[i]}")

    lines.append("COLUMNS")
    in_integer = False
    marker_count = 0
    for j in range(len(cat)):
        want_integer = cat[j].is_binary
        if want_integer != in_integer:
            marker_count += 1
            tag = "INTORG" if want_integer else "INTEND"
            lines.append(f"    M{marker_count:<9}'MARKER'                 '{tag}'")
            in_integer = want_integer
        cname = col_name[j]
        col_entries = entries[j] or [("OBJ", 0.0)]
        for rname, coef in col_entries:
            lines.append(f"    {cname:<10}{rname:<10}{_num(coef)}")
    if in_integer:
        marker_count += 1
        lines.append(f"    M{marker_count:<9}'MARKER'                 'INTEND'")

    lines.append("RHS")
    for i, con in enumerate(instance.constraints):
        if con.rhs != 0.0:
            lines.append(f"    RHS       {row_name[i]:<10}{_num(con.rhs)}")

    lines.append("BOUNDS")
    for j in range(len(cat)):
        v = cat[j]
        cname = col_name[j]
        if v.is_binary:
            lines.append(f" BV BND       {cname}")
            continue
        lo, up = v.lower, v.upper
        if lo == up:
            lines.append(f" FX BND       {cname:<10}{_num(lo)}")
            continue
        if math.isinf(lo):
            lines.append(f" MI BND       {cname}")
        elif lo != 0.0:
            lines.append(f" LO BND       {cname:<10}{_num(lo)}")
        if math.isinf(up):
            if math.isinf(lo):
                lines.append(f" PL BND       {cname}")
        else:
            lines.append(f" UP BND       {cname:<10}{_num(up)}")

    lines.append("ENDATA")
    path.write_text("\n".join(lines) + "\n")
    return {
        "rows": {row_name[i]: c.name for i, c in enumerate(instance.constraints)},
        "columns": {col_name[j]: cat[j].name for j in range(len(cat))},
    }


def read_mps(path: str | Path) -> MilpInstance:
    """Parse a file produced by :func:`write_mps` (or any tokenisable
    single-objective MPS without RANGES) into a :class:`MilpInstance`."""
    path = Path(path)
    section = None
    obj_row: str | None = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    col_order: list[str] = []
    col_pos: dict[str, int] = {}
    col_binary: dict[str, bool] = {}
    col_entries: dict[str, list[tuple[str, float]]] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, list[float | None]] = {}  # [lo, up]; None = unset
    in_integer = False

    for raw in path.read_text().splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0].upper()
            if section == "ENDATA":
                break
            continue
        tok = raw.split()
        if section == "ROWS":
            rtype, rname = tok[0].upper(), tok[1]
            if rtype == "N":
                if obj_row is None:
                    obj_row = rname
                continue
            if rtype not in _TYPE_TO_SENSE:
                raise ValueError(f"unknown row type {rtype!r} in {path}")
            row_sense[rname] = _TYPE_TO_SENSE[rtype]
            row_order.append(rname)
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                flag = tok[2].strip("'").upper()
                in_integer = flag == "INTORG"
                continue
            cname = tok[0]
            if cname not in col_pos:
                col_pos[cname] = len(col_order)
                col_order.append(cname)
                col_binary[cname] = in_integer
                col_entries[cname] = []
            pairs = tok[1:]
            if len(pairs) % 2:
                raise ValueError(f"odd COLUMNS record in {path}: {raw!r}")
            for rname, val in zip(pairs[::2], pairs[1::2]):
                col_entries[cname].append((rname, float(val)))
        elif section == "RHS":
            pairs = tok[1:]
            for rname, val in zip(pairs[::2], pairs[1::2]):
                rhs[rname] = float(val)
        elif section == "RANGES":
            raise ValueError("RANGES sections are not supported")
        elif section == "BOUNDS":
            btype = tok[0].upper()
            cname = tok[2]
            if cname not in col_pos:
                raise ValueError(f"bound on unknown column {cname!r} in {path}")
            bd = bounds.setdefault(cname, [None, None])
            if btype == "BV":
                col_binary[cname] = True
                bd[0], bd[1] = 0.0, 1.0
            elif btype == "FR":
                bd[0], bd[1] = -math.inf, math.inf
            elif btype == "MI":
                bd[0] = -math.inf
            elif btype == "PL":
                bd[1] = math.inf
            elif btype in ("LO", "UP", "FX"):
                val = float(tok[3])
                if btype in ("LO", "FX"):
                    bd[0] = val
                if btype in ("UP", "FX"):
                    bd[1] = val
            else:
                raise ValueError(f"unknown bound type {btype!r} in {path}")

    if obj_row is None:
        raise ValueError(f"{path} declares no objective (type N) row")

    cat = VarCatalog()
    for cname in col_order:
        bd = bounds.get(cname, [None, None])
        lo = 0.0 if bd[0] is None else bd[0]
        up = math.inf if bd[1] is None else bd[1]
        if col_binary[cname] and bounds.get(cname, [None, None])[1] is None:
            up = 1.0
        cat.add(cname, lo, up, binary=col_binary[cname], role="imported")

    objective = np.zeros(len(cat))
    row_terms: dict[str, list[tuple[int, float]]] = {r: [] for r in row_order}
    for cname in col_order:
        j = cat.index(cname)
        for rname, val in col_entries[cname]:
            if rname == obj_row:
                objective[j] = val
            elif rname in row_terms:
                row_terms[rname].append((j, val))
            else:
                raise ValueError(f"entry references unknown row {rname!r} in {path}")

    constraints = [
        LinearConstraint(
            name=rname,
            family="imported",
            coeffs=tuple(row_terms[rname]),
            sense=row_sense[rname],
            rhs=rhs.get(rname, 0.0),
        )
        for rname in row_order
    ]
    return MilpInstance(catalog=cat, constraints=constraints, objective=objective, big_m=0.0)
