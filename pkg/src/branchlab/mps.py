"""Free-format MPS reader and writer for mixed-binary instances.

Supported sections: NAME, OBJSENSE (optional), ROWS, COLUMNS (with
INTORG/INTEND markers), RHS, BOUNDS (optional), ENDATA.  Integer-marked
variables must end up with bounds {0, 1}; anything else is outside the
mixed-binary scope and rejected.
"""

from __future__ import annotations

import math

from .model import (
    BINARY,
    CONTINUOUS,
    EQ,
    GE,
    LE,
    MAXIMIZE,
    MINIMIZE,
    Instance,
    make_instance,
)

_SECTIONS = {"NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA"}


class MpsParseError(ValueError):
    """Malformed MPS content; message carries the offending line number."""

    def __init__(self, lineno: int, message: str) -> None:
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _is_section_header(line: str) -> bool:
    return not line[0].isspace()


def load_mps(path) -> Instance:
    """Parse a free-format MPS file into a validated :class:`Instance`."""
    name = ""
    sense = MINIMIZE
    obj_name: str | None = None
    row_order: list[str] = []
    row_relation: dict[str, str] = {}
    row_coefs: dict[str, dict[str, float]] = {}
    rhs: dict[str, float] = {}
    col_order: list[str] = []
    col_obj: dict[str, float] = {}
    col_is_int: dict[str, bool] = {}
    bounds: dict[str, list] = {}  # name -> [lo, hi, explicit flags]

    section = None
    in_integer_block = False
    expect_objsense_value = False

    with open(path) as fh:
        lines = fh.readlines()

    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        tokens = raw.split()
        if _is_section_header(raw):
            head = tokens[0].upper()
            if head not in _SECTIONS:
                raise MpsParseError(lineno, f"unknown section {tokens[0]!r}")
            if head == "RANGES":
                raise MpsParseError(lineno, "RANGES section is not supported")
            section = head
            expect_objsense_value = False
            if head == "NAME":
                name = tokens[1] if len(tokens) > 1 else ""
            elif head == "OBJSENSE":
                if len(tokens) > 1:
                    sense = _parse_sense(lineno, tokens[1])
                else:
                    expect_objsense_value = True
            elif head == "ENDATA":
                break
            continue

        if section == "OBJSENSE" and expect_objsense_value:
            sense = _parse_sense(lineno, tokens[0])
            expect_objsense_value = False
        elif section == "ROWS":
            if len(tokens) != 2:
                raise MpsParseError(lineno, "ROWS entries need a type and a name")
            rtype, rname = tokens[0].upper(), tokens[1]
            if rtype == "N":
                if obj_name is None:
                    obj_name = rname
                # further N rows are ignored free rows
            elif rtype in ("L", "G", "E"):
                row_order.append(rname)
                row_relation[rname] = {"L": LE, "G": GE, "E": EQ}[rtype]
                row_coefs[rname] = {}
            else:
                raise MpsParseError(lineno, f"unknown row type {tokens[0]!r}")
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                if tokens[2] == "'INTORG'":
                    in_integer_block = True
                elif tokens[2] == "'INTEND'":
                    in_integer_block = False
                else:
                    raise MpsParseError(lineno, f"unknown marker {tokens[2]!r}")
                continue
            if len(tokens) < 3 or len(tokens) % 2 == 0:
                raise MpsParseError(lineno, "COLUMNS entries need name/row/value groups")
            cname = tokens[0]
            if cname not in col_obj:
                col_order.append(cname)
                col_obj[cname] = 0.0
                col_is_int[cname] = in_integer_block
            for k in range(1, len(tokens), 2):
                rname, value = tokens[k], _parse_num(lineno, tokens[k + 1])
                if rname == obj_name:
                    col_obj[cname] = value
                elif rname in row_coefs:
                    row_coefs[rname][cname] = value
                else:
                    raise MpsParseError(lineno, f"unknown row {rname!r}")
        elif section == "RHS":
            if len(tokens) < 3 or len(tokens) % 2 == 0:
                raise MpsParseError(lineno, "RHS entries need set/row/value groups")
            for k in range(1, len(tokens), 2):
                rname, value = tokens[k], _parse_num(lineno, tokens[k + 1])
                if rname in row_relation:
                    rhs[rname] = value
                elif rname != obj_name:
                    raise MpsParseError(lineno, f"unknown row {rname!r}")
        elif section == "BOUNDS":
            _parse_bound(lineno, tokens, col_obj, bounds)
        elif section is None:
            raise MpsParseError(lineno, "data before any section header")

    if obj_name is None:
        raise MpsParseError(len(lines), "missing ROWS section or objective row")
    if not col_order:
        raise MpsParseError(len(lines), "missing COLUMNS section")

    objective, var_lower, var_upper, var_kind = [], [], [], []
    for cname in col_order:
        objective.append(col_obj[cname])
        is_int = col_is_int[cname]
        # integer default bounds are [0, 1]; continuous default [0, +inf)
        lo, hi = (0.0, 1.0) if is_int else (0.0, math.inf)
        if cname in bounds:
            blo, bhi = bounds[cname]
            lo = blo if blo is not None else lo
            hi = bhi if bhi is not None else hi
        if is_int:
            if (lo, hi) != (0.0, 1.0):
                raise MpsParseError(
                    0, f"general integer variable unsupported: {cname} has bounds [{lo}, {hi}]"
                )
            var_kind.append(BINARY)
        else:
            var_kind.append(CONTINUOUS)
        var_lower.append(lo)
        var_upper.append(hi)

    col_index = {c: j for j, c in enumerate(col_order)}
    rows = []
    for rname in row_order:
        sparse = [(col_index[c], v) for c, v in row_coefs[rname].items()]
        sparse.sort()
        rows.append((sparse, row_relation[rname], rhs.get(rname, 0.0)))

    return make_instance(
        name=name,
        sense=sense,
        objective=objective,
        var_lower=var_lower,
        var_upper=var_upper,
        var_kind=var_kind,
        rows=rows,
    )


def _parse_sense(lineno: int, token: str) -> str:
    token = token.upper()
    if token in ("MIN", "MINIMIZE"):
        return MINIMIZE
    if token in ("MAX", "MAXIMIZE"):
        return MAXIMIZE
    raise MpsParseError(lineno, f"unknown objective sense {token!r}")


def _parse_num(lineno: int, token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise MpsParseError(lineno, f"expected a number, got {token!r}") from None


def _parse_bound(lineno: int, tokens: list[str], col_obj: dict, bounds: dict) -> None:
    btype = tokens[0].upper()
    # two layouts: TYPE SET COL [VALUE] or TYPE COL [VALUE]
    needs_value = btype in ("UP", "LO", "FX", "UI", "LI")
    expected = 4 if needs_value else 3
    if len(tokens) == expected:
        cname = tokens[2]
    elif len(tokens) == expected - 1:
        cname = tokens[1]
    else:
        raise MpsParseError(lineno, "malformed BOUNDS entry")
    if cname not in col_obj:
        raise MpsParseError(lineno, f"unknown column {cname!r}")
    value = _parse_num(lineno, tokens[-1]) if needs_value else None
    lo, hi = bounds.get(cname, (None, None))
    if btype in ("UP", "UI"):
        hi = value
        if value < 0 and lo is None:
            lo = -math.inf
    elif btype in ("LO", "LI"):
        lo = value
    elif btype == "FX":
        lo = hi = value
    elif btype == "FR":
        lo, hi = -math.inf, math.inf
    elif btype == "MI":
        lo = -math.inf
    elif btype == "PL":
        hi = math.inf
    elif btype == "BV":
        lo, hi = 0.0, 1.0
    else:
        raise MpsParseError(lineno, f"unknown bound type {tokens[0]!r}")
    bounds[cname] = [lo, hi]


def write_mps(inst: Instance, path) -> None:
    """Write ``inst`` as free-format MPS, round-trippable by :func:`load_mps`."""
    var_names = [f"x{j}" for j in range(inst.num_vars)]
    row_names = [f"c{i}" for i in range(inst.num_rows)]
    rel_code = {LE: "L", GE: "G", EQ: "E"}

    # column-major view of the rows
    col_entries: list[list[tuple[str, float]]] = [[] for _ in range(inst.num_vars)]
    for i, row in enumerate(inst.rows):
        for j, c in zip(row.indices, row.coefs):
            col_entries[j].append((row_names[i], c))

    with open(path, "w") as fh:
        fh.write(f"NAME {inst.name}\n")
        if inst.sense == MAXIMIZE:
            fh.write("OBJSENSE\n    MAX\n")
        fh.write("ROWS\n N  obj\n")
        for i, row in enumerate(inst.rows):
            fh.write(f" {rel_code[row.relation]}  {row_names[i]}\n")
        fh.write("COLUMNS\n")
        in_int = False
        marker = 0
        for j, vname in enumerate(var_names):
            want_int = inst.var_kind[j] == BINARY
            if want_int != in_int:
                tag = "INTORG" if want_int else "INTEND"
                fh.write(f"    MARKER{marker}  'MARKER'  '{tag}'\n")
                marker += 1
                in_int = want_int
            entries = [("obj", inst.objective[j])] if inst.objective[j] != 0.0 else []
            entries.extend(col_entries[j])
            if not entries:
                entries = [("obj", 0.0)]  # keep the column declared
            for rname, value in entries:
                fh.write(f"    {vname}  {rname}  {value!r}\n")
        if in_int:
            fh.write(f"    MARKER{marker}  'MARKER'  'INTEND'\n")
        fh.write("RHS\n")
        for i, row in enumerate(inst.rows):
            if row.rhs != 0.0:
                fh.write(f"    rhs  {row_names[i]}  {row.rhs!r}\n")
        fh.write("BOUNDS\n")
        for j, vname in enumerate(var_names):
            lo, hi = inst.var_lower[j], inst.var_upper[j]
            if inst.var_kind[j] == BINARY:
                fh.write(f" BV bnd  {vname}\n")
                continue
            if lo == hi:
                fh.write(f" FX bnd  {vname}  {lo!r}\n")
                continue
            if math.isinf(lo):
                fh.write(f" MI bnd  {vname}\n")
            elif lo != 0.0:
                fh.write(f" LO bnd  {vname}  {lo!r}\n")
            if not math.isinf(hi):
                fh.write(f" UP bnd  {vname}  {hi!r}\n")
        fh.write("ENDATA\n")
