import math

import pytest

from branchlab.generators import GenSpec, generate
from branchlab.model import make_instance
from branchlab.mps import MpsParseError, load_mps, write_mps

MINIMAL = """\
NAME tiny
ROWS
 N  obj
 L  c0
COLUMNS
    MARKER0  'MARKER'  'INTORG'
    x0  obj  3  c0  2
    x1  obj  1  c0  1
    MARKER1  'MARKER'  'INTEND'
RHS
    rhs  c0  4
BOUNDS
 BV bnd  x0
 BV bnd  x1
ENDATA
"""


def _write(tmp_path, text, name="m.mps"):
    path = tmp_path / name
    path.write_text(text)
    return path


def _row_as_dict(row):
    return (dict(zip(row.indices, row.coefs)), row.relation, row.rhs)


def assert_same_instance(a, b):
    assert a.sense == b.sense
    assert a.objective == b.objective
    assert a.var_lower == b.var_lower
    assert a.var_upper == b.var_upper
    assert a.var_kind == b.var_kind
    assert [_row_as_dict(r) for r in a.rows] == [_row_as_dict(r) for r in b.rows]


def test_minimal_fixture(tmp_path):
    inst = load_mps(_write(tmp_path, MINIMAL))
    assert inst.num_vars == 2
    assert inst.num_rows == 1
    assert inst.sense == "minimize"
    assert inst.var_kind == ("binary", "binary")
    assert inst.rows[0].rhs == 4.0
    # round-trips through our own writer
    out = tmp_path / "again.mps"
    write_mps(inst, out)
    assert_same_instance(load_mps(out), inst)


def test_objsense_max(tmp_path):
    text = MINIMAL.replace("NAME tiny\n", "NAME tiny\nOBJSENSE\n    MAX\n")
    assert load_mps(_write(tmp_path, text)).sense == "maximize"


def test_objsense_same_line(tmp_path):
    text = MINIMAL.replace("NAME tiny\n", "NAME tiny\nOBJSENSE MAXIMIZE\n")
    assert load_mps(_write(tmp_path, text)).sense == "maximize"


def test_general_integer_rejected(tmp_path):
    text = MINIMAL.replace(" BV bnd  x0\n", " UP bnd  x0  5\n")
    with pytest.raises(MpsParseError, match="general integer variable unsupported"):
        load_mps(_write(tmp_path, text))


def test_integer_defaults_are_binary(tmp_path):
    text = MINIMAL.replace(" BV bnd  x0\n", "").replace(" BV bnd  x1\n", "")
    inst = load_mps(_write(tmp_path, text))
    assert inst.var_kind == ("binary", "binary")


def test_parse_error_carries_line_number(tmp_path):
    text = MINIMAL.replace("    x0  obj  3  c0  2\n", "    x0  obj  three  c0  2\n")
    with pytest.raises(MpsParseError, match="line 7"):
        load_mps(_write(tmp_path, text))


def test_unknown_row_reference(tmp_path):
    text = MINIMAL.replace("    x1  obj  1  c0  1\n", "    x1  obj  1  nope  1\n")
    with pytest.raises(MpsParseError, match="unknown row"):
        load_mps(_write(tmp_path, text))


def test_missing_columns_section(tmp_path):
    text = "NAME x\nROWS\n N  obj\n L  c0\nRHS\n    rhs  c0  1\nENDATA\n"
    with pytest.raises(MpsParseError, match="COLUMNS"):
        load_mps(_write(tmp_path, text))


def test_ranges_rejected(tmp_path):
    text = MINIMAL.replace("BOUNDS\n", "RANGES\n    rng  c0  1\nBOUNDS\n")
    with pytest.raises(MpsParseError, match="RANGES"):
        load_mps(_write(tmp_path, text))


def test_continuous_bounds_round_trip(tmp_path):
    inst = make_instance(
        "mix", "maximize", [1.25, -2.0, 3.0, 0.5],
        [0.0, -math.inf, -1.5, 2.0],
        [1.0, math.inf, math.inf, 2.0],
        ["binary", "continuous", "continuous", "continuous"],
        [([(0, 1.0), (1, 2.5)], "<=", 3.0), ([(2, 1.0), (3, -1.0)], "=", 0.75)],
    )
    path = tmp_path / "mix.mps"
    write_mps(inst, path)
    assert_same_instance(load_mps(path), inst)


def test_load_write_load_idempotent_on_generated(tmp_path):
    # field-wise equality up to coefficient order, across varied structures
    specs = [
        GenSpec("mdk_small", 1, {"n": 12, "m": 5}),
        GenSpec("lotsizing", 2, {"n": 4}),
        GenSpec("portfolio_ccp", 3, {"n": 3, "m": 6, "k": 2}),
    ]
    for spec in specs:
        inst = generate(spec)
        p1 = tmp_path / f"{inst.name}.mps"
        write_mps(inst, p1)
        first = load_mps(p1)
        p2 = tmp_path / f"{inst.name}-2.mps"
        write_mps(first, p2)
        assert_same_instance(load_mps(p2), first)
        assert_same_instance(first, inst)
