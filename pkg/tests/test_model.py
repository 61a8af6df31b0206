import math

import numpy as np
import pytest

from branchlab.model import (
    Assignment,
    ModelError,
    check_solution,
    instance_from_dict,
    instance_to_dict,
    make_instance,
)

from _oracles import milp_brute_force


def knapsack():
    return make_instance(
        "knap", "maximize", [5, 4, 3], [0, 0, 0], [1, 1, 1],
        ["binary"] * 3, [([(0, 2), (1, 3), (2, 1)], "<=", 5)],
    )


def test_check_solution_feasible_optimal():
    inst = knapsack()
    chk = check_solution(inst, Assignment((1.0, 1.0, 0.0)), 1e-6)
    assert chk.feasible
    assert chk.objective == pytest.approx(9.0, abs=1e-12)
    # the brute-force oracle confirms 9 is the optimum
    assert milp_brute_force(inst) == pytest.approx(9.0)


def test_check_solution_row_violation():
    chk = check_solution(knapsack(), Assignment((1.0, 1.0, 1.0)), 1e-6)
    assert not chk.feasible
    assert chk.objective == pytest.approx(12.0)
    assert chk.worst_violation == pytest.approx(1.0)


def test_check_solution_binary_violation():
    chk = check_solution(knapsack(), Assignment((1.0, 0.5, 0.0)), 1e-6)
    assert not chk.feasible
    assert chk.worst_violation == pytest.approx(0.5)


def test_check_solution_dimension_mismatch():
    with pytest.raises(ModelError):
        check_solution(knapsack(), Assignment((1.0, 1.0)), 1e-6)


def test_check_solution_requires_positive_tol():
    with pytest.raises(ValueError):
        check_solution(knapsack(), Assignment((1.0, 1.0, 0.0)), 0.0)


def test_objective_matches_dot_product():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(1, 12))
        c = rng.normal(size=n) * 10
        inst = make_instance(
            "dot", "minimize", c, [-math.inf] * n, [math.inf] * n, ["continuous"] * n, []
        )
        x = rng.normal(size=n) * 5
        chk = check_solution(inst, Assignment(tuple(x)), 1e-6)
        expect = float(np.dot(c, x))
        assert chk.objective == pytest.approx(expect, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize(
    "kwargs, message",
    [
        (dict(var_lower=[0, 0.5, 0]), "bounds"),
        (dict(objective=[5, math.inf, 3]), "objective"),
        (dict(rows=[([(0, 2), (0, 3)], "<=", 5)]), "duplicate"),
        (dict(rows=[([(7, 2)], "<=", 5)]), "out of range"),
        (dict(rows=[([(0, 2)], "<<", 5)]), "relation"),
        (dict(rows=[([(0, math.nan)], "<=", 5)]), "non-finite"),
    ],
)
def test_validation_errors(kwargs, message):
    base = dict(
        name="bad",
        sense="maximize",
        objective=[5, 4, 3],
        var_lower=[0, 0, 0],
        var_upper=[1, 1, 1],
        var_kind=["binary"] * 3,
        rows=[([(0, 2), (1, 3), (2, 1)], "<=", 5)],
    )
    base.update(kwargs)
    with pytest.raises(ModelError, match=message):
        make_instance(**base)


def test_json_codec_round_trip():
    inst = make_instance(
        "mix", "minimize", [1.5, -2.25, 0.0],
        [0, -math.inf, 0], [1, math.inf, 4.5],
        ["binary", "continuous", "continuous"],
        [([(0, 1), (2, -3.5)], ">=", 2), ([(1, 1)], "=", 0.25)],
    )
    again = instance_from_dict(instance_to_dict(inst))
    assert again == inst


def test_binaries_listing():
    inst = make_instance(
        "k", "minimize", [1, 2, 3], [0, 0, 0], [1, 5, 1],
        ["binary", "continuous", "binary"], [],
    )
    assert inst.binaries == (0, 2)
