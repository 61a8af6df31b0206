"""Canonical mixed-binary MILP representation and solution checking.

An :class:`Instance` stores the objective sense, dense objective and bound
vectors, per-variable kinds (binary or continuous) and a list of sparse
constraint rows.  Instances are immutable after construction and may be
shared freely between solver runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

BINARY = "binary"
CONTINUOUS = "continuous"

LE = "<="
EQ = "="
GE = ">="

RELATIONS = (LE, EQ, GE)

#: default feasibility tolerance wherever one is not stated explicitly
DEFAULT_TOL = 1e-6


class ModelError(ValueError):
    """Raised when instance data violates the model contract."""


@dataclass(frozen=True)
class Row:
    """One sparse constraint row ``sum(coef * x[idx]) relation rhs``."""

    indices: tuple[int, ...]
    coefs: tuple[float, ...]
    relation: str
    rhs: float

    def activity(self, values: Sequence[float]) -> float:
        return float(sum(c * values[j] for j, c in zip(self.indices, self.coefs)))


@dataclass(frozen=True)
class Instance:
    """A validated mixed-binary MILP.

    Binary variables always carry bounds ``[0, 1]``; continuous variables may
    have infinite bounds.  Rows keep their original relation; no normal form
    is imposed here.
    """

    name: str
    sense: str
    objective: tuple[float, ...]
    var_lower: tuple[float, ...]
    var_upper: tuple[float, ...]
    var_kind: tuple[str, ...]
    rows: tuple[Row, ...]
    # lazily compiled solver data, keyed by id(self); never serialized
    _compiled: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = len(self.objective)
        if not (len(self.var_lower) == len(self.var_upper) == len(self.var_kind) == n):
            raise ModelError("objective/bounds/kind length mismatch")
        if self.sense not in (MINIMIZE, MAXIMIZE):
            raise ModelError(f"unknown sense {self.sense!r}")
        for j in range(n):
            lo, hi, kind = self.var_lower[j], self.var_upper[j], self.var_kind[j]
            if kind == BINARY:
                if lo != 0.0 or hi != 1.0:
                    raise ModelError(f"binary variable {j} must have bounds [0, 1]")
            elif kind == CONTINUOUS:
                if math.isnan(lo) or math.isnan(hi) or lo > hi:
                    raise ModelError(f"invalid bounds on variable {j}: [{lo}, {hi}]")
            else:
                raise ModelError(f"unknown kind {kind!r} for variable {j}")
            if not math.isfinite(self.objective[j]):
                raise ModelError(f"non-finite objective coefficient on variable {j}")
        for i, row in enumerate(self.rows):
            if row.relation not in RELATIONS:
                raise ModelError(f"row {i}: unknown relation {row.relation!r}")
            if not math.isfinite(row.rhs):
                raise ModelError(f"row {i}: non-finite right-hand side")
            if len(row.indices) != len(set(row.indices)):
                raise ModelError(f"row {i}: duplicate variable index")
            for j, c in zip(row.indices, row.coefs):
                if not 0 <= j < n:
                    raise ModelError(f"row {i}: variable index {j} out of range")
                if not math.isfinite(c):
                    raise ModelError(f"row {i}: non-finite coefficient on variable {j}")

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def binaries(self) -> tuple[int, ...]:
        return tuple(j for j, k in enumerate(self.var_kind) if k == BINARY)

    def objective_value(self, values: Sequence[float]) -> float:
        return float(np.dot(np.asarray(self.objective), np.asarray(values, dtype=float)))


@dataclass(frozen=True)
class Assignment:
    """A dense candidate point, one value per variable."""

    values: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SolutionCheck:
    feasible: bool
    objective: float
    worst_violation: float


def make_instance(
    name: str,
    sense: str,
    objective: Sequence[float],
    var_lower: Sequence[float],
    var_upper: Sequence[float],
    var_kind: Sequence[str],
    rows: Sequence[tuple[Sequence[tuple[int, float]], str, float]],
) -> Instance:
    """Build a validated :class:`Instance` from plain sequences.

    ``rows`` entries are ``(sparse coefficients, relation, rhs)`` with sparse
    coefficients given as ``(index, value)`` pairs.
    """
    built_rows = []
    for sparse, relation, rhs in rows:
        idx = tuple(int(j) for j, _ in sparse)
        coefs = tuple(float(c) for _, c in sparse)
        built_rows.append(Row(idx, coefs, relation, float(rhs)))
    return Instance(
        name=name,
        sense=sense,
        objective=tuple(float(c) for c in objective),
        var_lower=tuple(float(b) for b in var_lower),
        var_upper=tuple(float(b) for b in var_upper),
        var_kind=tuple(var_kind),
        rows=tuple(built_rows),
    )


def check_solution(inst: Instance, a: Assignment, tol: float = DEFAULT_TOL) -> SolutionCheck:
    """Check ``a`` against bounds, rows and binary integrality.

    The objective value is always returned, feasible or not.  The worst
    violation aggregates bound, row and integrality violations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if len(a) != inst.num_vars:
        raise ModelError(f"assignment has {len(a)} values, instance has {inst.num_vars} variables")
    x = np.asarray(a.values, dtype=float)
    worst = 0.0
    for j in range(inst.num_vars):
        worst = max(worst, inst.var_lower[j] - x[j], x[j] - inst.var_upper[j])
        if inst.var_kind[j] == BINARY:
            worst = max(worst, abs(x[j] - round(x[j])))
    for row in inst.rows:
        act = row.activity(x)
        if row.relation == LE:
            worst = max(worst, act - row.rhs)
        elif row.relation == GE:
            worst = max(worst, row.rhs - act)
        else:
            worst = max(worst, abs(act - row.rhs))
    return SolutionCheck(
        feasible=bool(worst <= tol),
        objective=inst.objective_value(x),
        worst_violation=float(max(worst, 0.0)),
    )


# --- JSON codec -------------------------------------------------------------
#
# Field names are fixed: name, sense, objective, bounds, var_kind, rows.
# Infinite bounds are encoded as null since JSON has no infinity literal.


def _bound_out(v: float):
    return None if math.isinf(v) else v


def _bound_in(v, default: float) -> float:
    return default if v is None else float(v)


def instance_to_dict(inst: Instance) -> dict:
    return {
        "name": inst.name,
        "sense": inst.sense,
        "objective": list(inst.objective),
        "bounds": [[_bound_out(lo), _bound_out(hi)] for lo, hi in zip(inst.var_lower, inst.var_upper)],
        "var_kind": list(inst.var_kind),
        "rows": [
            [[[int(j), c] for j, c in zip(r.indices, r.coefs)], r.relation, r.rhs]
            for r in inst.rows
        ],
    }


def instance_from_dict(data: dict) -> Instance:
    bounds = data["bounds"]
    return make_instance(
        name=data["name"],
        sense=data["sense"],
        objective=data["objective"],
        var_lower=[_bound_in(b[0], -math.inf) for b in bounds],
        var_upper=[_bound_in(b[1], math.inf) for b in bounds],
        var_kind=data["var_kind"],
        rows=[(row[0], row[1], row[2]) for row in data["rows"]],
    )


def dump_instance(inst: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh)
        fh.write("\n")


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))
