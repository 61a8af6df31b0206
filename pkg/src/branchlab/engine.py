"""Deterministic best-bound branch-and-bound core.

The engine works internally in minimization sense (maximization instances
are negated by the LP layer) and converts bounds back to the instance's
declared sense when assembling the report.  Branching decisions are
delegated to the rules module; the engine owns the frontier, incumbent,
leaf bookkeeping and the exponent refresh cadence.
"""

from __future__ import annotations

import heapq
import json
import math
import warnings
from dataclasses import dataclass, field

from .model import BINARY, MAXIMIZE, MINIMIZE, Assignment, Instance
from .rules import (
    ASYM_CARDINALITY,
    ASYM_LA,
    ASYM_NONE,
    ASYM_PALA,
    ASYM_RLA,
    INTEGRALITY_TOL,
    PseudocostStore,
    RuleConfig,
    SelectionContext,
    cardinality_exponents,
    cardinality_state,
    detect_cardinality,
    full_strong_gains,
    last_assignment_exponents,
    make_rule,
    pa_select_mode,
    reliability_gains,
    select_variable,
)
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, LpView, SimplexError, resolve_bound_change, solve_root

OPT = "Optimal"
NODE_LIMIT = "NodeLimit"
INFEAS = "Infeasible"

REASON_INFEASIBLE = "infeasible"
REASON_INTEGRAL = "integral"
REASON_BOUND = "bound_pruned"


class EngineError(RuntimeError):
    """A solve aborted on an LP failure; carries the node diagnostic."""


@dataclass
class Node:
    id: int
    depth: int
    fixings: dict
    lp_bound: float
    last_branch: tuple[int, int] | None
    outcome: object


@dataclass(frozen=True)
class Incumbent:
    bound: float
    solution: Assignment | None
    source: str  # "initial", "discovered", or "none"


@dataclass
class LeafLog:
    """Leaf classification counters feeding the last-assignment statistics."""

    n0_ii: int = 0
    n1_ii: int = 0
    n0_all: int = 0
    n1_all: int = 0
    total_leaves: int = 0
    total_ii: int = 0
    reasons: dict = field(
        default_factory=lambda: {REASON_INFEASIBLE: 0, REASON_INTEGRAL: 0, REASON_BOUND: 0}
    )


def record_leaf(node: Node, reason: str, log: LeafLog) -> LeafLog:
    """Count one classified leaf; the root contributes no side counters."""
    log.total_leaves += 1
    log.reasons[reason] += 1
    side = None if node.last_branch is None else node.last_branch[1]
    if side == 0:
        log.n0_all += 1
    elif side == 1:
        log.n1_all += 1
    if reason in (REASON_INFEASIBLE, REASON_INTEGRAL):
        log.total_ii += 1
        if side == 0:
            log.n0_ii += 1
        elif side == 1:
            log.n1_ii += 1
    return log


def init_primal_bound(z_star: float, gap: float, sense: str) -> float:
    """Primal bound at a relative gap from a known optimal value."""
    if gap < 0:
        raise ValueError("gap must be nonnegative")
    if not math.isfinite(z_star):
        raise ValueError("z_star must be finite")
    if z_star == 0 and gap > 0:
        warnings.warn("z_star is 0; relative gap degenerates to the optimum itself")
        return 0.0
    offset = gap * abs(z_star)
    return z_star + offset if sense == MINIMIZE else z_star - offset


@dataclass(frozen=True)
class SolveReport:
    status: str
    tree_size: int
    incumbent: Incumbent
    dual_bound: float
    root_lp_value: float
    gap_remaining: float | None
    leaves: LeafLog
    branchings: tuple
    rule: str
    seed: int
    node_limit: int | None
    instance: str

    def to_dict(self) -> dict:
        inc = {
            "bound": self.incumbent.bound,
            "solution": None if self.incumbent.solution is None else list(self.incumbent.solution.values),
            "source": self.incumbent.source,
        }
        return {
            "status": self.status,
            "tree_size": self.tree_size,
            "incumbent": inc,
            "dual_bound": self.dual_bound,
            "root_lp_value": self.root_lp_value,
            "gap_remaining": self.gap_remaining,
            "leaves": {
                "n0_ii": self.leaves.n0_ii,
                "n1_ii": self.leaves.n1_ii,
                "n0_all": self.leaves.n0_all,
                "n1_all": self.leaves.n1_all,
                "total_leaves": self.leaves.total_leaves,
                "total_ii": self.leaves.total_ii,
                "reasons": dict(self.leaves.reasons),
            },
            "branchings": [list(b) for b in self.branchings],
            "rule": self.rule,
            "seed": self.seed,
            "node_limit": self.node_limit,
            "instance": self.instance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=True)


class _Telemetry:
    HEADER = "node_id,depth,bound,event,chosen_var,a0,a1\n"

    def __init__(self, sink) -> None:
        self._own = isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__")
        self._fh = open(sink, "w") if self._own else sink
        if self._fh is not None:
            self._fh.write(self.HEADER)

    def row(self, node: Node, event: str, bound: float, var=None, a0=0.0, a1=0.0) -> None:
        if self._fh is None:
            return
        chosen = "" if var is None else str(var)
        self._fh.write(f"{node.id},{node.depth},{bound!r},{event},{chosen},{a0!r},{a1!r}\n")

    def close(self) -> None:
        if self._own and self._fh is not None:
            self._fh.close()


def _is_integral(primal, binaries) -> bool:
    return all(abs(primal[j] - round(primal[j])) <= INTEGRALITY_TOL for j in binaries)


def solve(
    inst: Instance,
    rule: RuleConfig | str,
    init_primal: float | None = None,
    node_limit: int | None = None,
    seed: int = 0,
    telemetry=None,
) -> SolveReport:
    """Best-bound branch and bound on a mixed-binary instance.

    ``init_primal`` is a primal bound in the instance's own sense, installed
    without a solution.  ``node_limit`` caps the total node count (tree
    size); ``seed`` is recorded for bookkeeping only, the solve itself is
    deterministic.
    """
    cfg = make_rule(rule) if isinstance(rule, str) else rule
    p = cfg.params
    sense_sign = -1.0 if inst.sense == MAXIMIZE else 1.0

    def canon(v: float) -> float:
        return sense_sign * v

    limit = math.inf if node_limit is None else int(node_limit)
    if limit < 1:
        raise ValueError("node_limit must be at least 1")

    binaries = inst.binaries
    zhat = math.inf if init_primal is None else canon(init_primal)
    best_solution: tuple | None = None
    source = "none" if init_primal is None else "initial"
    log = LeafLog()
    store = PseudocostStore(inst.num_vars) if cfg.estimator == "reliability" else None
    card_row = detect_cardinality(inst) if p.asymmetry == ASYM_CARDINALITY else None
    a0, a1 = p.a0, p.a1

    tel = _Telemetry(telemetry) if telemetry is not None else None
    branchings: list[tuple] = []

    def prune_threshold() -> float:
        if math.isinf(zhat):
            return math.inf
        return zhat - 1e-6 * max(1.0, abs(zhat))

    try:
        root_view = LpView.root(inst)
        try:
            root_out = solve_root(root_view)
        except SimplexError as exc:
            raise EngineError(f"root LP failed: {exc}") from exc
        next_id = 1
        tree_size = 1
        root = Node(0, 0, {}, root_out.objective if root_out.status == OPTIMAL else math.inf, None, root_out)
        if root_out.status == INFEASIBLE:
            record_leaf(root, REASON_INFEASIBLE, log)
            if tel:
                tel.row(root, REASON_INFEASIBLE, math.inf)
            return _report(INFEAS, tree_size, zhat, best_solution, source, math.inf, math.nan,
                           log, branchings, cfg, seed, node_limit, inst, sense_sign)
        if root_out.status == UNBOUNDED:
            raise EngineError("root LP is unbounded; branch and bound requires a bounded relaxation")
        root_lp_min = root_out.objective

        heap: list[tuple[float, int, Node]] = [(root.lp_bound, root.id, root)]
        branch_count = 0
        status = None

        while heap:
            bound, _, node = heapq.heappop(heap)
            if bound >= prune_threshold():
                record_leaf(node, REASON_BOUND, log)
                if tel:
                    tel.row(node, REASON_BOUND, sense_sign * bound)
                continue
            primal = node.outcome.primal
            if _is_integral(primal, binaries):
                obj = node.outcome.objective
                if obj < zhat:
                    zhat = obj
                    best_solution = primal
                    source = "discovered"
                record_leaf(node, REASON_INTEGRAL, log)
                if tel:
                    tel.row(node, REASON_INTEGRAL, sense_sign * bound)
                # sweep frontier against the improved incumbent
                cut = prune_threshold()
                keep = [e for e in heap if e[0] < cut]
                dropped = sorted((e for e in heap if e[0] >= cut), key=lambda e: e[1])
                for b, _, dead in dropped:
                    record_leaf(dead, REASON_BOUND, log)
                    if tel:
                        tel.row(dead, REASON_BOUND, sense_sign * b)
                heapq.heapify(keep)
                heap = keep
                continue
            if tree_size + 2 > limit:
                heapq.heappush(heap, (bound, node.id, node))
                status = NODE_LIMIT
                break

            if p.asymmetry in (ASYM_LA, ASYM_RLA, ASYM_PALA) and branch_count % p.update_period == 0:
                mode = {"la": "LA", "rla": "RLA"}.get(p.asymmetry) or pa_select_mode(log, p)
                a0, a1 = last_assignment_exponents(log, p, mode)
            if card_row is not None:
                a0, a1 = cardinality_exponents(cardinality_state(inst, card_row, node.fixings))

            candidates = [j for j in binaries if abs(primal[j] - round(primal[j])) > INTEGRALITY_TOL]
            view = LpView.with_fixings(inst, node.fixings)
            try:
                if store is None:
                    ev = full_strong_gains(node.outcome, view, candidates)
                else:
                    ev = reliability_gains(node.outcome, view, candidates, store, p)
                delta_pd = math.inf if math.isinf(zhat) else max(zhat - bound, 0.0)
                cut = prune_threshold()
                prune_cut = math.inf if math.isinf(cut) else cut - bound
                ctx = SelectionContext(delta_pd=delta_pd, prune_cut=prune_cut, a0=a0, a1=a1)
                var = select_variable(ev.gains, p, ctx)
                branchings.append((node.id, var, a0, a1))
                if tel:
                    tel.row(node, "branched", sense_sign * bound, var, a0, a1)

                cached = ev.children.get(var)
                for side in (0, 1):
                    child_view = view.tighten(var, float(side), float(side))
                    out = None
                    if cached is not None and cached[side].status in (OPTIMAL, INFEASIBLE):
                        out = cached[side]
                    else:
                        out = resolve_bound_change(
                            node.outcome, child_view, var, (float(side), float(side))
                        )
                    child_bound = max(out.objective, bound) if out.status == OPTIMAL else math.inf
                    child = Node(
                        next_id, node.depth + 1, {**node.fixings, var: side},
                        child_bound, (var, side), out,
                    )
                    next_id += 1
                    tree_size += 1
                    if out.status == INFEASIBLE:
                        record_leaf(child, REASON_INFEASIBLE, log)
                        if tel:
                            tel.row(child, REASON_INFEASIBLE, math.inf)
                    else:
                        heapq.heappush(heap, (child.lp_bound, child.id, child))
            except SimplexError as exc:
                raise EngineError(
                    f"LP failure while branching node {node.id} of {inst.name!r}: {exc}"
                ) from exc
            if node.outcome.basis is not None:
                node.outcome.basis.drop_cache()
            branch_count += 1

        if status is None:
            status = OPT if not math.isinf(zhat) else INFEAS
            dual_min = zhat
        else:
            open_best = min((e[0] for e in heap), default=math.inf)
            dual_min = min(open_best, zhat)
        return _report(status, tree_size, zhat, best_solution, source, dual_min, root_lp_min,
                       log, branchings, cfg, seed, node_limit, inst, sense_sign)
    finally:
        if tel:
            tel.close()


def _report(status, tree_size, zhat, best_solution, source, dual_min, root_lp_min,
            log, branchings, cfg, seed, node_limit, inst, sense_sign) -> SolveReport:
    solution = None if best_solution is None else Assignment(tuple(best_solution))
    incumbent = Incumbent(bound=sense_sign * zhat, solution=solution, source=source)
    return SolveReport(
        status=status,
        tree_size=tree_size,
        incumbent=incumbent,
        dual_bound=sense_sign * dual_min,
        root_lp_value=sense_sign * root_lp_min if not math.isnan(root_lp_min) else math.nan,
        gap_remaining=0.0 if status == OPT else None,
        leaves=log,
        branchings=tuple(branchings),
        rule=cfg.name,
        seed=seed,
        node_limit=node_limit,
        instance=inst.name,
    )
