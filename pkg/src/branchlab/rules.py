"""Branching-variable selection: gain estimation and score functions.

Gains are always expressed in minimization sense as the increase of the
child LP bound over its parent, with ``inf`` marking a proven-infeasible
child.  The scoring layer offers the classic product rule, its
exponent-parameterized generalization, the asymmetric variant driven by
last-assignment leaf statistics, a pruning-focused precedence rule, a
cardinality-constraint specialization, and reliability (pseudocost-based)
gain estimation.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import BINARY, LE, Instance
from .simplex import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, LpOutcome, LpView, resolve_bound_change

RAW = "raw"
EFFICACIOUS = "efficacious"

ASYM_NONE = "none"
ASYM_LA = "la"
ASYM_RLA = "rla"
ASYM_PALA = "pala"
ASYM_CARDINALITY = "cardinality"

#: tolerance below which a fractional LP value counts as integral
INTEGRALITY_TOL = 1e-6
#: negative gains beyond this window indicate a solver bug rather than noise
_GAIN_NOISE = 1e-9


class GainPair(NamedTuple):
    """Bound improvements of the 0-fix and 1-fix children (inf = infeasible)."""

    delta0: float
    delta1: float


class EfficaciousPair(NamedTuple):
    q0: float
    q1: float


@dataclass(frozen=True)
class ScoreParams:
    """Exponent and threshold configuration for all score variants."""

    epsilon: float = 1e-6
    a_min: float = 0.3
    a_max: float = 0.7
    a0: float = 0.0
    a1: float = 0.0
    eta: float = 0.15
    k_i: int = 10
    update_period: int = 50
    pa_threshold: float = 0.05
    gain_source: str = RAW
    asymmetry: str = ASYM_NONE
    pruning_focused: bool = False
    # reliability-branching knobs
    rb_reliability: int = 8
    rb_budget: int = 100
    rb_iter_cap: int | None = 500

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if min(self.a_min, self.a_max, self.a0, self.a1) < 0:
            raise ValueError("exponents must be nonnegative")
        if self.asymmetry != ASYM_CARDINALITY and self.a0 * self.a1 != 0:
            raise ValueError("at most one of a0 and a1 may be positive")


@dataclass(frozen=True)
class RuleConfig:
    name: str
    params: ScoreParams
    estimator: str = "full"  # "full" or "reliability"


def _cfg(name, estimator="full", **kw) -> RuleConfig:
    return RuleConfig(name, ScoreParams(**kw), estimator)


_CATALOG = {
    "def-sb": _cfg("def-sb", a_min=0.5, a_max=0.5, gain_source=RAW),
    "def-sb-37": _cfg("def-sb-37", gain_source=RAW),
    "eff-sb": _cfg("eff-sb", a_min=0.5, a_max=0.5, gain_source=EFFICACIOUS),
    "eff-sb-37": _cfg("eff-sb-37", gain_source=EFFICACIOUS),
    "la-sb": _cfg("la-sb", gain_source=EFFICACIOUS, asymmetry=ASYM_LA),
    "rla-sb": _cfg("rla-sb", gain_source=EFFICACIOUS, asymmetry=ASYM_RLA),
    "pala-sb": _cfg("pala-sb", gain_source=EFFICACIOUS, asymmetry=ASYM_PALA),
    "eff-card": _cfg("eff-card", gain_source=EFFICACIOUS, asymmetry=ASYM_CARDINALITY),
    "prune-focus": _cfg("prune-focus", a_min=0.5, a_max=0.5, gain_source=RAW, pruning_focused=True),
    "prune-focus-37": _cfg("prune-focus-37", gain_source=RAW, pruning_focused=True),
    "def-rb": _cfg("def-rb", "reliability", a_min=0.5, a_max=0.5, gain_source=RAW),
    "eff-rb-37": _cfg("eff-rb-37", "reliability", gain_source=EFFICACIOUS),
    "pala-rb": _cfg("pala-rb", "reliability", gain_source=EFFICACIOUS, asymmetry=ASYM_PALA),
}


def rule_names() -> tuple[str, ...]:
    return tuple(_CATALOG)


def make_rule(name: str, **overrides) -> RuleConfig:
    """Look up a catalog rule, optionally overriding ScoreParams fields."""
    try:
        base = _CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown rule {name!r}; known: {', '.join(_CATALOG)}") from None
    if overrides:
        return dataclasses.replace(base, params=dataclasses.replace(base.params, **overrides))
    return base


# --- scores ------------------------------------------------------------------


def efficacious_clip(g: GainPair, delta_pd: float, epsilon: float) -> EfficaciousPair:
    """Floor gains at epsilon and cap them at the additive primal-dual gap.

    An infinite gain maps to ``delta_pd``.  With no incumbent
    (``delta_pd = inf``) finite gains are only floored; infinite gains stay
    infinite and are handled by the selection precedence.
    """
    dpd = max(delta_pd, 0.0)
    return EfficaciousPair(
        min(max(g.delta0, epsilon), dpd),
        min(max(g.delta1, epsilon), dpd),
    )


def product_score(q, a_min: float, a_max: float) -> float:
    lo, hi = (q[0], q[1]) if q[0] <= q[1] else (q[1], q[0])
    return lo**a_min * hi**a_max


def asymmetric_score(q, p: ScoreParams) -> float:
    return q[0] ** p.a0 * q[1] ** p.a1 * product_score(q, p.a_min, p.a_max)


def last_assignment_exponents(log, p: ScoreParams, mode: str) -> tuple[float, float]:
    """Exponents from the leaf-side statistics of a partially solved tree.

    ``mode`` selects the leaf population: "LA" uses only integral/infeasible
    leaves, "RLA" all leaves.  Below the ``k_i`` sample gate both exponents
    are zero.
    """
    if mode == "LA":
        gate, n0, n1 = log.total_ii, log.n0_ii, log.n1_ii
    elif mode == "RLA":
        gate, n0, n1 = log.total_leaves, log.n0_all, log.n1_all
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if gate < p.k_i or n0 + n1 == 0:
        return (0.0, 0.0)
    a = (n0 - n1) / (n0 + n1)
    if a > 0:
        return (0.0, p.eta * a)
    return (-p.eta * a, 0.0)


def pa_select_mode(log, p: ScoreParams) -> str:
    """Switch between LA and RLA by the fraction of integral/infeasible leaves."""
    if log.total_leaves == 0:
        return "RLA"
    return "RLA" if log.total_ii / log.total_leaves < p.pa_threshold else "LA"


@dataclass(frozen=True)
class CardinalityState:
    """Free-variable count and residual capacity of the cardinality row."""

    row_index: int
    n: int
    k: int


def detect_cardinality(inst: Instance, min_rhs: int = 2):
    """First all-unit <=-row over binaries with integer rhs >= ``min_rhs``.

    Packing rows (rhs 1) qualify only when ``min_rhs`` is lowered to 1.
    """
    for i, row in enumerate(inst.rows):
        if row.relation != LE or not row.indices:
            continue
        rhs = row.rhs
        if abs(rhs - round(rhs)) > 1e-9 or round(rhs) < min_rhs:
            continue
        if all(c == 1.0 for c in row.coefs) and all(
            inst.var_kind[j] == BINARY for j in row.indices
        ):
            return i
    return None


def cardinality_state(inst: Instance, row_index: int, fixings: dict) -> CardinalityState:
    row = inst.rows[row_index]
    n = 0
    k = int(round(row.rhs))
    for j in row.indices:
        val = fixings.get(j)
        if val is None:
            n += 1
        elif val == 1:
            k -= 1
    k = min(max(k, 0), n)
    return CardinalityState(row_index, n, k)


def cardinality_exponents(s: CardinalityState) -> tuple[float, float]:
    """Subtree-size-motivated exponents ((n-k)/4n, k/4n); both sides may be positive."""
    if s.n == 0:
        return (0.0, 0.0)
    return ((s.n - s.k) / (4.0 * s.n), s.k / (4.0 * s.n))


# --- gain estimation ----------------------------------------------------------


@dataclass
class GainEvaluation:
    """Per-candidate gains plus any child LP outcomes solved along the way."""

    gains: dict[int, GainPair]
    children: dict[int, tuple[LpOutcome, LpOutcome]]


def _child_gain(parent_obj: float, child: LpOutcome) -> float:
    if child.status == INFEASIBLE:
        return math.inf
    delta = child.dual_bound - parent_obj
    if delta < 0:
        if delta < -max(_GAIN_NOISE, 1e-12 * abs(parent_obj)):
            raise RuntimeError(f"child bound below parent bound by {-delta:.3e}")
        delta = 0.0
    return delta


def _solve_children(outcome: LpOutcome, view: LpView, var: int, iter_cap=None):
    down = resolve_bound_change(outcome, view.tighten(var, 0.0, 0.0), var, (0.0, 0.0), iter_cap)
    up = resolve_bound_change(outcome, view.tighten(var, 1.0, 1.0), var, (1.0, 1.0), iter_cap)
    return down, up


def full_strong_gains(outcome: LpOutcome, view: LpView, candidates) -> GainEvaluation:
    """Exact gains: both children of every candidate solved to optimality."""
    gains: dict[int, GainPair] = {}
    children = {}
    for var in sorted(candidates):
        down, up = _solve_children(outcome, view, var)
        gains[var] = GainPair(_child_gain(outcome.objective, down), _child_gain(outcome.objective, up))
        children[var] = (down, up)
    return GainEvaluation(gains, children)


class PseudocostStore:
    """Per-variable, per-side averages of objective gain per unit fractionality."""

    def __init__(self, num_vars: int) -> None:
        self.sum0 = np.zeros(num_vars)
        self.sum1 = np.zeros(num_vars)
        self.cnt0 = np.zeros(num_vars, dtype=np.int64)
        self.cnt1 = np.zeros(num_vars, dtype=np.int64)

    def add(self, var: int, side: int, unit_gain: float) -> None:
        if side == 0:
            self.sum0[var] += unit_gain
            self.cnt0[var] += 1
        else:
            self.sum1[var] += unit_gain
            self.cnt1[var] += 1

    def counts(self, var: int) -> tuple[int, int]:
        return int(self.cnt0[var]), int(self.cnt1[var])

    def unit(self, var: int, side: int) -> float:
        if side == 0:
            return self.sum0[var] / self.cnt0[var]
        return self.sum1[var] / self.cnt1[var]

    def global_unit(self, side: int):
        """Average unit gain across all observations on one side, or None."""
        s = self.sum0 if side == 0 else self.sum1
        c = self.cnt0 if side == 0 else self.cnt1
        total = int(c.sum())
        if total == 0:
            return None
        return float(s.sum()) / total


def reliability_gains(
    outcome: LpOutcome,
    view: LpView,
    candidates,
    store: PseudocostStore,
    p: ScoreParams,
) -> GainEvaluation:
    """Gain estimates following the reliability scheme.

    Unreliable candidates are strong-branched (iteration-capped dual solves)
    while the per-node budget lasts, feeding unit-gain observations into the
    store.  Reliable candidates use their pseudocost estimates; once the
    budget is spent, remaining unreliable ones fall back to the global
    averages.  Candidates are visited most-fractional first; there is no
    early stopping.
    """
    order = sorted(candidates, key=lambda j: (abs(outcome.primal[j] - 0.5), j))
    gains: dict[int, GainPair] = {}
    children = {}
    spent = 0
    for var in order:
        frac = outcome.primal[var]
        c0, c1 = store.counts(var)
        if c0 >= p.rb_reliability and c1 >= p.rb_reliability:
            gains[var] = GainPair(store.unit(var, 0) * frac, store.unit(var, 1) * (1.0 - frac))
        elif spent < p.rb_budget:
            spent += 1
            down, up = _solve_children(outcome, view, var, iter_cap=p.rb_iter_cap)
            d0 = _child_gain(outcome.objective, down)
            d1 = _child_gain(outcome.objective, up)
            gains[var] = GainPair(d0, d1)
            children[var] = (down, up)
            if math.isfinite(d0) and frac > 0:
                store.add(var, 0, d0 / frac)
            if math.isfinite(d1) and frac < 1:
                store.add(var, 1, d1 / (1.0 - frac))
        else:
            g0 = store.global_unit(0)
            g1 = store.global_unit(1)
            gains[var] = GainPair(
                g0 * frac if g0 is not None else p.epsilon,
                g1 * (1.0 - frac) if g1 is not None else p.epsilon,
            )
    gains = {var: gains[var] for var in sorted(gains)}
    return GainEvaluation(gains, children)


# --- selection -----------------------------------------------------------------


@dataclass(frozen=True)
class SelectionContext:
    """Node-level data the scores depend on.

    ``delta_pd`` is the additive primal-dual gap at the node (inf with no
    incumbent); ``prune_cut`` is the gain at which a child's bound reaches the
    pruning threshold; ``a0``/``a1`` are the asymmetric exponents in force.
    """

    delta_pd: float = math.inf
    prune_cut: float = math.inf
    a0: float = 0.0
    a1: float = 0.0


def _score_of(q0: float, q1: float, p: ScoreParams, ctx: SelectionContext) -> float:
    pair = (q0, q1)
    if ctx.a0 == 0.0 and ctx.a1 == 0.0:
        return product_score(pair, p.a_min, p.a_max)
    return asymmetric_score(pair, dataclasses.replace(p, a0=ctx.a0, a1=ctx.a1))


def _argmax_score(items) -> int:
    best_var, best = -1, -math.inf
    for var, score in items:
        if score > best:
            best_var, best = var, score
    return best_var


def _select_infinite_precedence(gains, finite_value) -> int | None:
    """Classic strong-branching precedence for proven-infeasible children.

    Returns the chosen variable, or None when no candidate has an infinite
    gain.  ``finite_value`` maps a finite gain to the value maximized among
    one-infeasible candidates.
    """
    both = [v for v, g in gains.items() if math.isinf(g.delta0) and math.isinf(g.delta1)]
    if both:
        return min(both)
    one = [
        (v, finite_value(g.delta1 if math.isinf(g.delta0) else g.delta0))
        for v, g in gains.items()
        if math.isinf(g.delta0) != math.isinf(g.delta1)
    ]
    if one:
        return _argmax_score(sorted(one))
    return None


def select_variable(gains: dict[int, GainPair], p: ScoreParams, ctx: SelectionContext) -> int:
    """Pick the branching variable for one node.  Ties go to the lowest index."""
    if not gains:
        raise ValueError("empty candidate set")
    gains = {v: gains[v] for v in sorted(gains)}

    if p.pruning_focused:
        return _select_pruning(gains, p, ctx)

    if p.gain_source == RAW:
        choice = _select_infinite_precedence(gains, lambda d: d)
        if choice is not None:
            return choice
        return _argmax_score(
            (v, _score_of(max(g.delta0, p.epsilon), max(g.delta1, p.epsilon), p, ctx))
            for v, g in gains.items()
        )

    # efficacious source: clip first, then pure score maximization; infinities
    # survive clipping only without an incumbent, where the raw precedence
    # applies unchanged
    clipped = {v: efficacious_clip(g, ctx.delta_pd, p.epsilon) for v, g in gains.items()}
    if math.isinf(ctx.delta_pd):
        choice = _select_infinite_precedence(
            {v: GainPair(q.q0, q.q1) for v, q in clipped.items()}, lambda d: d
        )
        if choice is not None:
            return choice
    return _argmax_score((v, _score_of(q.q0, q.q1, p, ctx)) for v, q in clipped.items())


def _select_pruning(gains, p: ScoreParams, ctx: SelectionContext) -> int:
    """Appendix-style precedence treating bound pruning like infeasibility."""
    pruned = {
        v: (g.delta0 >= ctx.prune_cut, g.delta1 >= ctx.prune_cut) for v, g in gains.items()
    }
    counts = {v: int(a) + int(b) for v, (a, b) in pruned.items()}
    top = max(counts.values())
    if top == 2:
        return min(v for v, c in counts.items() if c == 2)
    if top == 1:
        remaining = []
        for v, c in counts.items():
            if c != 1:
                continue
            g = gains[v]
            remaining.append((v, g.delta1 if pruned[v][0] else g.delta0))
        return _argmax_score(sorted(remaining))
    return _argmax_score(
        (v, _score_of(max(g.delta0, p.epsilon), max(g.delta1, p.epsilon), p, ctx))
        for v, g in gains.items()
    )
