import math

import numpy as np
import pytest

from branchlab.model import make_instance
from branchlab.rules import (
    CardinalityState,
    EfficaciousPair,
    GainPair,
    PseudocostStore,
    ScoreParams,
    SelectionContext,
    asymmetric_score,
    cardinality_exponents,
    cardinality_state,
    detect_cardinality,
    efficacious_clip,
    full_strong_gains,
    last_assignment_exponents,
    make_rule,
    pa_select_mode,
    product_score,
    reliability_gains,
    rule_names,
    select_variable,
)
from branchlab.simplex import LpView, solve_root
from branchlab.generators import GenSpec, generate

from _oracles import lp_vertex_enumeration

INF = math.inf


class FakeLog:
    def __init__(self, n0_ii=0, n1_ii=0, n0_all=0, n1_all=0, total_leaves=0, total_ii=0):
        self.n0_ii, self.n1_ii = n0_ii, n1_ii
        self.n0_all, self.n1_all = n0_all, n1_all
        self.total_leaves, self.total_ii = total_leaves, total_ii


# --- efficacious clipping -----------------------------------------------------


def test_clip_caps_large_gain():
    q = efficacious_clip(GainPair(0.6, 1.8), 1.0, 1e-6)
    assert q == EfficaciousPair(0.6, 1.0)


def test_clip_maps_infinite_gain_to_gap():
    q = efficacious_clip(GainPair(0.6, INF), 1.0, 1e-6)
    assert q == EfficaciousPair(0.6, 1.0)


def test_clip_floors_at_epsilon():
    q = efficacious_clip(GainPair(0.0, 0.5), 1.0, 1e-6)
    assert q == EfficaciousPair(1e-6, 0.5)


def test_clip_identity_without_incumbent():
    q = efficacious_clip(GainPair(0.3, 2.0), INF, 1e-6)
    assert q == EfficaciousPair(0.3, 2.0)
    assert efficacious_clip(GainPair(0.0, INF), INF, 1e-6) == EfficaciousPair(1e-6, INF)


def test_clip_monotone():
    rng = np.random.default_rng(0)
    for _ in range(300):
        d0, d1 = rng.uniform(0, 3, 2)
        dpd = rng.uniform(0, 3)
        bump = rng.uniform(0, 1)
        base = efficacious_clip(GainPair(d0, d1), dpd, 1e-6)
        more_gain = efficacious_clip(GainPair(d0 + bump, d1), dpd, 1e-6)
        more_gap = efficacious_clip(GainPair(d0, d1), dpd + bump, 1e-6)
        assert more_gain.q0 >= base.q0 - 1e-15
        assert more_gap.q0 >= base.q0 - 1e-15 and more_gap.q1 >= base.q1 - 1e-15


# --- product and asymmetric scores ---------------------------------------------


def test_product_score_squared_convention():
    # equal exponents rank identically to the plain product; squaring the
    # (0.5, 0.5) score recovers the product value 0.63
    s = product_score((0.7, 0.9), 0.5, 0.5)
    assert s * s == pytest.approx(0.63, abs=1e-12)


def test_product_score_paper_values():
    assert product_score((0.7, 0.9), 0.3, 0.7) == pytest.approx(0.834, abs=1e-3)
    assert product_score((0.6, 1.0), 0.3, 0.7) == pytest.approx(0.858, abs=1e-3)


def test_asymmetric_reduces_to_product():
    p = ScoreParams(a0=0.0, a1=0.0)
    q = (0.5, 0.8)
    assert asymmetric_score(q, p) == pytest.approx(product_score(q, p.a_min, p.a_max))


def test_asymmetric_direct_formula():
    p = ScoreParams(a0=0.0, a1=0.075)
    expect = 0.5**0.3 * 0.8 ** (0.7 + 0.075)
    assert asymmetric_score((0.5, 0.8), p) == pytest.approx(expect, abs=1e-12)


def test_asymmetric_identity_gains():
    p = ScoreParams(a0=0.11, a1=0.0, a_min=0.3, a_max=0.7)
    assert asymmetric_score((1.0, 1.0), p) == 1.0


def test_score_monotone_in_each_gain():
    rng = np.random.default_rng(1)
    for _ in range(300):
        q0, q1 = rng.uniform(0.01, 2, 2)
        a_min, a_max = rng.uniform(0, 1, 2)
        bump = rng.uniform(0, 0.5)
        base = product_score((q0, q1), a_min, a_max)
        assert product_score((q0 + bump, q1), a_min, a_max) >= base - 1e-12
        assert product_score((q0, q1 + bump), a_min, a_max) >= base - 1e-12


def test_scoreparams_validation():
    with pytest.raises(ValueError):
        ScoreParams(a0=0.1, a1=0.1)
    with pytest.raises(ValueError):
        ScoreParams(epsilon=0.0)
    ScoreParams(a0=0.1, a1=0.1, asymmetry="cardinality")  # allowed there


# --- last-assignment exponents ---------------------------------------------------


def test_gate_below_threshold():
    log = FakeLog(n0_ii=3, n1_ii=2, total_ii=5)
    assert last_assignment_exponents(log, ScoreParams(), "LA") == (0.0, 0.0)


def test_exact_exponents_30_10():
    log = FakeLog(n0_ii=30, n1_ii=10, total_ii=40)
    assert last_assignment_exponents(log, ScoreParams(eta=0.15), "LA") == (0.0, pytest.approx(0.075))


def test_exact_exponents_symmetric_case():
    log = FakeLog(n0_ii=10, n1_ii=30, total_ii=40)
    assert last_assignment_exponents(log, ScoreParams(eta=0.15), "LA") == (pytest.approx(0.075), 0.0)


def test_rla_uses_all_leaves():
    log = FakeLog(n0_ii=0, n1_ii=0, total_ii=0, n0_all=30, n1_all=10, total_leaves=40)
    assert last_assignment_exponents(log, ScoreParams(eta=0.15), "LA") == (0.0, 0.0)
    assert last_assignment_exponents(log, ScoreParams(eta=0.15), "RLA") == (0.0, pytest.approx(0.075))


def test_algorithm_ranges_random_logs():
    rng = np.random.default_rng(2)
    p = ScoreParams(eta=0.15, k_i=10)
    for _ in range(500):
        n0, n1 = int(rng.integers(0, 60)), int(rng.integers(0, 60))
        log = FakeLog(n0_ii=n0, n1_ii=n1, total_ii=n0 + n1)
        a0, a1 = last_assignment_exponents(log, p, "LA")
        assert 0.0 <= a0 <= p.eta and 0.0 <= a1 <= p.eta
        assert a0 * a1 == 0.0
        if n0 + n1 < p.k_i:
            assert (a0, a1) == (0.0, 0.0)


# --- pruning-aware switch ----------------------------------------------------------


def test_pa_mode_examples():
    p = ScoreParams()
    assert pa_select_mode(FakeLog(total_ii=4, total_leaves=100), p) == "RLA"
    assert pa_select_mode(FakeLog(total_ii=7, total_leaves=100), p) == "LA"
    # 5% is not strictly below the threshold
    assert pa_select_mode(FakeLog(total_ii=5, total_leaves=100), p) == "LA"
    assert pa_select_mode(FakeLog(), p) == "RLA"


# --- cardinality rule -----------------------------------------------------------------


def test_cardinality_exponent_examples():
    assert cardinality_exponents(CardinalityState(0, 10, 5)) == (0.125, 0.125)
    assert cardinality_exponents(CardinalityState(0, 4, 1)) == (0.1875, 0.0625)
    assert cardinality_exponents(CardinalityState(0, 4, 0)) == (0.25, 0.0)
    assert cardinality_exponents(CardinalityState(0, 0, 0)) == (0.0, 0.0)


def test_detect_cardinality_portfolio():
    inst = generate(GenSpec("portfolio_ccp", 0, {"n": 4, "m": 10, "k": 3}))
    row = detect_cardinality(inst)
    assert row is not None
    assert inst.rows[row].rhs == 3.0
    assert all(c == 1.0 for c in inst.rows[row].coefs)


def test_detect_cardinality_packing_needs_lower_threshold():
    inst = generate(GenSpec("set_packing", 0, {"n": 30, "m": 20}))
    assert detect_cardinality(inst) is None
    assert detect_cardinality(inst, min_rhs=1) == 0


def test_detect_cardinality_absent():
    inst = make_instance(
        "none", "minimize", [1, 1], [0, 0], [1, 1], ["binary"] * 2,
        [([(0, 2.0), (1, 1.0)], "<=", 3)],
    )
    assert detect_cardinality(inst) is None


def test_cardinality_state_respects_fixings():
    inst = generate(GenSpec("portfolio_ccp", 1, {"n": 3, "m": 8, "k": 3}))
    row = detect_cardinality(inst)
    zs = inst.rows[row].indices
    state = cardinality_state(inst, row, {zs[0]: 1, zs[1]: 0})
    assert state.n == len(zs) - 2
    assert state.k == 2


# --- gain estimation --------------------------------------------------------------------


def knapsack_root():
    inst = make_instance(
        "knap", "maximize", [5, 4, 3], [0, 0, 0], [1, 1, 1],
        ["binary"] * 3, [([(0, 2), (1, 3), (2, 1)], "<=", 5)],
    )
    view = LpView.root(inst)
    return inst, view, solve_root(view)


def test_full_strong_gains_knapsack():
    inst, view, root = knapsack_root()
    ev = full_strong_gains(root, view, [1])
    g = ev.gains[1]
    # oracle: vertex enumeration of both children
    _, down_obj, _ = lp_vertex_enumeration(inst, lower=[0, 0, 0], upper=[1, 0, 1])
    _, up_obj, _ = lp_vertex_enumeration(inst, lower=[0, 1, 0], upper=[1, 1, 1])
    assert g.delta0 == pytest.approx(-down_obj - root.objective, abs=1e-9)
    assert g.delta1 == pytest.approx(-up_obj - root.objective, abs=1e-9)
    assert g.delta0 == pytest.approx(8 / 3, abs=1e-4)
    assert g.delta1 == pytest.approx(7 / 6, abs=1e-4)


def test_full_strong_gains_infeasible_child():
    inst = make_instance(
        "forced", "maximize", [2, 1], [0, 0], [1, 1], ["binary"] * 2,
        [([(0, 1), (1, 1)], ">=", 1.5), ([(0, 1), (1, 1)], "<=", 1.5)],
    )
    view = LpView.root(inst)
    root = solve_root(view)
    ev = full_strong_gains(root, view, [0, 1])
    # fixing either variable to 0 leaves the other unable to reach 1.5
    assert math.isinf(ev.gains[0].delta0)
    assert math.isinf(ev.gains[1].delta0)


def test_reliability_estimates_and_observations():
    store = PseudocostStore(4)
    # seed variable 2 with reliable statistics: unit gains 2.0 down, 1.0 up
    for _ in range(8):
        store.add(2, 0, 2.0)
        store.add(2, 1, 1.0)
    inst, view, root = knapsack_root()
    p = make_rule("def-rb").params
    # only candidate 1 is fractional at the root (value 2/3)
    ev = reliability_gains(root, view, [1], store, p)
    # variable 1 has no observations: strong-branched, observations recorded
    assert 1 in ev.children
    f = root.primal[1]
    assert store.counts(1) == (1, 1)
    assert store.unit(1, 0) == pytest.approx(ev.gains[1].delta0 / f)
    assert store.unit(1, 1) == pytest.approx(ev.gains[1].delta1 / (1 - f))


def test_reliability_threshold_boundary():
    store = PseudocostStore(2)
    for _ in range(7):
        store.add(0, 0, 1.0)
    for _ in range(8):
        store.add(0, 1, 1.0)
    p = make_rule("def-rb").params
    assert not (store.counts(0)[0] >= p.rb_reliability and store.counts(0)[1] >= p.rb_reliability)
    store.add(0, 0, 1.0)
    assert store.counts(0)[0] >= p.rb_reliability and store.counts(0)[1] >= p.rb_reliability


def test_reliability_pseudocost_estimate_definition():
    store = PseudocostStore(4)
    for _ in range(8):
        store.add(1, 0, 2.0)  # psi0 = 2 per unit
        store.add(1, 1, 4.0)
    inst, view, root = knapsack_root()
    p = make_rule("def-rb").params
    ev = reliability_gains(root, view, [1], store, p)
    f = root.primal[1]
    assert ev.gains[1].delta0 == pytest.approx(2.0 * f)
    assert ev.gains[1].delta1 == pytest.approx(4.0 * (1 - f))
    assert 1 not in ev.children  # reliable: no LP solved


def test_reliability_budget_exhaustion_falls_back_to_global():
    store = PseudocostStore(4)
    store.add(3, 0, 3.0)
    store.add(3, 1, 5.0)
    inst, view, root = knapsack_root()
    p = make_rule("def-rb", rb_budget=0).params
    ev = reliability_gains(root, view, [1], store, p)
    f = root.primal[1]
    assert ev.gains[1].delta0 == pytest.approx(3.0 * f)
    assert ev.gains[1].delta1 == pytest.approx(5.0 * (1 - f))
    # with an empty store the estimate floors at epsilon
    empty = PseudocostStore(4)
    ev2 = reliability_gains(root, view, [1], empty, p)
    assert ev2.gains[1] == GainPair(p.epsilon, p.epsilon)


def test_rb_degenerates_to_full_strong_gains():
    inst, view, root = knapsack_root()
    p = make_rule("def-rb", rb_reliability=10**9, rb_budget=10**9, rb_iter_cap=None).params
    store = PseudocostStore(inst.num_vars)
    rb = reliability_gains(root, view, [1], store, p)
    fsb = full_strong_gains(root, view, [1])
    assert rb.gains == fsb.gains


# --- selection ----------------------------------------------------------------------------


def ctx(delta_pd=INF, prune_cut=None, a0=0.0, a1=0.0):
    if prune_cut is None:
        prune_cut = delta_pd
    return SelectionContext(delta_pd=delta_pd, prune_cut=prune_cut, a0=a0, a1=a1)


def test_example_one_overestimation():
    # additive integrality gap 1: i gains (0.6, 1.8), j gains (0.9, 1.0)
    gains = {0: GainPair(0.6, 1.8), 1: GainPair(0.9, 1.0)}
    def_sb = make_rule("def-sb").params
    eff_sb = make_rule("eff-sb").params
    assert select_variable(gains, def_sb, ctx()) == 0  # classic rule overestimates
    assert select_variable(gains, eff_sb, ctx(delta_pd=1.0)) == 1


def test_example_two_infeasible_child():
    gains = {0: GainPair(0.7, 0.9), 1: GainPair(0.6, INF)}
    def_sb = make_rule("def-sb").params
    eff_sb = make_rule("eff-sb").params
    eff_37 = make_rule("eff-sb-37").params
    # Def-SB prefers the infinite score
    assert select_variable(gains, def_sb, ctx()) == 1
    # Eff-SB with gap 1 clips to (0.6, 1.0): 0.63 > 0.60 picks i
    assert select_variable(gains, eff_sb, ctx(delta_pd=1.0)) == 0
    # the (3, 7) exponents flip the choice back to j (0.858 > 0.834)
    assert select_variable(gains, eff_37, ctx(delta_pd=1.0)) == 1
    # a slightly worse primal bound restores j under equal exponents too
    assert select_variable(gains, eff_sb, ctx(delta_pd=1.1)) == 1


def test_def_sb_two_infeasible_precedence():
    gains = {0: GainPair(0.7, INF), 2: GainPair(INF, INF), 5: GainPair(INF, INF)}
    assert select_variable(gains, make_rule("def-sb").params, ctx()) == 2


def test_def_sb_one_infeasible_maximizes_feasible_branch():
    gains = {0: GainPair(0.7, INF), 1: GainPair(INF, 0.9), 2: GainPair(5.0, 5.0)}
    assert select_variable(gains, make_rule("def-sb").params, ctx()) == 1


def test_argmax_reduction_no_incumbent():
    rng = np.random.default_rng(3)
    def_sb = make_rule("def-sb").params
    eff_sb = make_rule("eff-sb").params
    for _ in range(400):
        k = int(rng.integers(2, 8))
        gains = {
            int(v): GainPair(float(rng.uniform(0, 3)), float(rng.uniform(0, 3)))
            for v in rng.choice(50, size=k, replace=False)
        }
        assert select_variable(gains, def_sb, ctx()) == select_variable(gains, eff_sb, ctx())


def test_scale_invariance_all_rules():
    rng = np.random.default_rng(4)
    for name in rule_names():
        p = make_rule(name).params
        for _ in range(60):
            k = int(rng.integers(2, 7))
            gains = {
                int(v): GainPair(float(rng.uniform(0, 2)), float(rng.uniform(0, 2)))
                for v in rng.choice(30, size=k, replace=False)
            }
            lam = float(rng.uniform(0.1, 9))
            dpd = float(rng.uniform(0.5, 2.5))
            c1 = ctx(delta_pd=dpd, prune_cut=dpd * 0.999, a0=0.02, a1=0.0)
            c2 = ctx(delta_pd=lam * dpd, prune_cut=lam * dpd * 0.999, a0=0.02, a1=0.0)
            scaled = {v: GainPair(g.delta0 * lam, g.delta1 * lam) for v, g in gains.items()}
            assert select_variable(gains, p, c1) == select_variable(scaled, p, c2), name


def test_pruning_focused_precedence():
    p = make_rule("prune-focus").params
    # prune_cut 1.0: gains at or above it close the node
    gains = {0: GainPair(0.4, 1.2), 1: GainPair(1.1, 2.0), 2: GainPair(0.5, 0.9)}
    assert select_variable(gains, p, ctx(delta_pd=1.0, prune_cut=1.0)) == 1  # two pruned
    gains = {0: GainPair(0.4, 1.2), 2: GainPair(0.8, 1.5)}
    # both have one pruned child; 2 has the larger remaining gain
    assert select_variable(gains, p, ctx(delta_pd=1.0, prune_cut=1.0)) == 2
    # nobody prunes: falls back to the product score
    gains = {0: GainPair(0.4, 0.5), 2: GainPair(0.6, 0.7)}
    assert select_variable(gains, p, ctx(delta_pd=1.0, prune_cut=1.0)) == 2


def test_pruning_focused_treats_infinite_as_pruned():
    p = make_rule("prune-focus").params
    gains = {0: GainPair(0.4, INF), 1: GainPair(0.9, 0.95)}
    assert select_variable(gains, p, ctx(delta_pd=1.0, prune_cut=1.0)) == 0


def test_degenerate_gap_ties_break_lowest_index():
    p = make_rule("eff-sb-37").params
    gains = {3: GainPair(0.5, 0.9), 7: GainPair(0.2, 0.4)}
    assert select_variable(gains, p, ctx(delta_pd=1e-9)) == 3


def test_empty_candidates_rejected():
    with pytest.raises(ValueError):
        select_variable({}, make_rule("def-sb").params, ctx())
