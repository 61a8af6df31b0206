"""branchlab: a branch-and-bound laboratory for strong-branching scores."""

from .bench import Campaign, ResultRow, gap_remaining, run_campaign, shifted_geomean
from .engine import (
    Incumbent,
    LeafLog,
    Node,
    SolveReport,
    init_primal_bound,
    record_leaf,
    solve,
)
from .generators import KINDS, GenSpec, generate, sample_suite
from .model import (
    Assignment,
    Instance,
    SolutionCheck,
    check_solution,
    dump_instance,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    make_instance,
)
from .mps import MpsParseError, load_mps, write_mps
from .rules import (
    GainPair,
    RuleConfig,
    ScoreParams,
    asymmetric_score,
    cardinality_exponents,
    detect_cardinality,
    efficacious_clip,
    last_assignment_exponents,
    make_rule,
    pa_select_mode,
    product_score,
    rule_names,
    select_variable,
)
from .simplex import LpOutcome, LpView, resolve_bound_change, solve_root

__version__ = "0.1.0"
