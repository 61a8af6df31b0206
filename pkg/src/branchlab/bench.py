"""Experiment harness: rule x gap x seed campaigns and the paper metrics.

A campaign runs every combination through the engine, records one
:class:`ResultRow` per run, and aggregates per (rule, gap) cell: shifted
geometric mean of tree sizes over solved runs (shift 100) and of the
remaining gap over unsolved runs (1% shift).  A gap of ``inf`` means the
solve starts without any primal bound.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import NODE_LIMIT, OPT, SolveReport, init_primal_bound, solve
from .generators import GenSpec, generate
from .model import Instance, load_instance
from .mps import load_mps

TREE_SHIFT = 100.0
GAP_SHIFT = 0.01

RESULT_COLUMNS = ("instance", "rule", "gap", "seed", "status", "tree_size", "gap_remaining", "wall_time")


def shifted_geomean(values, shift: float) -> float:
    """exp(mean(ln(v + shift))) - shift over a nonempty list."""
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        raise ValueError("shifted_geomean of an empty list")
    if shift < 0 or np.any(vals + shift <= 0):
        raise ValueError("all values plus shift must be positive")
    return float(np.exp(np.mean(np.log(vals + shift))) - shift)


def gap_remaining(report: SolveReport, z_star: float, root_lp: float) -> float:
    """Remaining primal-dual gap relative to the root integrality gap.

    Solved reports return exactly 0.  A degenerate zero root gap yields 0
    when solved and 1 otherwise.
    """
    if report.status == OPT:
        return 0.0
    denom = abs(z_star - root_lp)
    if denom <= 0 or not math.isfinite(denom):
        return 1.0
    num = abs(report.incumbent.bound - report.dual_bound)
    if not math.isfinite(num):
        return 1.0
    return min(max(num / denom, 0.0), 1.0)


@dataclass(frozen=True)
class ResultRow:
    instance: str
    rule: str
    gap: float  # inf = no initial primal bound
    seed: int
    status: str
    tree_size: int
    gap_remaining: float
    wall_time: float

    def as_record(self) -> tuple:
        return (
            self.instance,
            self.rule,
            repr(self.gap),
            self.seed,
            self.status,
            self.tree_size,
            repr(self.gap_remaining),
            repr(self.wall_time),
        )


@dataclass(frozen=True)
class Campaign:
    instances: tuple  # file paths (str) or GenSpec entries
    rules: tuple
    primal_gaps: tuple  # floats; inf = no initial bound
    seeds: tuple
    node_limit: int
    reference_optima: dict = field(default_factory=dict)


def _resolve_source(source) -> Instance:
    if isinstance(source, GenSpec):
        return generate(source)
    path = str(source)
    if path.endswith(".mps"):
        return load_mps(path)
    return load_instance(path)


def _source_label(source) -> str:
    if isinstance(source, GenSpec):
        return f"{source.kind}-{source.seed}"
    return str(source)


def _run_task(task):
    source, rule, gap, seed, node_limit, z_star = task
    inst = _resolve_source(source)
    start = time.perf_counter()
    try:
        init = None
        if math.isfinite(gap):
            init = init_primal_bound(z_star, gap, inst.sense)
        report = solve(inst, rule, init_primal=init, node_limit=node_limit, seed=seed)
        elapsed = time.perf_counter() - start
        root_lp = report.root_lp_value
        rem = gap_remaining(report, z_star if math.isfinite(gap) else report.incumbent.bound, root_lp)
        return ResultRow(inst.name, rule, gap, seed, report.status, report.tree_size, rem, elapsed)
    except Exception:
        elapsed = time.perf_counter() - start
        return ResultRow(inst.name, rule, gap, seed, "Error", 0, math.nan, elapsed)


def bootstrap_optimum(inst: Instance) -> float:
    """Reference optimum from an unlimited Def-SB solve."""
    report = solve(inst, "def-sb")
    if report.status != OPT:
        raise RuntimeError(f"bootstrap solve of {inst.name!r} ended {report.status}")
    return report.incumbent.bound


def run_campaign(c: Campaign, parallelism: int = 1):
    """Execute all combinations; returns (rows, aggregates).

    ``aggregates`` maps (rule, gap) to a dict with solved/unsolved counts and
    the two shifted geometric means (None when a cell has no such runs).
    """
    optima: dict[str, float] = {}
    needs_optimum = any(math.isfinite(g) for g in c.primal_gaps)
    sources = list(c.instances)
    for source in sources:
        label = _source_label(source)
        if label in c.reference_optima:
            optima[label] = c.reference_optima[label]
        elif needs_optimum:
            optima[label] = bootstrap_optimum(_resolve_source(source))

    tasks = []
    for source in sources:
        label = _source_label(source)
        for rule in c.rules:
            for gap in c.primal_gaps:
                for seed in c.seeds:
                    tasks.append((source, rule, float(gap), int(seed), c.node_limit, optima.get(label, math.nan)))

    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            rows = list(pool.map(_run_task, tasks))
    else:
        rows = [_run_task(t) for t in tasks]
    rows.sort(key=lambda r: (r.instance, r.rule, r.gap, r.seed))
    return rows, aggregate(rows)


def aggregate(rows) -> dict:
    cells: dict[tuple, dict] = {}
    for row in rows:
        cell = cells.setdefault(
            (row.rule, row.gap),
            {"solved": [], "unsolved": [], "errors": 0},
        )
        if row.status == OPT:
            cell["solved"].append(row.tree_size)
        elif row.status == NODE_LIMIT:
            cell["unsolved"].append(row.gap_remaining)
        else:
            cell["errors"] += 1
    out = {}
    for key, cell in cells.items():
        out[key] = {
            "solved": len(cell["solved"]),
            "unsolved": len(cell["unsolved"]),
            "errors": cell["errors"],
            "tree_geomean": shifted_geomean(cell["solved"], TREE_SHIFT) if cell["solved"] else None,
            "gap_geomean": shifted_geomean(cell["unsolved"], GAP_SHIFT) if cell["unsolved"] else None,
        }
    return out


def reduction_pct(baseline: float, value: float) -> float:
    """Percentage reduction of ``value`` relative to ``baseline``."""
    if baseline == 0:
        raise ValueError("baseline mean is zero")
    return 100.0 * (baseline - value) / baseline


def write_results_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(row.as_record())


def read_results_csv(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RESULT_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        rows = []
        for rec in reader:
            rows.append(
                ResultRow(
                    instance=rec[0],
                    rule=rec[1],
                    gap=float(rec[2]),
                    seed=int(rec[3]),
                    status=rec[4],
                    tree_size=int(rec[5]),
                    gap_remaining=float(rec[6]),
                    wall_time=float(rec[7]),
                )
            )
    return rows


def _fmt(value, digits=1) -> str:
    if value is None:
        return "-"
    return f"{value:.{digits}f}"


def render_summary(rows, baseline: str | None = None) -> str:
    """Markdown tables mirroring the benchmark layout: means per rule and gap."""
    aggregates = aggregate(rows)
    rules = sorted({r.rule for r in rows})
    gaps = sorted({r.gap for r in rows})
    if baseline is not None and baseline not in rules:
        raise ValueError(f"baseline rule {baseline!r} not present in results")

    def gap_label(g):
        return "none" if math.isinf(g) else f"{100 * g:g}%"

    buf = io.StringIO()
    buf.write("# Campaign summary\n\n")
    buf.write("## Tree size, shifted geometric mean over solved runs (shift 100)\n\n")
    buf.write("| rule | " + " | ".join(gap_label(g) for g in gaps) + " |\n")
    buf.write("|---" * (len(gaps) + 1) + "|\n")
    for rule in rules:
        cells = [_fmt(aggregates.get((rule, g), {}).get("tree_geomean")) for g in gaps]
        buf.write(f"| {rule} | " + " | ".join(cells) + " |\n")
    if baseline is not None:
        buf.write(f"\n## Tree-size reduction vs {baseline} (%)\n\n")
        buf.write("| rule | " + " | ".join(gap_label(g) for g in gaps) + " |\n")
        buf.write("|---" * (len(gaps) + 1) + "|\n")
        for rule in rules:
            cells = []
            for g in gaps:
                base = aggregates.get((baseline, g), {}).get("tree_geomean")
                mine = aggregates.get((rule, g), {}).get("tree_geomean")
                cells.append(_fmt(reduction_pct(base, mine)) if base and mine is not None else "-")
            buf.write(f"| {rule} | " + " | ".join(cells) + " |\n")
    buf.write("\n## Gap remaining, shifted geometric mean over unsolved runs (shift 0.01)\n\n")
    buf.write("| rule | " + " | ".join(gap_label(g) for g in gaps) + " |\n")
    buf.write("|---" * (len(gaps) + 1) + "|\n")
    for rule in rules:
        cells = [_fmt(aggregates.get((rule, g), {}).get("gap_geomean"), 4) for g in gaps]
        buf.write(f"| {rule} | " + " | ".join(cells) + " |\n")
    return buf.getvalue()
