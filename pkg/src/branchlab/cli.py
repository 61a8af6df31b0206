"""Command-line interface: generate instances, run solves, drive campaigns."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .bench import (
    Campaign,
    bootstrap_optimum,
    read_results_csv,
    render_summary,
    run_campaign,
    write_results_csv,
)
from .engine import init_primal_bound, solve
from .generators import KINDS, GenSpec, generate
from .model import dump_instance, load_instance
from .mps import load_mps, write_mps


def _parse_override(text: str):
    key, _, value = text.partition("=")
    if not _:
        raise argparse.ArgumentTypeError(f"override {text!r} is not key=value")
    try:
        num = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"override value {value!r} is not numeric") from None
    return key, int(num) if num == int(num) else num


def _load_any(path: str):
    return load_mps(path) if path.endswith(".mps") else load_instance(path)


def _cmd_generate(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    overrides = dict(args.override or [])
    for i in range(args.count):
        spec = GenSpec(args.kind, args.seed + i, overrides)
        inst = generate(spec)
        base = os.path.join(args.out_dir, inst.name)
        dump_instance(inst, base + ".json")
        if args.mps:
            write_mps(inst, base + ".mps")
        print(base + ".json")
    return 0


def _optimum_for(path: str, inst, override) -> float:
    if override is not None:
        return override
    cache = path + ".optimum.json"
    if os.path.exists(cache):
        with open(cache) as fh:
            return json.load(fh)["optimum"]
    z_star = bootstrap_optimum(inst)
    with open(cache, "w") as fh:
        json.dump({"instance": inst.name, "optimum": z_star}, fh)
    return z_star


def _cmd_solve(args) -> int:
    inst = _load_any(args.instance)
    init = None
    if args.gap is not None:
        z_star = _optimum_for(args.instance, inst, args.optimum)
        init = init_primal_bound(z_star, args.gap, inst.sense)
    report = solve(
        inst,
        args.rule,
        init_primal=init,
        node_limit=args.node_limit,
        seed=args.seed,
        telemetry=args.telemetry,
    )
    print(report.to_json())
    return 0 if report.status != "Infeasible" or args.allow_infeasible else 1


def _campaign_from_config(data: dict) -> Campaign:
    instances = []
    for entry in data["instances"]:
        if isinstance(entry, str):
            instances.append(entry)
        else:
            instances.append(GenSpec(entry["kind"], entry["seed"], entry.get("overrides", {})))
    gaps = tuple(math.inf if g is None else float(g) for g in data["primal_gaps"])
    return Campaign(
        instances=tuple(instances),
        rules=tuple(data["rules"]),
        primal_gaps=gaps,
        seeds=tuple(data["seeds"]),
        node_limit=int(data["node_limit"]),
        reference_optima=dict(data.get("reference_optima", {})),
    )


def _cmd_bench(args) -> int:
    with open(args.config) as fh:
        campaign = _campaign_from_config(json.load(fh))
    rows, _ = run_campaign(campaign, parallelism=args.parallelism)
    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "results.csv")
    write_results_csv(rows, csv_path)
    summary = render_summary(rows, baseline=args.baseline)
    md_path = os.path.join(args.out_dir, "summary.md")
    with open(md_path, "w") as fh:
        fh.write(summary)
    print(csv_path)
    print(md_path)
    return 0


def _cmd_report(args) -> int:
    rows = read_results_csv(args.csv)
    summary = render_summary(rows, baseline=args.baseline)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(summary)
        print(args.out)
    else:
        print(summary, end="")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="branchlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write seeded benchmark instances")
    gen.add_argument("--kind", required=True, choices=KINDS)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--out-dir", default=".")
    gen.add_argument("--mps", action="store_true", help="also write an MPS file")
    gen.add_argument("--override", type=_parse_override, action="append", metavar="KEY=VALUE")
    gen.set_defaults(func=_cmd_generate)

    slv = sub.add_parser("solve", help="run one branch-and-bound solve")
    slv.add_argument("--instance", required=True, help=".json or .mps file")
    slv.add_argument("--rule", default="def-sb")
    slv.add_argument("--gap", type=float, default=None, help="initial primal gap (fraction)")
    slv.add_argument("--optimum", type=float, default=None, help="reference optimum for --gap")
    slv.add_argument("--node-limit", type=int, default=None)
    slv.add_argument("--seed", type=int, default=0)
    slv.add_argument("--telemetry", default=None, help="write a per-node CSV log here")
    slv.add_argument("--allow-infeasible", action="store_true")
    slv.set_defaults(func=_cmd_solve)

    ben = sub.add_parser("bench", help="run a campaign from a JSON config")
    ben.add_argument("--config", required=True)
    ben.add_argument("--out-dir", default="bench-out")
    ben.add_argument("--parallelism", type=int, default=1)
    ben.add_argument("--baseline", default=None)
    ben.set_defaults(func=_cmd_bench)

    rep = sub.add_parser("report", help="re-aggregate a results CSV")
    rep.add_argument("--csv", required=True)
    rep.add_argument("--baseline", default=None)
    rep.add_argument("--out", default=None)
    rep.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
