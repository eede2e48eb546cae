"""Command-line surface: fit-profile, optimize, simulate, and compare."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as pio
from .optimizer import (
    GridTooLarge,
    Infeasible,
    solve_horizontal,
    solve_hybrid,
    solve_vertical,
)
from .profile import DegenerateSamples, fit_profile
from .simulator import Policy, run


def _cmd_fit_profile(args: argparse.Namespace) -> int:
    samples = pio.load_samples_csv(args.csv)
    profile = fit_profile(samples, b_max=args.bmax, c_max=args.cmax, name=args.name)
    doc = pio.profile_to_dict(profile)
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def _cmd_optimize(args: argparse.Namespace) -> int:
    spec = pio.load_pipeline_spec(args.spec)
    solver = {
        "vertical": solve_vertical,
        "horizontal": solve_horizontal,
        "hybrid": solve_hybrid,
    }[args.mode]
    try:
        plan = solver(spec, args.lam)
    except Infeasible as exc:
        print(json.dumps({"feasible": False, "mode": args.mode, "reason": str(exc)}, indent=2))
        return 0
    print(json.dumps({"feasible": True, **pio.plan_to_dict(plan)}, indent=2))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = pio.load_run_config(args.config)
    scenario = pio.scenario_from_config(cfg, seed=args.seed)
    report = run(scenario)
    out_dir = Path(args.out) if args.out else pio.default_output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem
    csv_path = out_dir / f"{stem}_{scenario.policy.value}_seed{args.seed}.csv"
    json_path = out_dir / f"{stem}_{scenario.policy.value}_seed{args.seed}.json"
    pio.write_report(report, csv_path, format="csv")
    pio.write_report(report, json_path, format="json")
    print(json.dumps(pio.report_aggregates(report), indent=2))
    print(f"per-second series: {csv_path}", file=sys.stderr)
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    cfg = pio.load_run_config(args.config)
    policies = (Policy.JOINT, Policy.HORIZONTAL_ONLY, Policy.VERTICAL_ONLY)
    rows = []
    for policy in policies:
        scenario = pio.scenario_from_config(cfg, seed=args.seed, policy=policy)
        report = run(scenario)
        rows.append((policy.value, report))
    header = f"{'policy':<12} {'viol_rate':>10} {'served':>8} {'dropped':>8} {'core_s':>12} {'p99_ms':>10}"
    print(header)
    print("-" * len(header))
    for name, rep in rows:
        print(
            f"{name:<12} {rep.violation_rate:>10.4f} {rep.served:>8} "
            f"{rep.dropped:>8} {rep.total_core_seconds:>12.1f} {rep.p99_ms_overall:>10.1f}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pipescale",
        description="Plan and simulate joint vertical + horizontal autoscaling "
        "for multi-stage inference pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit-profile", help="fit a latency profile from a samples CSV")
    p_fit.add_argument("csv", help="CSV with header batch,cores,latency_ms")
    p_fit.add_argument("--bmax", type=int, default=16)
    p_fit.add_argument("--cmax", type=int, default=16)
    p_fit.add_argument("--name", default="model")
    p_fit.add_argument("--out", help="also write the profile JSON here")
    p_fit.set_defaults(func=_cmd_fit_profile)

    p_opt = sub.add_parser("optimize", help="solve one plan for a pipeline spec")
    p_opt.add_argument("spec", help="pipeline spec JSON")
    p_opt.add_argument("--lambda", dest="lam", type=float, required=True, help="ingress rps")
    p_opt.add_argument("--mode", choices=["vertical", "horizontal", "hybrid"], required=True)
    p_opt.set_defaults(func=_cmd_optimize)

    p_sim = sub.add_parser("simulate", help="replay a trace under one policy")
    p_sim.add_argument("config", help="run config JSON")
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--out", help="output directory (default $PIPESCALE_OUT or .)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_cmp = sub.add_parser("compare", help="run joint/horizontal/vertical side by side")
    p_cmp.add_argument("config", help="run config JSON")
    p_cmp.add_argument("--seed", type=int, required=True)
    p_cmp.set_defaults(func=_cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (pio.ParseError, DegenerateSamples, GridTooLarge, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
