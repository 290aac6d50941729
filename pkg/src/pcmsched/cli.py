"""Command-line entry point: ``pcmsched {simulate,optimize,compare,validate,benchmark}``.

Exit codes: 0 success, 1 a checked property failed, 2 usage or validation error.

Output files (under ``--out``, else ``$PCMSCHED_OUT_DIR``, else ``./out``):

simulate   trace.csv
optimize   trace.csv, summary.json
compare    report.txt, report.json, table.csv, starts.csv
validate   validation.txt (only when an output directory is given)
benchmark  benchmark.csv
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import io
from .exceptions import (GapError, InvalidArgumentError, NumericInstabilityError, ParseError,
                         SchemaError, ScenarioValidationError)
from .harness import run_comparison, start_points, timed_solve_all
from .mdp import GridModel
from .metrics import validation_suite
from .solvers import blocks, deadband, macro, vi
from .trace import evaluate_actions

OPTIMIZERS = {"exact": vi.solve, "blocks": blocks.solve, "macro": macro.solve}
COMPARABLE = ("exact", "blocks", "macro", "deadband")


class UsageError(Exception):
    pass


def _scenario_args(p: argparse.ArgumentParser):
    p.add_argument("--scenario", type=Path, help="YAML scenario file (defaults apply when omitted)")
    p.add_argument("--season", choices=sorted(io.SEASONS),
                   help="use the synthetic weather preset for this season (and its HVAC mode)")
    p.add_argument("--mode", choices=("heating", "cooling"))
    p.add_argument("--horizon", type=int, help="horizon in hours")
    p.add_argument("--lambda", dest="lam", type=float, help="electricity weight in [0, 1]")
    p.add_argument("--block-length", type=int)
    p.add_argument("--substeps", type=int, help="integrator substeps per hour")
    p.add_argument("--discretization", type=float, help="temperature grid step in C")
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic weather")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--threads", type=int, default=1, help="cap on numeric library threads")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pcmsched", description="HVAC scheduling for PCM buildings")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="roll out a fixed schedule or the deadband relay")
    _scenario_args(sim)
    sim.add_argument("--schedule", default="deadband",
                     help="'deadband' or comma-separated hourly actions in [0, 1]")
    sim.add_argument("--start", type=float, help="initial indoor temperature")

    opt = sub.add_parser("optimize", help="solve for the cost-minimizing schedule")
    _scenario_args(opt)
    opt.add_argument("--solver", choices=sorted(OPTIMIZERS), default="blocks")
    opt.add_argument("--start", type=float, help="initial indoor temperature")

    cmp_ = sub.add_parser("compare", help="compare two solvers over start points")
    _scenario_args(cmp_)
    cmp_.add_argument("--solver", choices=COMPARABLE, default="blocks")
    cmp_.add_argument("--reference", choices=COMPARABLE, default="exact")
    cmp_.add_argument("--starts", type=int, default=61)
    cmp_.add_argument("--repeats", type=int, default=5, help="timing repeats (median is reported)")

    val = sub.add_parser("validate", help="randomized generalized-Bellman checks")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--models", type=int, default=1000)
    val.add_argument("--max-states", type=int, default=8)
    val.add_argument("--inject-fault", action="store_true",
                     help="perturb composed cost vectors (negative control)")
    val.add_argument("--out", type=Path)
    val.add_argument("--threads", type=int, default=1)

    bench = sub.add_parser("benchmark", help="median wall time of each solver over start points")
    _scenario_args(bench)
    bench.add_argument("--solver", action="append", choices=COMPARABLE,
                       help="solver to time (repeatable; default exact, blocks, macro)")
    bench.add_argument("--starts", type=int, default=61)
    bench.add_argument("--repeats", type=int, default=5)
    return ap


def load(args):
    doc = io.read_scenario_doc(args.scenario) if args.scenario else {}
    base = args.scenario.parent if args.scenario else Path(".")
    if not isinstance(doc, dict):
        raise ScenarioValidationError([("<root>", "expected a mapping")])
    sc = dict(doc.get("scenario") or {})
    if args.season:
        doc["weather"] = {"synthetic": {"season": args.season, "seed": args.seed}}
        sc.setdefault("mode", io.SEASONS[args.season].mode)
    elif isinstance(doc.get("weather"), dict) and isinstance(doc["weather"].get("synthetic"), dict):
        doc["weather"]["synthetic"].setdefault("seed", args.seed)
    overrides = {"mode": args.mode, "horizon_hours": args.horizon, "lambda": args.lam,
                 "block_length": args.block_length, "substeps": args.substeps,
                 "discretization_c": args.discretization}
    sc.update({k: v for k, v in overrides.items() if v is not None})
    doc["scenario"] = sc
    return io.parse_scenario(doc, base)


def _parse_schedule(text: str, horizon: int):
    try:
        actions = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--schedule must be 'deadband' or comma-separated numbers, got {text!r}")
    if len(actions) != horizon:
        raise UsageError(f"--schedule has {len(actions)} actions, horizon is {horizon}")
    if any(not 0.0 <= a <= 1.0 for a in actions):
        raise UsageError("--schedule actions must lie in [0, 1]")
    return actions


def _print_totals(trace, wall=None):
    print(f"total weighted cost  {trace.total_cost:.6f}")
    print(f"electricity          {trace.total_electricity:.4f} cents")
    print(f"discomfort           {trace.total_discomfort:.4f} C")
    print(f"on-hours             {trace.on_hours:g}")
    print(f"in band throughout   {'yes' if trace.feasible else 'no'}")
    if wall is not None:
        print(f"wall time            {wall:.4f} s")


def cmd_simulate(args) -> int:
    scenario, params = load(args)
    t0 = scenario.initial_t_in_c if args.start is None else args.start
    model = GridModel(scenario, params)
    if args.schedule == "deadband":
        trace = deadband.run_deadband(scenario, params, t0, model=model)
    else:
        actions = _parse_schedule(args.schedule, scenario.horizon_hours)
        trace = evaluate_actions(model, model.start_index(t0), actions)
    path = io.save_trace(trace, io.output_dir(args.out) / "trace.csv")
    _print_totals(trace)
    print(f"wrote {path}")
    return 0


def cmd_optimize(args) -> int:
    scenario, params = load(args)
    t0 = scenario.initial_t_in_c if args.start is None else args.start
    began = time.perf_counter()
    _, trace = OPTIMIZERS[args.solver](scenario, params, t0)
    wall = time.perf_counter() - began
    out = io.output_dir(args.out)
    io.save_trace(trace, out / "trace.csv")
    io.save_json({"solver": args.solver, "initial_t_in_c": t0, "horizon_hours": len(trace),
                  "total_weighted_cost": trace.total_cost,
                  "electricity_cents": trace.total_electricity,
                  "discomfort_c": trace.total_discomfort, "on_hours": trace.on_hours,
                  "in_band": bool(trace.feasible)}, out / "summary.json")
    _print_totals(trace, wall)
    print(f"wrote {out / 'trace.csv'} and {out / 'summary.json'}")
    return 0


def cmd_compare(args) -> int:
    scenario, params = load(args)
    if args.starts < 1 or args.repeats < 1:
        raise UsageError("--starts and --repeats must be positive")
    report, traces = run_comparison(args.solver, args.reference, scenario, params,
                                    args.starts, args.repeats)
    out = io.output_dir(args.out)
    text = report.format()
    (out / "report.txt").write_text(text + "\n", encoding="utf-8")
    io.save_json(report.to_dict(), out / "report.json")
    io.save_summary_csv(report.summaries, out / "table.csv")
    starts = start_points(scenario, args.starts)
    with (out / "starts.csv").open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["initial_t_in_c", f"cost_{args.solver}", f"cost_{args.reference}",
                    f"on_hours_{args.solver}", f"on_hours_{args.reference}"])
        for t, a, b in zip(starts, traces[args.solver], traces[args.reference]):
            w.writerow([repr(float(t)), repr(a.total_cost), repr(b.total_cost),
                        repr(a.on_hours), repr(b.on_hours)])
    print(text)
    return 0


def cmd_validate(args) -> int:
    if args.models < 1 or args.max_states < 1:
        raise UsageError("--models and --max-states must be positive")
    results = validation_suite(seed=args.seed, n_models=args.models, max_states=args.max_states,
                               inject_fault=args.inject_fault)
    lines = [f"generalized Bellman checks: seed {args.seed}, {args.models} models"]
    for r in results:
        lines.append(f"  {'PASS' if r.passed else 'FAIL'}  {r.name:<20} worst {r.worst:.3e}"
                     + (f"  ({r.detail})" if r.detail else ""))
    ok = all(r.passed for r in results)
    lines.append("all checks passed" if ok else
                 "failed: " + ", ".join(r.name for r in results if not r.passed))
    text = "\n".join(lines)
    print(text)
    if args.out or os.environ.get(io.OUT_DIR_ENV):
        (io.output_dir(args.out) / "validation.txt").write_text(text + "\n", encoding="utf-8")
    return 0 if ok else 1


def cmd_benchmark(args) -> int:
    scenario, params = load(args)
    solvers = args.solver or ["exact", "blocks", "macro"]
    starts = start_points(scenario, args.starts)
    rows = []
    for name in solvers:
        traces, wall = timed_solve_all(name, scenario, params, starts, args.repeats)
        mean_cost = float(np.mean([t.total_cost for t in traces]))
        feasible = float(np.mean([t.feasible for t in traces]))
        rows.append((name, wall, mean_cost, feasible))
        print(f"{name:<10} median {wall:9.4f} s   mean cost {mean_cost:14.4f}   in band {feasible:.0%}")
    path = io.output_dir(args.out) / "benchmark.csv"
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["solver", "median_wall_s", "mean_weighted_cost", "feasible_fraction"])
        for r in rows:
            w.writerow([r[0], repr(r[1]), repr(r[2]), repr(r[3])])
    print(f"wrote {path}")
    return 0


COMMANDS = {"simulate": cmd_simulate, "optimize": cmd_optimize, "compare": cmd_compare,
            "validate": cmd_validate, "benchmark": cmd_benchmark}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        with threadpool_limits(limits=args.threads):
            return COMMANDS[args.command](args)
    except UsageError as e:
        parser.error(str(e))
    except (ScenarioValidationError, ParseError, GapError, SchemaError, InvalidArgumentError,
            NumericInstabilityError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
