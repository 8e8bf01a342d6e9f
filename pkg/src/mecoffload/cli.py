"""Command-line interface.

Subcommands:
  generate      draw a random scenario and write it in the text format
  run           solve one scenario file with a chosen solver, print metrics
  experiment    run a full plan from a JSON config and export CSV/JSON
  oracle-check  compare the exact solver against exhaustive enumeration
  export-lp     write a scenario's mixed-integer model as LP text

Exit codes: 0 success, 1 failure (including oracle mismatches), 2 usage
errors, 3 infeasible models (urgent tasks that cannot be scheduled).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import defaults
from ._version import __version__
from .errors import InfeasibleModelError, MecOffloadError
from .greedy import schedule_fcfs, schedule_stf
from .harness import ExperimentPlan, export_results, run_experiment
from .metaheuristics import GaParams, PsoParams, run_ga, run_pso
from .metrics import compute_metrics
from .milp import build_model, export_lp, solve_scenario
from .model import Scenario
from .oracle import MAX_SERVERS, MAX_TASKS, enumerate_optimal
from .scenario_io import read_scenario, serialize_scenario
from .workload import (WorkloadConfig, default_servers, derive_seed,
                       gen_scenario)


def _write_out(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise MecOffloadError(f"failed writing {out}: {exc}") from exc


def _cmd_generate(args: argparse.Namespace) -> int:
    cfg = WorkloadConfig(
        ue_count=args.ues,
        tasks_per_ue=args.tasks_per_ue,
        arrival_rate=args.rate,
        rng_seed=args.seed,
    )
    scenario = gen_scenario(
        cfg,
        servers=default_servers(args.servers),
        delta=args.delta,
        slot_width=args.slot_width,
        max_slots=args.max_slots,
    )
    _write_out(serialize_scenario(scenario), args.out)
    return 0


def _print_metrics(scenario: Scenario, schedule, solver: str) -> None:
    report = compute_metrics(schedule, scenario)

    def num(x: float) -> str:
        return "n/a" if isinstance(x, float) and math.isnan(x) else f"{x:.6g}"

    print(f"solver={solver} tasks={scenario.n_tasks} "
          f"servers={scenario.n_servers} assigned={schedule.n_assigned}")
    print(f"comm_latency_s={num(report.comm_latency_s)} "
          f"comp_latency_s={num(report.comp_latency_s)} "
          f"waiting_ratio={num(report.waiting_ratio_mean)}")
    print(f"dropped_ratio={num(report.dropped_ratio)} "
          f"objective={num(report.objective)}")
    print(f"urgent: count={int(report.urgent.task_count)} "
          f"dropped_ratio={num(report.urgent.dropped_ratio)} "
          f"comm_latency_s={num(report.urgent.comm_latency_s)} "
          f"comp_latency_s={num(report.urgent.comp_latency_s)}")


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = read_scenario(args.scenario)
    solver = args.solver
    if solver == "fcfs":
        schedule = schedule_fcfs(scenario)
    elif solver == "stf":
        schedule = schedule_stf(scenario)
    elif solver == "milp":
        run = solve_scenario(scenario, formulation=args.formulation,
                             gap_tol=args.gap_tol)
        schedule = run.schedule
    elif solver == "ga":
        schedule = run_ga(scenario, GaParams(), rng=args.seed).schedule
    elif solver == "pso":
        schedule = run_pso(scenario, PsoParams(), rng=args.seed).schedule
    else:  # pragma: no cover - argparse restricts choices
        raise MecOffloadError(f"unknown solver {solver}")
    _print_metrics(scenario, schedule, solver)
    return 0


_PLAN_INT_KEYS = ("replications", "base_seed", "server_count",
                  "cpus_per_server", "milp_task_cap")
_PLAN_FLOAT_KEYS = ("delta", "slot_width", "gap_tol")
_PLAN_KEYS = (_PLAN_INT_KEYS + _PLAN_FLOAT_KEYS
              + ("solvers", "milp_formulation", "record_wall_time"))


def _plan_from_config(doc: dict, args: argparse.Namespace) -> ExperimentPlan:
    if not isinstance(doc, dict) or "grid" not in doc:
        raise MecOffloadError("experiment config must be a JSON object "
                              "with a 'grid' list")
    unknown = set(doc) - {"grid", "ga", "pso", *_PLAN_KEYS}
    if unknown:
        raise MecOffloadError("unknown experiment config keys: "
                              + ", ".join(sorted(unknown)))
    configs = []
    for entry in doc["grid"]:
        try:
            configs.append(WorkloadConfig(**entry))
        except TypeError as exc:
            raise MecOffloadError(f"bad grid entry {entry!r}: {exc}") from exc
    kwargs = {}
    for key in _PLAN_KEYS:
        if key in doc:
            kwargs[key] = doc[key]
    for key in _PLAN_INT_KEYS + _PLAN_FLOAT_KEYS:
        if kwargs.get(key) is None:
            continue
        caster = int if key in _PLAN_INT_KEYS else float
        try:
            kwargs[key] = caster(kwargs[key])
        except (TypeError, ValueError) as exc:
            raise MecOffloadError(
                f"bad experiment config: {key}={kwargs[key]!r} is not "
                "a number") from exc
    if "solvers" in kwargs:
        kwargs["solvers"] = tuple(kwargs["solvers"])
    if "ga" in doc:
        kwargs["ga_params"] = GaParams(**doc["ga"])
    if "pso" in doc:
        kwargs["pso_params"] = PsoParams(**doc["pso"])
    if args.base_seed is not None:
        kwargs["base_seed"] = args.base_seed
    if args.timings:
        kwargs["record_wall_time"] = True
    try:
        return ExperimentPlan(configs=tuple(configs), **kwargs)
    except TypeError as exc:
        raise MecOffloadError(f"bad experiment config: {exc}") from exc


def _cmd_experiment(args: argparse.Namespace) -> int:
    try:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise MecOffloadError(f"cannot read {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MecOffloadError(f"bad JSON in {args.config}: {exc}") from exc
    plan = _plan_from_config(doc, args)
    result = run_experiment(plan)
    paths = export_results(result, args.out)
    print(f"ran {len(result.records)} solver runs "
          f"({len(result.skips)} skipped) over "
          f"{len(plan.configs)} grid points x {plan.replications} "
          f"replications")
    print(f"wrote {paths['results_csv']}")
    return 0


def _cmd_oracle_check(args: argparse.Namespace) -> int:
    if args.ues * args.tasks_per_ue > MAX_TASKS:
        raise MecOffloadError(
            f"oracle is capped at {MAX_TASKS} tasks; "
            f"got {args.ues}x{args.tasks_per_ue}")
    if args.servers > MAX_SERVERS:
        raise MecOffloadError(f"oracle is capped at {MAX_SERVERS} servers")
    matches = 0
    for k in range(args.count):
        cfg = WorkloadConfig(
            ue_count=args.ues,
            tasks_per_ue=args.tasks_per_ue,
            arrival_rate=args.rate,
            rng_seed=derive_seed(args.seed, k),
        )
        scenario = gen_scenario(cfg, servers=default_servers(args.servers),
                                max_slots=18)
        reference = enumerate_optimal(scenario)
        oracle_dropped_urgent = (
            reference.objective >= defaults.URGENT_DROP_PENALTY)
        try:
            run = solve_scenario(scenario, formulation="full",
                                 gap_tol=args.gap_tol)
        except InfeasibleModelError:
            ok = oracle_dropped_urgent
            detail = "exact solver infeasible"
        else:
            ok = (not oracle_dropped_urgent
                  and abs(run.result.objective - reference.objective) <= 1e-6)
            detail = (f"exact={run.result.objective!r} "
                      f"reference={reference.objective!r}")
        if ok:
            matches += 1
        else:
            print(f"mismatch on scenario {k}: {detail}", file=sys.stderr)
    print(f"{matches}/{args.count} match")
    return 0 if matches == args.count else 1


def _cmd_export_lp(args: argparse.Namespace) -> int:
    scenario = read_scenario(args.scenario)
    model = build_model(scenario, args.formulation)
    _write_out(export_lp(model), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mecoffload",
        description="Edge offloading schedulers: exact, population-based, "
                    "and greedy baselines over one scenario model.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a random scenario file")
    p.add_argument("--ues", type=int, default=4)
    p.add_argument("--tasks-per-ue", type=int, default=3)
    p.add_argument("--servers", type=int, default=defaults.DEFAULT_SERVER_COUNT)
    p.add_argument("--rate", type=float, default=2.0,
                   help="task arrivals per second per UE")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=defaults.DEFAULT_DELTA,
                   help="latency weight in the objective")
    p.add_argument("--slot-width", type=float, default=None,
                   help="grid slot width in seconds (default: auto)")
    p.add_argument("--max-slots", type=int, default=defaults.DEFAULT_MAX_SLOTS)
    p.add_argument("--out", default="-", help="output path or - for stdout")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("run", help="solve one scenario file")
    p.add_argument("scenario", help="scenario file path")
    p.add_argument("--solver", choices=("fcfs", "stf", "milp", "ga", "pso"),
                   default="milp")
    p.add_argument("--seed", type=int, default=0,
                   help="search seed for ga/pso")
    p.add_argument("--gap-tol", type=float, default=1e-6)
    p.add_argument("--formulation", choices=("auto", "full", "compact"),
                   default="auto")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("experiment", help="run a JSON experiment plan")
    p.add_argument("--config", required=True, help="plan JSON path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--base-seed", type=int, default=None,
                   help="override the plan's base seed")
    p.add_argument("--timings", action="store_true",
                   help="record real wall-clock times (breaks byte-for-byte "
                        "reproducibility of the exports)")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("oracle-check",
                       help="verify the exact solver against enumeration")
    p.add_argument("--count", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ues", type=int, default=2)
    p.add_argument("--tasks-per-ue", type=int, default=2)
    p.add_argument("--servers", type=int, default=2)
    p.add_argument("--rate", type=float, default=2.0)
    p.add_argument("--gap-tol", type=float, default=1e-6)
    p.set_defaults(func=_cmd_oracle_check)

    p = sub.add_parser("export-lp", help="write the model in LP format")
    p.add_argument("scenario", help="scenario file path")
    p.add_argument("--formulation", choices=("auto", "full", "compact"),
                   default="auto")
    p.add_argument("--out", default="-", help="output path or - for stdout")
    p.set_defaults(func=_cmd_export_lp)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleModelError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except MecOffloadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
