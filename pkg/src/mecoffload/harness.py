"""Experiment harness: seeded grids, replications, solver sweeps, exports.

A plan is a grid of workload configurations crossed with solvers and
replications. Every (grid point, replication) pair derives its own workload
seed from (base_seed, grid_index, replication), and all solvers of that pair
share the identical scenario. Population-search solvers additionally derive
their search seed from (base_seed, grid_index, replication, solver slot in a
fixed canonical order), so adding or removing solvers never shifts another
solver's stream and solver order does not affect any number.

Failures and size skips are recorded per (grid, replication, solver); they
never abort the sweep. Wall-clock timings are recorded only when the plan
asks for them -- with timings off, every exported byte is a pure function of
the plan, so repeated runs produce identical files.

Set OFFLOAD_THREADS=<n> to fan (grid, replication) units across processes;
the default is serial. Results are deterministic either way.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import defaults
from ._version import __version__
from .errors import (InfeasibleModelError, InstanceTooLargeError,
                     MecOffloadError, ModelTooLargeError)
from .greedy import schedule_fcfs, schedule_stf
from .latency import efficiency_vs
from .metaheuristics import GaParams, PsoParams, run_ga, run_pso
from .metrics import MetricsReport, average_reports, compute_metrics
from .milp import solve_scenario
from .model import Scenario, Schedule
from .workload import (WorkloadConfig, config_for_replication, derive_seed,
                       gen_scenario)

CANONICAL_SOLVERS = ("fcfs", "stf", "milp", "ga", "pso")


@dataclass(frozen=True)
class ExperimentPlan:
    configs: tuple[WorkloadConfig, ...]
    solvers: tuple[str, ...] = CANONICAL_SOLVERS
    replications: int = 10
    base_seed: int = 0
    server_count: int = defaults.DEFAULT_SERVER_COUNT
    cpus_per_server: int = defaults.DEFAULT_CPUS_PER_SERVER
    delta: float = defaults.DEFAULT_DELTA
    slot_width: float | None = None
    milp_task_cap: int = 60
    milp_formulation: str = "auto"
    gap_tol: float = 1e-6
    ga_params: GaParams = field(default_factory=GaParams)
    pso_params: PsoParams = field(default_factory=PsoParams)
    record_wall_time: bool = False


@dataclass(frozen=True)
class RunRecord:
    grid_index: int
    ue_count: int
    tasks_per_ue: int
    solver: str
    replication: int
    report: MetricsReport
    wall_time: float
    trace: tuple[tuple[int, float], ...] | None = None
    bound_trace: tuple[tuple[int, float], ...] | None = None


@dataclass(frozen=True)
class SkipRecord:
    grid_index: int
    ue_count: int
    tasks_per_ue: int
    solver: str
    replication: int
    kind: str
    reason: str


@dataclass(frozen=True)
class ExperimentResult:
    plan: ExperimentPlan
    records: tuple[RunRecord, ...]
    skips: tuple[SkipRecord, ...]


def build_scenario(plan: ExperimentPlan, grid_index: int,
                   replication: int) -> Scenario:
    """The scenario shared by all solvers of one (grid, replication) unit."""
    from .workload import default_servers

    cfg = config_for_replication(plan.configs[grid_index], plan.base_seed,
                                 grid_index, replication)
    servers = tuple(replace(s, cpu_count=plan.cpus_per_server)
                    for s in default_servers(plan.server_count))
    return gen_scenario(cfg, servers=servers, delta=plan.delta,
                        slot_width=plan.slot_width)


def _search_rng(plan: ExperimentPlan, grid_index: int, replication: int,
                solver: str) -> np.random.Generator:
    slot = CANONICAL_SOLVERS.index(solver)
    return np.random.default_rng(
        derive_seed(plan.base_seed, grid_index, replication, slot))


def _dispatch(solver: str, scenario: Scenario, plan: ExperimentPlan,
              grid_index: int, replication: int,
              ) -> tuple[Schedule,
                         tuple[tuple[int, float], ...] | None,
                         tuple[tuple[int, float], ...] | None]:
    if solver == "fcfs":
        return schedule_fcfs(scenario), None, None
    if solver == "stf":
        return schedule_stf(scenario), None, None
    if solver == "milp":
        run = solve_scenario(scenario, formulation=plan.milp_formulation,
                             gap_tol=plan.gap_tol)
        return run.schedule, run.result.incumbent_trace, run.result.bound_trace
    if solver == "ga":
        rng = _search_rng(plan, grid_index, replication, solver)
        res = run_ga(scenario, plan.ga_params, rng=rng)
        return res.schedule, tuple(enumerate(res.trace)), None
    if solver == "pso":
        rng = _search_rng(plan, grid_index, replication, solver)
        res = run_pso(scenario, plan.pso_params, rng=rng)
        return res.schedule, tuple(enumerate(res.trace)), None
    raise ValueError(f"unknown solver {solver!r}")


def _run_unit(payload: tuple[ExperimentPlan, int, int],
              ) -> tuple[list[RunRecord], list[SkipRecord]]:
    plan, grid_index, replication = payload
    cfg = plan.configs[grid_index]
    records: list[RunRecord] = []
    skips: list[SkipRecord] = []

    def skip(solver: str, kind: str, reason: str) -> None:
        skips.append(SkipRecord(grid_index, cfg.ue_count, cfg.tasks_per_ue,
                                solver, replication, kind, reason))

    try:
        scenario = build_scenario(plan, grid_index, replication)
    except Exception as exc:  # noqa: BLE001 - a bad grid point must not abort
        for solver in plan.solvers:
            skip(solver, "scenario-error", f"{type(exc).__name__}: {exc}")
        return records, skips

    for solver in plan.solvers:
        if solver == "milp" and scenario.n_tasks > plan.milp_task_cap:
            skip(solver, "task-cap",
                 f"{scenario.n_tasks} tasks exceed milp_task_cap="
                 f"{plan.milp_task_cap}")
            continue
        started = time.perf_counter()
        try:
            schedule, trace, bound_trace = _dispatch(
                solver, scenario, plan, grid_index, replication)
        except ModelTooLargeError as exc:
            skip(solver, "model-too-large", str(exc))
            continue
        except InstanceTooLargeError as exc:
            skip(solver, "instance-too-large", str(exc))
            continue
        except InfeasibleModelError as exc:
            skip(solver, "infeasible", str(exc))
            continue
        except Exception as exc:  # noqa: BLE001 - record, never abort
            skip(solver, "error", f"{type(exc).__name__}: {exc}")
            continue
        wall = time.perf_counter() - started
        report = compute_metrics(schedule, scenario)
        records.append(RunRecord(
            grid_index=grid_index,
            ue_count=cfg.ue_count,
            tasks_per_ue=cfg.tasks_per_ue,
            solver=solver,
            replication=replication,
            report=report,
            wall_time=wall,
            trace=trace,
            bound_trace=bound_trace,
        ))
    return records, skips


def run_experiment(plan: ExperimentPlan) -> ExperimentResult:
    """Run the whole plan; returns all records and skips, solver-sorted."""
    for solver in plan.solvers:
        if solver not in CANONICAL_SOLVERS:
            raise ValueError(f"unknown solver {solver!r}; "
                             f"known: {CANONICAL_SOLVERS}")
    if plan.replications < 1:
        raise ValueError("replications must be >= 1")
    if not plan.configs:
        raise ValueError("plan needs at least one workload configuration")

    units = [(plan, g, r)
             for g in range(len(plan.configs))
             for r in range(plan.replications)]
    threads = int(os.environ.get("OFFLOAD_THREADS", "1") or "1")
    if threads > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_run_unit, units, chunksize=1))
    else:
        outcomes = [_run_unit(u) for u in units]

    records: list[RunRecord] = []
    skips: list[SkipRecord] = []
    for recs, sks in outcomes:
        records.extend(recs)
        skips.extend(sks)
    order = {name: i for i, name in enumerate(CANONICAL_SOLVERS)}
    records.sort(key=lambda r: (r.grid_index, r.replication, order[r.solver]))
    skips.sort(key=lambda r: (r.grid_index, r.replication, order[r.solver]))
    return ExperimentResult(plan, tuple(records), tuple(skips))


# --- export ----------------------------------------------------------------

RESULT_COLUMNS = (
    "grid_id", "ue_count", "tasks_per_ue", "solver", "replication",
    "comm_latency_s", "comp_latency_s", "waiting_ratio_mean", "dropped_ratio",
    "urgent_comm_latency_s", "urgent_comp_latency_s", "urgent_dropped_ratio",
    "objective", "wall_time_s",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _record_row(rec: RunRecord, *, timed: bool) -> dict[str, object]:
    rep = rec.report
    return {
        "grid_id": rec.grid_index,
        "ue_count": rec.ue_count,
        "tasks_per_ue": rec.tasks_per_ue,
        "solver": rec.solver,
        "replication": rec.replication,
        "comm_latency_s": rep.comm_latency_s,
        "comp_latency_s": rep.comp_latency_s,
        "waiting_ratio_mean": rep.waiting_ratio_mean,
        "dropped_ratio": rep.dropped_ratio,
        "urgent_comm_latency_s": rep.urgent.comm_latency_s,
        "urgent_comp_latency_s": rep.urgent.comp_latency_s,
        "urgent_dropped_ratio": rep.urgent.dropped_ratio,
        "objective": rep.objective,
        "wall_time_s": rec.wall_time if timed else 0.0,
    }


def plan_hash(plan: ExperimentPlan) -> str:
    """Stable digest of every plan knob (for provenance in exports)."""
    canon = json.dumps(asdict(plan), sort_keys=True, default=repr)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _write_csv(path: Path, columns: tuple[str, ...],
               rows: list[dict[str, object]]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(row[c]) for c in columns])
    except OSError as exc:
        raise MecOffloadError(f"failed writing {path}: {exc}") from exc


def _aggregate_rows(result: ExperimentResult, *,
                    timed: bool) -> list[dict[str, object]]:
    by_key: dict[tuple[int, str], list[RunRecord]] = {}
    for rec in result.records:
        by_key.setdefault((rec.grid_index, rec.solver), []).append(rec)
    order = {name: i for i, name in enumerate(CANONICAL_SOLVERS)}
    rows = []
    metric_cols = RESULT_COLUMNS[5:]
    for (gi, solver) in sorted(by_key, key=lambda k: (k[0], order[k[1]])):
        recs = by_key[(gi, solver)]
        raw = [_record_row(r, timed=timed) for r in recs]
        row: dict[str, object] = {
            "grid_id": gi,
            "ue_count": recs[0].ue_count,
            "tasks_per_ue": recs[0].tasks_per_ue,
            "solver": solver,
            "replications": len(recs),
        }
        for col in metric_cols:
            row["mean_" + col] = math.fsum(r[col] for r in raw) / len(raw)
        rows.append(row)
    return rows


AGGREGATE_COLUMNS = (("grid_id", "ue_count", "tasks_per_ue", "solver",
                      "replications")
                     + tuple("mean_" + c for c in RESULT_COLUMNS[5:]))

EFFICIENCY_METRICS = ("objective", "comm_latency_s", "comp_latency_s",
                      "dropped_ratio")

EFFICIENCY_COLUMNS = (("grid_id", "solver")
                      + tuple(m + "_efficiency" for m in EFFICIENCY_METRICS))


def _efficiency_rows(agg_rows: list[dict[str, object]],
                     ) -> list[dict[str, object]]:
    milp_by_grid = {row["grid_id"]: row for row in agg_rows
                    if row["solver"] == "milp"}
    out = []
    for row in agg_rows:
        if row["solver"] == "milp":
            continue
        base = milp_by_grid.get(row["grid_id"])
        if base is None:
            continue
        eff_row: dict[str, object] = {"grid_id": row["grid_id"],
                                      "solver": row["solver"]}
        for metric in EFFICIENCY_METRICS:
            alg = row["mean_" + metric]
            ref = base["mean_" + metric]
            try:
                eff_row[metric + "_efficiency"] = efficiency_vs(alg, ref)
            except ZeroDivisionError:
                eff_row[metric + "_efficiency"] = ""
        out.append(eff_row)
    return out


def export_results(result: ExperimentResult, out_dir: str | Path) -> dict[str, Path]:
    """Write results.csv, results.json, aggregates.csv, efficiency.csv and
    per-run convergence traces under `out_dir`; returns the written paths.

    With the plan's `record_wall_time` off, all wall_time_s fields are 0.0
    and repeated exports of the same plan are byte-identical.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise MecOffloadError(f"failed creating {out}: {exc}") from exc
    timed = result.plan.record_wall_time
    paths: dict[str, Path] = {}

    rows = [_record_row(rec, timed=timed) for rec in result.records]
    paths["results_csv"] = out / "results.csv"
    _write_csv(paths["results_csv"], RESULT_COLUMNS, rows)

    agg_rows = _aggregate_rows(result, timed=timed)
    paths["aggregates_csv"] = out / "aggregates.csv"
    _write_csv(paths["aggregates_csv"], AGGREGATE_COLUMNS, agg_rows)

    eff_rows = _efficiency_rows(agg_rows)
    if eff_rows:
        paths["efficiency_csv"] = out / "efficiency.csv"
        _write_csv(paths["efficiency_csv"], EFFICIENCY_COLUMNS, eff_rows)

    trace_dir = out / "traces"
    wrote_trace = False
    for rec in result.records:
        if rec.trace is None:
            continue
        if not wrote_trace:
            trace_dir.mkdir(exist_ok=True)
            wrote_trace = True
        name = f"grid{rec.grid_index}_rep{rec.replication}_{rec.solver}.csv"
        _write_csv(trace_dir / name, ("iteration", "best_objective"),
                   [{"iteration": it, "best_objective": val}
                    for it, val in rec.trace])
        if rec.bound_trace:
            bname = (f"grid{rec.grid_index}_rep{rec.replication}_"
                     f"{rec.solver}_bound.csv")
            _write_csv(trace_dir / bname, ("iteration", "bound"),
                       [{"iteration": it, "bound": val}
                        for it, val in rec.bound_trace])
    if wrote_trace:
        paths["traces_dir"] = trace_dir

    def clean(obj):
        # results.json must be strict JSON; NaN (possible in urgent-class
        # means when a scenario has no urgent task) maps to null.
        if isinstance(obj, float):
            return None if math.isnan(obj) else obj
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        return obj

    doc = {
        "metadata": {
            "package_version": __version__,
            "base_seed": result.plan.base_seed,
            "config_hash": plan_hash(result.plan),
            "record_wall_time": timed,
            "replications": result.plan.replications,
            "solvers": list(result.plan.solvers),
            "latency_means": "per assigned task",
            "grid": [asdict(cfg) for cfg in result.plan.configs],
        },
        "records": rows,
        "aggregates": agg_rows,
        "skips": [asdict(s) for s in result.skips],
    }
    paths["results_json"] = out / "results.json"
    try:
        paths["results_json"].write_text(
            json.dumps(clean(doc), indent=2, sort_keys=True,
                       allow_nan=False) + "\n",
            encoding="utf-8")
    except OSError as exc:
        raise MecOffloadError(
            f"failed writing {paths['results_json']}: {exc}") from exc
    return paths


def summarize_by_solver(result: ExperimentResult) -> dict[str, MetricsReport]:
    """Average each solver's reports across the whole grid (for quick looks)."""
    by_solver: dict[str, list[MetricsReport]] = {}
    for rec in result.records:
        by_solver.setdefault(rec.solver, []).append(rec.report)
    return {solver: average_reports(reports)
            for solver, reports in sorted(by_solver.items())}
