"""Per-schedule metric reports and replication averaging.

Latency means are per-task means over the assigned tasks only (dropped tasks
contribute to drop ratios, not to latency means). Computational latency is
reported in seconds -- execution time plus the waiting time in seconds --
while the dimensionless waiting ratio that enters the objective is reported
separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .latency import comm_latency, objective_value, waiting_ratio
from .model import Scenario, Schedule, effective_duration


@dataclass(frozen=True)
class ClassMetrics:
    """Metrics of one task class (urgent or non-urgent)."""

    task_count: float
    assigned_count: float
    comm_latency_s: float
    comp_latency_s: float
    waiting_ratio_mean: float
    waiting_seconds_mean: float
    dropped_ratio: float


@dataclass(frozen=True)
class MetricsReport:
    comm_latency_s: float
    comp_latency_s: float
    waiting_ratio_mean: float
    waiting_seconds_mean: float
    dropped_ratio: float
    objective: float
    urgent: ClassMetrics
    non_urgent: ClassMetrics
    replication_count: int = 1


def _class_metrics(tasks, schedule: Schedule, scenario: Scenario,
                   ) -> ClassMetrics:
    count = len(tasks)
    comm: list[float] = []
    comp: list[float] = []
    ratio: list[float] = []
    wait_s: list[float] = []
    for task in tasks:
        sid = schedule.assignment.get(task.id)
        if sid is None:
            continue
        start = schedule.start_times[task.id]
        server = scenario.server_by_id[sid]
        w_ratio = waiting_ratio(task, start)
        wait_seconds = start - task.arrival
        comm.append(comm_latency(task, scenario.channel_for(task.ue_id)))
        comp.append(effective_duration(task, server) + wait_seconds)
        ratio.append(w_ratio)
        wait_s.append(wait_seconds)
    assigned = len(comm)

    def mean(xs: list[float]) -> float:
        return sum(xs) / len(xs) if xs else math.nan

    return ClassMetrics(
        task_count=float(count),
        assigned_count=float(assigned),
        comm_latency_s=mean(comm),
        comp_latency_s=mean(comp),
        waiting_ratio_mean=mean(ratio),
        waiting_seconds_mean=mean(wait_s),
        dropped_ratio=(count - assigned) / count if count else math.nan,
    )


def compute_metrics(schedule: Schedule, scenario: Scenario) -> MetricsReport:
    """Summarize one schedule: latency means, drop ratios, objective."""
    tasks = sorted(scenario.tasks, key=lambda t: t.id)
    overall = _class_metrics(tasks, schedule, scenario)
    urgent = _class_metrics([t for t in tasks if t.urgent], schedule, scenario)
    normal = _class_metrics([t for t in tasks if not t.urgent], schedule,
                            scenario)
    return MetricsReport(
        comm_latency_s=overall.comm_latency_s,
        comp_latency_s=overall.comp_latency_s,
        waiting_ratio_mean=overall.waiting_ratio_mean,
        waiting_seconds_mean=overall.waiting_seconds_mean,
        dropped_ratio=overall.dropped_ratio,
        objective=objective_value(schedule, scenario),
        urgent=urgent,
        non_urgent=normal,
    )


def _mean_field(values: list[float]) -> float:
    finite = [v for v in values if not math.isnan(v)]
    return sum(finite) / len(finite) if finite else math.nan


def _average_class(parts: list[ClassMetrics]) -> ClassMetrics:
    kwargs = {f.name: _mean_field([getattr(p, f.name) for p in parts])
              for f in fields(ClassMetrics)}
    return ClassMetrics(**kwargs)


def average_reports(reports: list[MetricsReport]) -> MetricsReport:
    """Field-wise mean across replications (NaN entries are left out)."""
    if not reports:
        raise ValueError("average_reports needs at least one report")
    scalar = {}
    for f in fields(MetricsReport):
        if f.name in ("urgent", "non_urgent", "replication_count"):
            continue
        scalar[f.name] = _mean_field([getattr(r, f.name) for r in reports])
    return MetricsReport(
        urgent=_average_class([r.urgent for r in reports]),
        non_urgent=_average_class([r.non_urgent for r in reports]),
        replication_count=sum(r.replication_count for r in reports),
        **scalar,
    )
