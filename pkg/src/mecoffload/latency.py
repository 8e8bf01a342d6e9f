"""Latency, drop and objective formulas.

Conventions: the waiting measure is the dimensionless ratio
(start - arrival) / (deadline - arrival - processing_time); the
"computational latency" adds that ratio to the execution seconds, which is
how the objective weighs waiting. Seconds-only figures are derived in the
metrics module from execution time plus actual waiting seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleScheduleError
from .model import ChannelParams, Scenario, Schedule, Server, Task, effective_duration


def waiting_ratio(task: Task, start: float) -> float:
    """Waiting time normalized by the task's scheduling slack."""
    denom = task.deadline - task.arrival - task.processing_time
    if denom <= 0:
        raise ValueError(
            f"task {task.id}: deadline - arrival - processing_time must be "
            f"positive, got {denom}")
    return (start - task.arrival) / denom


def uplink_rate(channel: ChannelParams) -> float:
    """Achievable uplink rate, bit/s: bandwidth * log2(1 + p*g/N0)."""
    return channel.bandwidth * math.log2(1.0 + channel.snr)


def comm_latency(task: Task, channel: ChannelParams) -> float:
    """Round-trip transfer time for the task payload, seconds."""
    return 2.0 * task.size_bits / uplink_rate(channel)


def computational_latency(task: Task, server: Server, start: float) -> float:
    """Execution seconds plus the dimensionless waiting ratio."""
    return effective_duration(task, server) + waiting_ratio(task, start)


@dataclass(frozen=True)
class LatencyBreakdown:
    """Per-task latency components for one placement."""

    comm: float  # round-trip seconds
    execution: float  # seconds
    waiting: float  # dimensionless ratio
    computational: float  # execution + waiting ratio (additive mix)


def task_breakdown(task: Task, server: Server, channel: ChannelParams,
                   start: float) -> LatencyBreakdown:
    execution = effective_duration(task, server)
    waiting = waiting_ratio(task, start)
    return LatencyBreakdown(
        comm=comm_latency(task, channel),
        execution=execution,
        waiting=waiting,
        computational=execution + waiting,
    )


def dropped_ratio(schedule: Schedule, n_tasks: int) -> float:
    """Fraction of tasks without a server: (N - #assigned) / N."""
    if n_tasks < 1:
        raise ValueError("dropped_ratio needs at least one task")
    return (n_tasks - schedule.n_assigned) / n_tasks


def drop_term(schedule: Schedule, n_tasks: int, n_servers: int) -> float:
    """Raw objective drop sum over all (task, server) pairs.

    Equals n_servers - #assigned / N: each assigned task contributes
    (n_servers - 1)/N, each dropped one n_servers/N.
    """
    if n_tasks < 1:
        raise ValueError("drop_term needs at least one task")
    return n_servers - schedule.n_assigned / n_tasks


def objective_value(schedule: Schedule, scenario: Scenario, *,
                    check: bool = True) -> float:
    """Scenario objective: weighted latency of assigned tasks + drop sum.

    Per assigned task the latency term is
    delta * (waiting_ratio + execution + comm_roundtrip); dropped tasks are
    charged only through the drop sum. Raises InfeasibleScheduleError when
    the schedule breaks feasibility (urgent drops are not an infeasibility
    here; they are priced by callers that penalize them).
    """
    if check:
        from .model import check_schedule
        violations = [v for v in check_schedule(schedule, scenario)
                      if v.kind != "urgent-dropped"]
        if violations:
            raise InfeasibleScheduleError(violations)
    if scenario.n_tasks == 0:
        return 0.0
    total = 0.0
    for tid in sorted(schedule.assignment):
        task = scenario.task_by_id[tid]
        server = scenario.server_by_id[schedule.assignment[tid]]
        start = schedule.start_times[tid]
        channel = scenario.channel_for(task.ue_id)
        total += scenario.delta * (waiting_ratio(task, start)
                                   + effective_duration(task, server)
                                   + comm_latency(task, channel))
    return total + drop_term(schedule, scenario.n_tasks, scenario.n_servers)


def efficiency_vs(alg_value: float, milp_value: float) -> float:
    """Relative gap of an algorithm against the exact optimum: (a - m)/a."""
    if alg_value == 0:
        raise ZeroDivisionError("efficiency undefined for a zero algorithm value")
    return (alg_value - milp_value) / alg_value
