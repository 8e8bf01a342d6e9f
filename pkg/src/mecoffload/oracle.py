"""Exhaustive reference solver for small instances.

Enumerates every assignment of tasks to {dropped, server 1..M} and, per
server, every ordering of the tasks assigned to it, placing each ordering
sequentially on the slot grid (earliest feasible slot, same placement rule
as every other solver). The objective is separable across servers, so each
server's orderings are searched independently and the per-server optima are
summed; results are memoized per (server, task subset).

Dropping an urgent task is allowed but charged `urgent_penalty`, mirroring
the penalty the population-based searches use, so the oracle and those
searches rank candidates identically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from . import defaults
from .errors import InstanceTooLargeError
from .latency import comm_latency, effective_duration, objective_value
from .model import Scenario, Schedule, make_schedule
from .timeline import ServerState, slot_window

MAX_TASKS = 8
MAX_SERVERS = 2
MAX_SLOTS = 20


@dataclass(frozen=True)
class OracleResult:
    """Best schedule found by exhaustive enumeration."""

    schedule: Schedule
    objective: float
    candidate_count: int


def enumerate_optimal(scenario: Scenario, *,
                      urgent_penalty: float = defaults.URGENT_DROP_PENALTY,
                      ) -> OracleResult:
    """Exhaustively minimize the schedule objective plus urgent-drop penalty.

    `candidate_count` is the size of the searched space: the number of
    (assignment, per-server ordering) combinations, infeasible ones included.
    Ties keep the lexicographically smallest assignment vector (genes ordered
    by task id, 0 = dropped, k = k-th server) encountered first.
    """
    n = scenario.n_tasks
    m = scenario.n_servers
    if n > MAX_TASKS:
        raise InstanceTooLargeError(
            f"exhaustive search capped at {MAX_TASKS} tasks, got {n}")
    if m > MAX_SERVERS:
        raise InstanceTooLargeError(
            f"exhaustive search capped at {MAX_SERVERS} servers, got {m}")
    if scenario.n_slots > MAX_SLOTS:
        raise InstanceTooLargeError(
            f"exhaustive search capped at {MAX_SLOTS} slots, "
            f"got {scenario.n_slots}")

    tasks = sorted(scenario.tasks, key=lambda t: t.id)
    if not tasks:
        return OracleResult(make_schedule({}, {}, scenario), 0.0, 1)

    servers = sorted(scenario.servers, key=lambda s: s.id)
    windows = {t.id: slot_window(t, scenario) for t in tasks}
    delta = scenario.delta
    width = scenario.slot_width
    # Per (task position, server position): fixed latency cost of assigning,
    # excluding the start-dependent waiting term.
    fixed_cost = [
        [delta * (comm_latency(t, scenario.channel_for(t.ue_id))
                  + effective_duration(t, s))
         for s in servers]
        for t in tasks
    ]
    wait_scale = [
        delta / (t.deadline - t.arrival - t.processing_time) for t in tasks
    ]

    # best value and starts for a task subset run on one server, or None when
    # no ordering fits; key = (server position, tuple of task positions).
    subset_cache: dict[tuple[int, tuple[int, ...]], tuple[float, dict[int, int]] | None] = {}

    def best_on_server(sj: int, subset: tuple[int, ...]):
        key = (sj, subset)
        if key in subset_cache:
            return subset_cache[key]
        best: tuple[float, dict[int, int]] | None = None
        for perm in itertools.permutations(subset):
            state = ServerState(servers[sj])
            value = 0.0
            starts: dict[int, int] = {}
            feasible = True
            for p in perm:
                task = tasks[p]
                slot = state.candidate_slot(task, scenario, windows[task.id])
                if slot is None:
                    feasible = False
                    break
                state.commit(task, slot, scenario)
                starts[p] = slot
                value += (fixed_cost[p][sj]
                          + wait_scale[p] * (slot * width - task.arrival))
            if feasible and (best is None or value < best[0]):
                best = (value, starts)
        subset_cache[key] = best
        return best

    best_value = math.inf
    best_assignment: tuple[int, ...] | None = None
    best_starts: dict[int, int] = {}
    candidate_count = 0

    for genes in itertools.product(range(m + 1), repeat=n):
        by_server: list[list[int]] = [[] for _ in range(m)]
        for p, g in enumerate(genes):
            if g:
                by_server[g - 1].append(p)
        orderings = 1
        for members in by_server:
            orderings *= math.factorial(len(members))
        candidate_count += orderings

        assigned = sum(1 for g in genes if g)
        value = m - assigned / n
        for t, g in zip(tasks, genes):
            if not g and t.urgent:
                value += urgent_penalty
        starts: dict[int, int] = {}
        feasible = True
        for sj, members in enumerate(by_server):
            if not members:
                continue
            best = best_on_server(sj, tuple(members))
            if best is None:
                feasible = False
                break
            value += best[0]
            starts.update(best[1])
        if feasible and value < best_value:
            best_value = value
            best_assignment = genes
            best_starts = dict(starts)

    # Dropping everything is always feasible, so a winner always exists.
    assert best_assignment is not None
    assignment = {tasks[p].id: servers[g - 1].id
                  for p, g in enumerate(best_assignment) if g}
    start_times = {tasks[p].id: scenario.slot_time(s)
                   for p, s in best_starts.items()}
    schedule = make_schedule(assignment, start_times, scenario)
    dropped_urgent = sum(
        1 for p, g in enumerate(best_assignment) if not g and tasks[p].urgent)
    objective = (objective_value(schedule, scenario)
                 + urgent_penalty * dropped_urgent)
    return OracleResult(schedule, objective, candidate_count)
