"""Event-driven FCFS and STF baselines.

Dispatch discipline: whenever a server CPU is (or becomes) available, the
highest-priority waiting task is placed on the earliest-free server (ties:
lowest server id). Urgent tasks always outrank non-urgent ones; within a
class FCFS orders by arrival and STF by reference processing time. The
globally earliest-arriving task outranks everything at its arrival instant
so it starts upon arrival, matching the optimizers' model. A waiting task is
dropped as soon as no server could still meet its latest feasible start.
"""

from __future__ import annotations

import heapq

from .model import Scenario, Schedule, make_schedule
from .timeline import ServerState, slot_window


def _greedy(scenario: Scenario, key_name: str) -> Schedule:
    tasks = sorted(scenario.tasks, key=lambda t: (t.arrival, t.id))
    windows = {t.id: slot_window(t, scenario) for t in scenario.tasks}
    states = [ServerState(srv) for srv in scenario.servers]
    first_id = scenario.first_task_id

    def priority(t):
        sel = t.arrival if key_name == "fcfs" else t.processing_time
        return (0 if t.id == first_id else 1, 0 if t.urgent else 1,
                sel, t.arrival, t.id)

    assignment: dict[int, int] = {}
    starts: dict[int, float] = {}
    waiting: list[tuple] = []  # heap of (priority, task)
    pending = iter(tasks)
    upcoming = next(pending, None)

    while upcoming is not None or waiting:
        if not waiting:
            # jump to the next arrival; admit every task arriving then
            now = upcoming.arrival
            while upcoming is not None and upcoming.arrival <= now:
                heapq.heappush(waiting, (priority(upcoming), upcoming))
                upcoming = next(pending, None)
            continue

        # next dispatch happens when the earliest CPU frees; arrivals up to
        # that instant join the queue first (they may outrank)
        free_min = min(min(st.free) for st in states)
        if upcoming is not None and upcoming.arrival <= free_min:
            now = upcoming.arrival
            while upcoming is not None and upcoming.arrival <= now:
                heapq.heappush(waiting, (priority(upcoming), upcoming))
                upcoming = next(pending, None)
            continue

        _, task = heapq.heappop(waiting)
        # earliest-free server; candidate start there is the best possible
        best = None
        for idx, st in enumerate(states):
            f = min(st.free)
            if best is None or (f, st.server.id) < best[:2]:
                best = (f, st.server.id, idx)
        state = states[best[2]]
        slot = state.candidate_slot(task, scenario, windows[task.id])
        if slot is None:
            continue  # latest feasible start has passed everywhere: dropped
        starts[task.id] = state.commit(task, slot, scenario)
        assignment[task.id] = state.server.id

    return make_schedule(assignment, starts, scenario)


def schedule_fcfs(scenario: Scenario) -> Schedule:
    """First-come-first-serve with urgency-first queueing."""
    return _greedy(scenario, "fcfs")


def schedule_stf(scenario: Scenario) -> Schedule:
    """Shortest-task-first with urgency-first queueing."""
    return _greedy(scenario, "stf")
