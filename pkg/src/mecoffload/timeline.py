"""Grid placement helpers shared by every solver.

All solvers place task starts on the scenario slot grid. A task's feasible
start slots form a window [first, last]; the globally earliest-arriving task
is pinned to its first feasible slot (it starts upon arrival), which shows up
here as a one-slot window. With grid-aligned starts, reserving whole slots
and packing continuous busy intervals coincide:
ceil_grid(s*dt + t_c) = s*dt + ceil(t_c/dt)*dt.
"""

from __future__ import annotations

from .latency import comm_latency
from .model import Scenario, Server, Task, grid_ceil


def slots_needed(task: Task, scenario: Scenario) -> int:
    """Number of whole slots a task's execution reserves."""
    return max(1, grid_ceil(task.processing_time, scenario.slot_width))


def slot_window(task: Task, scenario: Scenario) -> tuple[int, int]:
    """Inclusive feasible start-slot range; empty when first > last.

    Honors the arrival/deadline window (deadline minus processing minus
    round-trip transfer), keeps the reserved run inside the horizon, and pins
    the globally first task to its earliest feasible slot.
    """
    first = scenario.slot_at_or_after(task.arrival)
    latest = (task.deadline - task.processing_time
              - comm_latency(task, scenario.channel_for(task.ue_id)))
    last = scenario.slot_at_or_before(latest)
    last = min(last, scenario.n_slots - slots_needed(task, scenario))
    first = max(first, 0)
    if task.id == scenario.first_task_id and first <= last:
        last = first
    return first, last


class ServerState:
    """Mutable per-server CPU availability during sequential placement."""

    __slots__ = ("server", "free")

    def __init__(self, server: Server):
        self.server = server
        self.free = [0.0] * server.cpu_count

    def candidate_slot(self, task: Task, scenario: Scenario,
                       window: tuple[int, int]) -> int | None:
        """Earliest feasible start slot on this server, or None."""
        first, last = window
        if first > last:
            return None
        cpu = min(range(len(self.free)), key=lambda c: (self.free[c], c))
        slot = max(first, scenario.slot_at_or_after(self.free[cpu]))
        return slot if slot <= last else None

    def commit(self, task: Task, slot: int, scenario: Scenario) -> float:
        """Occupy the least-loaded CPU from `slot`; returns the start time."""
        cpu = min(range(len(self.free)), key=lambda c: (self.free[c], c))
        start = scenario.slot_time(slot)
        self.free[cpu] = start + task.processing_time
        return start


def place_in_order(tasks: list[Task], server: Server,
                   scenario: Scenario,
                   windows: dict[int, tuple[int, int]]) -> dict[int, int] | None:
    """Earliest-feasible sequential placement of `tasks` on one server.

    Returns task id -> start slot, or None when any task misses its window
    (the whole ordering is then infeasible).
    """
    state = ServerState(server)
    out: dict[int, int] = {}
    for task in tasks:
        slot = state.candidate_slot(task, scenario, windows[task.id])
        if slot is None:
            return None
        state.commit(task, slot, scenario)
        out[task.id] = slot
    return out
