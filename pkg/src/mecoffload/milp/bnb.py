"""Best-first branch-and-bound over the model's binary variables.

Nodes live on a min-heap keyed by their parent's LP value (a valid lower
bound for the subtree); each popped node solves its own LP relaxation,
prunes against the incumbent, and otherwise branches on the most fractional
binary (ties: lowest variable index) by fixing it to 0 and to 1. Because the
frontier is explored in bound order, the first moment the smallest
outstanding bound reaches the incumbent (minus the gap tolerance) proves
optimality.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass

import numpy as np

from ..errors import FractionalSolutionError, InfeasibleModelError
from ..model import Scenario, Schedule, make_schedule
from .model import MilpModel
from .simplex import solve_lp_relaxation

INTEGRALITY_TOL = 1e-6
DEFAULT_GAP_TOL = 1e-6
DEFAULT_NODE_LIMIT = 10 ** 6


@dataclass(frozen=True)
class BnbResult:
    status: str  # 'optimal' | 'node_limit'
    objective: float | None
    bound: float
    gap: float
    nodes: int
    simplex_iterations: int
    values: np.ndarray | None
    incumbent_trace: tuple[tuple[int, float], ...]
    bound_trace: tuple[tuple[int, float], ...]
    wall_time: float


def _most_fractional(values: np.ndarray,
                     groups: tuple[tuple[int, ...], ...]) -> int | None:
    """Branch variable: most fractional within the first group that has any
    fractional entry (ties: lowest variable index); None when all integral.
    """
    for group in groups:
        worst = INTEGRALITY_TOL
        pick = None
        for vi in group:
            frac = abs(values[vi] - round(values[vi]))
            if frac > worst:
                worst = frac
                pick = vi
        if pick is not None:
            return pick
    return None


def branch_and_bound(model: MilpModel, *, gap_tol: float = DEFAULT_GAP_TOL,
                     node_limit: int = DEFAULT_NODE_LIMIT,
                     pivot_limit: int | None = None,
                     initial: tuple[float, np.ndarray] | None = None,
                     ) -> BnbResult:
    """Minimize the model exactly (to `gap_tol`) over its binary variables.

    `initial` seeds the incumbent with a known feasible point
    (value, variable values) -- typically a greedy schedule -- which only
    prunes, never changes, the optimum. Raises InfeasibleModelError when no
    integer-feasible point exists (for these models that means the urgent
    tasks cannot all be scheduled).
    """
    started = time.perf_counter()
    root = solve_lp_relaxation(model, pivot_limit=pivot_limit)
    total_iters = root.iterations
    if root.status == "infeasible":
        raise InfeasibleModelError(
            "no fractional assignment satisfies the urgent-task rows; "
            "urgent tasks " + ", ".join(str(i) for i in model.urgent_ids)
            + " cannot all be scheduled",
            task_ids=model.urgent_ids)
    if root.status == "unbounded":
        raise InfeasibleModelError("LP relaxation unbounded; model is broken")

    nodes = 1
    incumbent: float | None = None
    incumbent_values: np.ndarray | None = None
    incumbent_trace: list[tuple[int, float]] = []
    bound_trace: list[tuple[int, float]] = [(1, root.objective)]
    global_bound = root.objective

    counter = itertools.count()
    heap: list[tuple[float, int, dict[int, tuple[float, float]]]] = []

    def accept(value: float, values: np.ndarray) -> None:
        nonlocal incumbent, incumbent_values
        if incumbent is None or value < incumbent:
            incumbent = value
            incumbent_values = values.copy()
            incumbent_trace.append((nodes, value))

    def prune_eps() -> float:
        if incumbent is None:
            return 0.0
        return gap_tol * max(1.0, abs(incumbent))

    def handle(solution_value: float, values: np.ndarray,
               fixings: dict[int, tuple[float, float]]) -> None:
        branch_var = _most_fractional(values, model.branch_groups)
        if branch_var is None:
            accept(solution_value, values)
            return
        for bounds in ((0.0, 0.0), (1.0, 1.0)):
            child = dict(fixings)
            child[branch_var] = bounds
            heapq.heappush(heap, (solution_value, next(counter), child))

    if initial is not None:
        accept(initial[0], np.asarray(initial[1], dtype=float))
    handle(root.objective, root.values, {})

    status = "optimal"
    while heap:
        key, _, fixings = heapq.heappop(heap)
        if key > global_bound:
            global_bound = key
            bound_trace.append((nodes, global_bound))
        if incumbent is not None and key >= incumbent - prune_eps():
            break
        if nodes >= node_limit:
            status = "node_limit"
            break
        nodes += 1
        node = solve_lp_relaxation(model, fixings, pivot_limit=pivot_limit)
        total_iters += node.iterations
        if node.status == "infeasible":
            continue
        if incumbent is not None and node.objective >= incumbent - prune_eps():
            continue
        handle(node.objective, node.values, fixings)

    if incumbent is None:
        if status == "node_limit":
            wall = time.perf_counter() - started
            return BnbResult(status, None, global_bound, np.inf, nodes,
                             total_iters, None, (), tuple(bound_trace), wall)
        raise InfeasibleModelError(
            "no integral schedule satisfies the urgent-task rows; "
            "urgent tasks " + ", ".join(str(i) for i in model.urgent_ids)
            + " cannot all be scheduled together",
            task_ids=model.urgent_ids)

    if status == "optimal" and not heap:
        # Frontier fully resolved: the incumbent is the exact optimum.
        global_bound = max(global_bound, incumbent)
    gap = (incumbent - global_bound) / max(1.0, abs(incumbent))
    gap = max(0.0, gap)
    wall = time.perf_counter() - started
    if bound_trace[-1][1] < global_bound:
        bound_trace.append((nodes, global_bound))
    return BnbResult(status, incumbent, global_bound, gap, nodes, total_iters,
                     incumbent_values, tuple(incumbent_trace),
                     tuple(bound_trace), wall)


def extract_schedule(model: MilpModel, values: np.ndarray,
                     scenario: Scenario, *, tol: float = 1e-5) -> Schedule:
    """Read the schedule out of an integral solution vector.

    Raises FractionalSolutionError when any assignment or start indicator is
    not within `tol` of 0/1, or when the indicators disagree.
    """
    assignment: dict[int, int] = {}
    starts: dict[int, float] = {}
    for tid in model.task_ids:
        chosen: int | None = None
        for sid in model.server_ids:
            v = float(values[model.x_index[(tid, sid)]])
            if abs(v - round(v)) > tol:
                raise FractionalSolutionError(
                    f"assignment of task {tid} to server {sid} is {v!r}")
            if round(v) == 1:
                if chosen is not None:
                    raise FractionalSolutionError(
                        f"task {tid} assigned to servers {chosen} and {sid}")
                chosen = sid
        if chosen is None:
            continue
        assignment[tid] = chosen
        first, last = model.windows[tid]
        slot_pick: int | None = None
        for slot in range(first, last + 1):
            v = float(values[model.y_index[(tid, slot, chosen)]])
            if abs(v - round(v)) > tol:
                raise FractionalSolutionError(
                    f"start indicator of task {tid} at slot {slot} is {v!r}")
            if round(v) == 1:
                if slot_pick is not None:
                    raise FractionalSolutionError(
                        f"task {tid} starts at slots {slot_pick} and {slot}")
                slot_pick = slot
        if slot_pick is None:
            raise FractionalSolutionError(
                f"task {tid} assigned but no start slot selected")
        starts[tid] = slot_pick * model.slot_width
    return make_schedule(assignment, starts, scenario)


@dataclass(frozen=True)
class MilpRun:
    schedule: Schedule
    result: BnbResult
    model: MilpModel


def solve_scenario(scenario: Scenario, *, formulation: str = "auto",
                   gap_tol: float = DEFAULT_GAP_TOL,
                   node_limit: int = DEFAULT_NODE_LIMIT,
                   max_variables: int | None = None,
                   pivot_limit: int | None = None,
                   warm_start: bool = True) -> MilpRun:
    """Build, solve and decode one scenario end to end.

    With `warm_start` (default) a greedy arrival-order schedule seeds the
    incumbent when it drops no urgent task, which speeds up pruning without
    affecting the optimum.
    """
    from ..greedy import schedule_fcfs
    from .model import build_model, encode_schedule, evaluate_solution, \
        violated_rows

    kwargs = {}
    if max_variables is not None:
        kwargs["max_variables"] = max_variables
    model = build_model(scenario, formulation, **kwargs)

    initial = None
    if warm_start:
        seed_schedule = schedule_fcfs(scenario)
        urgent = set(model.urgent_ids)
        if not urgent.intersection(seed_schedule.dropped_ids(scenario)):
            vals = encode_schedule(model, seed_schedule, scenario)
            if not violated_rows(model, vals):
                initial = (evaluate_solution(model, vals), vals)

    result = branch_and_bound(model, gap_tol=gap_tol, node_limit=node_limit,
                              pivot_limit=pivot_limit, initial=initial)
    if result.values is None:
        raise InfeasibleModelError("search hit the node limit with no "
                                   "incumbent schedule")
    schedule = extract_schedule(model, result.values, scenario)
    return MilpRun(schedule, result, model)
