"""Mixed-integer model builder for the offloading problem.

Two value-equivalent formulations over the same slot grid:

* ``full`` -- keeps the complete variable cast: assignment binaries, a
  continuous start time per task, start-slot indicator binaries, per-slot
  occupancy binaries, and the bilinear latency terms (communication latency
  times assignment, computational latency times assignment, occupancy times
  assignment) linearized through the standard three-row envelope
  ``b <= a, b <= x, b >= a + x - 1``, which is exact because every factor is
  normalized to [0, 1]. Scales used for normalization are recorded on the
  model so audits can undo them.

* ``compact`` -- folds starts and occupancy into the start-slot indicators:
  one binary per (task, start slot, server) carrying the full weighted
  latency of that choice in the objective, with CPU capacity written
  directly on the covering indicators. Same feasible assignments, same
  optimal value; preferred when the full cast would be too large.

Both minimize: sum over assigned tasks of delta * (communication latency +
execution time + waiting ratio), plus one unit per (task, server) pair with
the task not on that server, divided by the task count -- i.e. the drop sum
``n_servers - assigned/n`` plus weighted latency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import defaults
from ..errors import InfeasibleModelError, ModelTooLargeError
from ..latency import comm_latency
from ..model import Scenario, ensure_valid, effective_duration, grid_ratio
from ..timeline import slot_window, slots_needed


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float
    upper: float
    binary: bool = False


@dataclass(frozen=True)
class Row:
    name: str
    coeffs: dict[int, float]
    sense: str  # '<=' or '=='
    rhs: float


@dataclass(frozen=True)
class ProductTriple:
    """Bookkeeping for one linearized product b = factor * switch.

    ``factor`` is None when the factor is the constant 1 (then the rows force
    b == switch). ``scale`` converts the normalized product back to natural
    units: natural value = scale * value(product variable). ``rows`` are the
    indices of the three envelope rows.
    """

    kind: str  # 'occupancy' | 'comm' | 'comp'
    task_id: int
    server_id: int
    slot: int | None
    product: int
    factor: int | None
    switch: int
    scale: float
    rows: tuple[int, int, int]


@dataclass
class MilpModel:
    formulation: str
    variables: list[Variable]
    rows: list[Row]
    objective: dict[int, float]
    objective_offset: float
    binary_indices: tuple[int, ...]
    # Branching priority groups: assignment binaries first, then start
    # indicators. Occupancy binaries are never branched: they equal sums of
    # start indicators through equality rows, so they come out integral as
    # soon as the first two groups do (products likewise pin themselves).
    branch_groups: tuple[tuple[int, ...], ...]
    task_ids: tuple[int, ...]
    server_ids: tuple[int, ...]
    urgent_ids: tuple[int, ...]
    x_index: dict[tuple[int, int], int]
    y_index: dict[tuple[int, int, int], int]  # (task, slot, server)
    start_index: dict[int, int]
    occupancy_index: dict[tuple[int, int, int], int]  # (task, slot, server)
    product_triples: tuple[ProductTriple, ...]
    windows: dict[int, tuple[int, int]]
    run_slots: dict[int, int]
    comm_scale: dict[tuple[int, int], float]
    comp_scale: dict[tuple[int, int], float]
    n_slots: int
    slot_width: float
    _solver_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.rows)


class _Builder:
    def __init__(self) -> None:
        self.variables: list[Variable] = []
        self.rows: list[Row] = []

    def var(self, name: str, lower: float, upper: float,
            binary: bool = False) -> int:
        self.variables.append(Variable(name, lower, upper, binary))
        return len(self.variables) - 1

    def row(self, name: str, coeffs: dict[int, float], sense: str,
            rhs: float) -> int:
        self.rows.append(Row(name, dict(coeffs), sense, rhs))
        return len(self.rows) - 1


def estimate_variable_counts(scenario: Scenario) -> tuple[int, int]:
    """(full, compact) variable counts for `scenario` without building."""
    tasks = sorted(scenario.tasks, key=lambda t: t.id)
    n = len(tasks)
    m = scenario.n_servers
    t_slots = scenario.n_slots
    win_total = 0
    for t in tasks:
        first, last = slot_window(t, scenario)
        win_total += max(0, last - first + 1)
    full = n * m + n + win_total * m + 2 * n * t_slots * m + 3 * n * m
    compact = n * m + win_total * m
    return full, compact


def build_model(scenario: Scenario, formulation: str = "auto", *,
                max_variables: int = defaults.MAX_MODEL_VARIABLES,
                full_variable_limit: int = defaults.FULL_MODEL_VARIABLE_LIMIT,
                ) -> MilpModel:
    """Build the mixed-integer model for `scenario`.

    ``formulation`` is 'full', 'compact', or 'auto' (full when small enough,
    else compact). Raises ModelTooLargeError when the chosen formulation
    exceeds ``max_variables`` and InfeasibleModelError when an urgent task
    has no feasible start slot at all.
    """
    ensure_valid(scenario)
    if formulation not in ("auto", "full", "compact"):
        raise ValueError(f"unknown formulation {formulation!r}")
    if scenario.n_tasks == 0:
        raise ValueError("mixed-integer model needs at least one task")

    est_full, est_compact = estimate_variable_counts(scenario)
    if formulation == "auto":
        formulation = "full" if est_full <= full_variable_limit else "compact"
    estimate = est_full if formulation == "full" else est_compact
    if estimate > max_variables:
        raise ModelTooLargeError(
            f"{formulation} formulation needs about {estimate} variables, "
            f"cap is {max_variables}")

    tasks = sorted(scenario.tasks, key=lambda t: t.id)
    servers = sorted(scenario.servers, key=lambda s: s.id)
    n = len(tasks)
    m = len(servers)
    t_slots = scenario.n_slots
    width = scenario.slot_width
    delta = scenario.delta

    windows = {t.id: slot_window(t, scenario) for t in tasks}
    run_slots = {t.id: slots_needed(t, scenario) for t in tasks}
    blocked_urgent = tuple(
        t.id for t in tasks if t.urgent and windows[t.id][0] > windows[t.id][1])
    if blocked_urgent:
        raise InfeasibleModelError(
            "urgent tasks with no feasible start slot: "
            + ", ".join(str(i) for i in blocked_urgent),
            task_ids=blocked_urgent)

    comm = {t.id: comm_latency(t, scenario.channel_for(t.ue_id))
            for t in tasks}
    exec_time = {(t.id, s.id): effective_duration(t, s)
                 for t in tasks for s in servers}
    slack_den = {t.id: t.deadline - t.arrival - t.processing_time
                 for t in tasks}

    b = _Builder()
    x_index: dict[tuple[int, int], int] = {}
    y_index: dict[tuple[int, int, int], int] = {}
    start_index: dict[int, int] = {}
    occupancy_index: dict[tuple[int, int, int], int] = {}
    triples: list[ProductTriple] = []
    comm_scale: dict[tuple[int, int], float] = {}
    comp_scale: dict[tuple[int, int], float] = {}
    objective: dict[int, float] = {}

    def window_slots(tid: int) -> range:
        first, last = windows[tid]
        return range(first, last + 1)

    # --- variables ---------------------------------------------------------
    for t in tasks:
        empty = windows[t.id][0] > windows[t.id][1]
        for s in servers:
            hi = 0.0 if empty else 1.0
            x_index[(t.id, s.id)] = b.var(f"x_{t.id}_{s.id}", 0.0, hi,
                                          binary=True)

    if formulation == "full":
        for t in tasks:
            first, last = windows[t.id]
            hi = max(t.arrival, last * width) if first <= last else t.arrival
            start_index[t.id] = b.var(f"start_{t.id}", t.arrival, hi)

    for t in tasks:
        for s in servers:
            for slot in window_slots(t.id):
                y_index[(t.id, slot, s.id)] = b.var(
                    f"y_{t.id}_{slot}_{s.id}", 0.0, 1.0, binary=True)

    if formulation == "full":
        for t in tasks:
            first, last = windows[t.id]
            reach_lo = first
            reach_hi = last + run_slots[t.id] - 1 if first <= last else -1
            for slot in range(t_slots):
                reachable = first <= last and reach_lo <= slot <= reach_hi
                hi = 1.0 if reachable else 0.0
                for s in servers:
                    occupancy_index[(t.id, slot, s.id)] = b.var(
                        f"occ_{t.id}_{slot}_{s.id}", 0.0, hi, binary=True)
        occ_prod: dict[tuple[int, int, int], int] = {}
        for t in tasks:
            for slot in range(t_slots):
                for s in servers:
                    hi = b.variables[occupancy_index[(t.id, slot, s.id)]].upper
                    occ_prod[(t.id, slot, s.id)] = b.var(
                        f"occx_{t.id}_{slot}_{s.id}", 0.0, hi)
        comm_prod: dict[tuple[int, int], int] = {}
        comp_norm: dict[tuple[int, int], int] = {}
        comp_prod: dict[tuple[int, int], int] = {}
        for t in tasks:
            for s in servers:
                comm_prod[(t.id, s.id)] = b.var(f"commx_{t.id}_{s.id}",
                                                0.0, 1.0)
        for t in tasks:
            for s in servers:
                # Normalized computational latency; waiting >= 0 puts its
                # floor at the execution share.
                floor = exec_time[(t.id, s.id)] / (
                    1.0 + exec_time[(t.id, s.id)])
                comp_norm[(t.id, s.id)] = b.var(f"compn_{t.id}_{s.id}",
                                                floor, 1.0)
        for t in tasks:
            for s in servers:
                comp_prod[(t.id, s.id)] = b.var(f"compx_{t.id}_{s.id}",
                                                0.0, 1.0)

    # --- scales and objective ----------------------------------------------
    for t in tasks:
        for s in servers:
            comm_scale[(t.id, s.id)] = comm[t.id]
            comp_scale[(t.id, s.id)] = 1.0 + exec_time[(t.id, s.id)]

    if formulation == "full":
        for t in tasks:
            for s in servers:
                objective[comm_prod[(t.id, s.id)]] = (
                    delta * comm_scale[(t.id, s.id)])
                objective[comp_prod[(t.id, s.id)]] = (
                    delta * comp_scale[(t.id, s.id)])
    else:
        for (tid, slot, sid), vi in y_index.items():
            wait = (slot * width - scenario.task_by_id[tid].arrival) / slack_den[tid]
            objective[vi] = delta * (comm[tid] + exec_time[(tid, sid)] + wait)
    for key, vi in x_index.items():
        objective[vi] = objective.get(vi, 0.0) - 1.0 / n
    offset = float(m)

    # --- shared rows ---------------------------------------------------------
    for t in tasks:
        b.row(f"assign_{t.id}",
              {x_index[(t.id, s.id)]: 1.0 for s in servers}, "<=", 1.0)
    for t in tasks:
        if t.urgent:
            b.row(f"urgent_{t.id}",
                  {x_index[(t.id, s.id)]: 1.0 for s in servers}, "==", 1.0)
    for t in tasks:
        first, last = windows[t.id]
        if first > last:
            continue
        for s in servers:
            coeffs = {y_index[(t.id, slot, s.id)]: 1.0
                      for slot in window_slots(t.id)}
            coeffs[x_index[(t.id, s.id)]] = -1.0
            b.row(f"pick_{t.id}_{s.id}", coeffs, "==", 0.0)

    if formulation == "full":
        # start time definition: start = sum(slot*width * y) + arrival*(1-x)
        for t in tasks:
            coeffs = {start_index[t.id]: 1.0}
            for s in servers:
                for slot in window_slots(t.id):
                    coeffs[y_index[(t.id, slot, s.id)]] = -(slot * width)
            for s in servers:
                xi = x_index[(t.id, s.id)]
                coeffs[xi] = coeffs.get(xi, 0.0) + t.arrival
            b.row(f"startdef_{t.id}", coeffs, "==", t.arrival)
        # normalized computational latency definition
        for t in tasks:
            den = slack_den[t.id]
            for s in servers:
                scale = comp_scale[(t.id, s.id)]
                b.row(f"compdef_{t.id}_{s.id}",
                      {comp_norm[(t.id, s.id)]: scale,
                       start_index[t.id]: -1.0 / den},
                      "==", exec_time[(t.id, s.id)] - t.arrival / den)
        # occupancy = covering start indicators
        for t in tasks:
            first, last = windows[t.id]
            if first > last:
                continue
            k = run_slots[t.id]
            for slot in range(first, last + k):
                for s in servers:
                    coeffs = {occupancy_index[(t.id, slot, s.id)]: 1.0}
                    for start_slot in range(max(first, slot - k + 1),
                                            min(last, slot) + 1):
                        coeffs[y_index[(t.id, start_slot, s.id)]] = -1.0
                    b.row(f"occdef_{t.id}_{slot}_{s.id}", coeffs, "==", 0.0)
        # CPU capacity per (server, slot)
        for s in servers:
            for slot in range(t_slots):
                coeffs = {occupancy_index[(t.id, slot, s.id)]: 1.0
                          for t in tasks}
                b.row(f"cap_{s.id}_{slot}", coeffs, "<=", float(s.cpu_count))
        # total reserved time per task, grid-rounded
        for t in tasks:
            coeffs = {occupancy_index[(t.id, slot, s.id)]: width
                      for s in servers for slot in range(t_slots)}
            b.row(f"runlen_{t.id}", coeffs, "<=", run_slots[t.id] * width)
        # linearization envelopes
        for t in tasks:
            for slot in range(t_slots):
                for s in servers:
                    pv = occ_prod[(t.id, slot, s.id)]
                    ov = occupancy_index[(t.id, slot, s.id)]
                    xv = x_index[(t.id, s.id)]
                    r1 = b.row(f"occxa_{t.id}_{slot}_{s.id}",
                               {pv: 1.0, ov: -1.0}, "<=", 0.0)
                    r2 = b.row(f"occxb_{t.id}_{slot}_{s.id}",
                               {pv: 1.0, xv: -1.0}, "<=", 0.0)
                    r3 = b.row(f"occxc_{t.id}_{slot}_{s.id}",
                               {xv: 1.0, ov: 1.0, pv: -1.0}, "<=", 1.0)
                    triples.append(ProductTriple(
                        "occupancy", t.id, s.id, slot, pv, ov, xv, 1.0,
                        (r1, r2, r3)))
        for t in tasks:
            for s in servers:
                pv = comm_prod[(t.id, s.id)]
                xv = x_index[(t.id, s.id)]
                r1 = b.row(f"commxa_{t.id}_{s.id}", {pv: 1.0}, "<=", 1.0)
                r2 = b.row(f"commxb_{t.id}_{s.id}", {pv: 1.0, xv: -1.0},
                           "<=", 0.0)
                r3 = b.row(f"commxc_{t.id}_{s.id}", {xv: 1.0, pv: -1.0},
                           "<=", 0.0)
                triples.append(ProductTriple(
                    "comm", t.id, s.id, None, pv, None, xv,
                    comm_scale[(t.id, s.id)], (r1, r2, r3)))
        for t in tasks:
            for s in servers:
                pv = comp_prod[(t.id, s.id)]
                av = comp_norm[(t.id, s.id)]
                xv = x_index[(t.id, s.id)]
                r1 = b.row(f"compxa_{t.id}_{s.id}", {pv: 1.0, av: -1.0},
                           "<=", 0.0)
                r2 = b.row(f"compxb_{t.id}_{s.id}", {pv: 1.0, xv: -1.0},
                           "<=", 0.0)
                r3 = b.row(f"compxc_{t.id}_{s.id}",
                           {xv: 1.0, av: 1.0, pv: -1.0}, "<=", 1.0)
                triples.append(ProductTriple(
                    "comp", t.id, s.id, None, pv, av, xv,
                    comp_scale[(t.id, s.id)], (r1, r2, r3)))
        # Tightening link: the computational-latency product is at least the
        # latency of the chosen start slot. Holds with equality at every
        # integral point (start indicators pick one slot when assigned, all
        # zero when dropped), and keeps fractional relaxations from dodging
        # the waiting cost, matching the compact formulation's bound.
        for t in tasks:
            first, last = windows[t.id]
            if first > last:
                continue
            den = slack_den[t.id]
            for s in servers:
                scale = comp_scale[(t.id, s.id)]
                coeffs = {comp_prod[(t.id, s.id)]: -1.0}
                for slot in window_slots(t.id):
                    wait = (slot * width - t.arrival) / den
                    coeffs[y_index[(t.id, slot, s.id)]] = (
                        (exec_time[(t.id, s.id)] + wait) / scale)
                b.row(f"complink_{t.id}_{s.id}", coeffs, "<=", 0.0)
    else:
        # CPU capacity directly on the covering start indicators
        for s in servers:
            for slot in range(t_slots):
                coeffs: dict[int, float] = {}
                for t in tasks:
                    first, last = windows[t.id]
                    if first > last:
                        continue
                    k = run_slots[t.id]
                    for start_slot in range(max(first, slot - k + 1),
                                            min(last, slot) + 1):
                        coeffs[y_index[(t.id, start_slot, s.id)]] = 1.0
                if coeffs:
                    b.row(f"cap_{s.id}_{slot}", coeffs, "<=",
                          float(s.cpu_count))

    binaries = tuple(i for i, v in enumerate(b.variables) if v.binary)
    branch_groups = (tuple(sorted(x_index.values())),
                     tuple(sorted(y_index.values())))
    return MilpModel(
        formulation=formulation,
        variables=b.variables,
        rows=b.rows,
        objective=objective,
        objective_offset=offset,
        binary_indices=binaries,
        branch_groups=branch_groups,
        task_ids=tuple(t.id for t in tasks),
        server_ids=tuple(s.id for s in servers),
        urgent_ids=tuple(t.id for t in tasks if t.urgent),
        x_index=x_index,
        y_index=y_index,
        start_index=start_index,
        occupancy_index=occupancy_index,
        product_triples=tuple(triples),
        windows=windows,
        run_slots=run_slots,
        comm_scale=comm_scale,
        comp_scale=comp_scale,
        n_slots=t_slots,
        slot_width=width,
    )


def row_activity(row: Row, values) -> float:
    """Left-hand-side value of a row at `values`."""
    return sum(c * values[i] for i, c in row.coeffs.items())


def violated_rows(model: MilpModel, values, *, tol: float = 1e-7) -> list[str]:
    """Names of rows (or bounds) the point `values` violates."""
    bad: list[str] = []
    for vi, var in enumerate(model.variables):
        if not (var.lower - tol <= values[vi] <= var.upper + tol):
            bad.append(f"bound {var.name}")
    for row in model.rows:
        lhs = row_activity(row, values)
        if row.sense == "==":
            if abs(lhs - row.rhs) > tol:
                bad.append(row.name)
        elif lhs > row.rhs + tol:
            bad.append(row.name)
    return bad


def evaluate_solution(model: MilpModel, values) -> float:
    """Objective value (offset included) of a point."""
    return sum(c * values[vi] for vi, c in model.objective.items()) \
        + model.objective_offset


def encode_schedule(model: MilpModel, schedule, scenario: Scenario):
    """Variable values representing an on-grid schedule exactly.

    The schedule must start tasks on the slot grid inside their windows
    (every solver in this package does); the result then satisfies all model
    rows (urgent rows excepted when the schedule drops an urgent task) and
    its objective equals the schedule objective.
    """
    values = np.zeros(len(model.variables))
    width = model.slot_width
    slot_of: dict[int, int] = {}
    for tid in model.task_ids:
        task = scenario.task_by_id[tid]
        sid = schedule.assignment.get(tid)
        if sid is not None:
            slot = int(round(grid_ratio(schedule.start_times[tid], width)))
            slot_of[tid] = slot
            values[model.x_index[(tid, sid)]] = 1.0
            values[model.y_index[(tid, slot, sid)]] = 1.0
        if model.start_index:
            values[model.start_index[tid]] = (
                schedule.start_times[tid] if sid is not None else task.arrival)
    if model.occupancy_index:
        for tid, sid in schedule.assignment.items():
            slot = slot_of[tid]
            for t in range(slot, slot + model.run_slots[tid]):
                values[model.occupancy_index[(tid, t, sid)]] = 1.0
    for tr in model.product_triples:
        if tr.kind == "comp":
            task = scenario.task_by_id[tr.task_id]
            server = scenario.server_by_id[tr.server_id]
            start = values[model.start_index[tr.task_id]]
            den = task.deadline - task.arrival - task.processing_time
            norm = (effective_duration(task, server)
                    + (start - task.arrival) / den) / tr.scale
            values[tr.factor] = norm
        factor = 1.0 if tr.factor is None else values[tr.factor]
        values[tr.product] = factor * values[tr.switch]
    return values


def verify_product_envelopes(model: MilpModel, values, *,
                             tol: float = 1e-6) -> list[str]:
    """Check b = factor * switch exactly at a (near-)integral solution.

    Returns human-readable discrepancy strings; empty list when every
    linearized product matches the true product within `tol` (both in
    normalized and natural units).
    """
    issues: list[str] = []
    for tr in model.product_triples:
        switch = values[tr.switch]
        factor = 1.0 if tr.factor is None else values[tr.factor]
        product = values[tr.product]
        if abs(product - factor * switch) > tol:
            issues.append(
                f"{tr.kind} product for task {tr.task_id} server "
                f"{tr.server_id}: {product!r} != {factor!r} * {switch!r}")
    return issues
