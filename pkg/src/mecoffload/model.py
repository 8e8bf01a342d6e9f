"""Core domain types: tasks, servers, channels, scenarios, schedules.

A scenario carries a uniform slot grid (slot_width, horizon). Every solver in
this package places task starts on that grid; the feasibility checker itself
only enforces the continuous rules (arrival/deadline window, CPU capacity,
urgent assignment) so it can judge any schedule, however produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

from . import defaults
from .errors import ScenarioValidationError

GRID_REL_TOL = 1e-9
TIME_TOL = 1e-9


def grid_ratio(value: float, step: float) -> float:
    """value / step, snapped to the nearest integer when within tolerance."""
    q = value / step
    r = round(q)
    if abs(q - r) <= GRID_REL_TOL * max(1.0, abs(q)):
        return float(r)
    return q


def grid_ceil(value: float, step: float) -> int:
    """Smallest slot index s with s * step >= value (tolerance-snapped)."""
    return int(math.ceil(grid_ratio(value, step)))


def grid_floor(value: float, step: float) -> int:
    """Largest slot index s with s * step <= value (tolerance-snapped)."""
    return int(math.floor(grid_ratio(value, step)))


@dataclass(frozen=True)
class Task:
    """One offloadable task of a UE."""

    id: int
    ue_id: int
    arrival: float  # s
    size_bits: float  # input payload, bit
    cycles: float  # CPU work, cycles
    deadline: float  # absolute, s
    processing_time: float  # cycles / reference frequency, s
    urgent: bool

    @property
    def slack(self) -> float:
        """Deadline slack beyond arrival + processing time (must be > 0)."""
        return self.deadline - self.arrival - self.processing_time


@dataclass(frozen=True)
class Server:
    """An edge server with one or more identical CPUs."""

    id: int
    cpu_frequency: float = defaults.REFERENCE_CPU_FREQUENCY  # cycles/s
    cpu_count: int = defaults.DEFAULT_CPUS_PER_SERVER


@dataclass(frozen=True)
class ChannelParams:
    """Uplink radio parameters for one UE (or the shared default).

    Only the ratio tx_power * gain / noise_power enters the rate formula, so
    the stock configuration is constructed from that ratio directly.
    """

    bandwidth: float  # Hz
    tx_power: float = defaults.DEFAULT_TX_POWER  # W
    gain: float = 1.0
    noise_power: float = 1.0
    bandwidth_cap: float = defaults.DEFAULT_BANDWIDTH_CAP  # Hz

    @property
    def snr(self) -> float:
        return self.tx_power * self.gain / self.noise_power

    @classmethod
    def from_snr(cls, snr: float, bandwidth: float,
                 bandwidth_cap: float = defaults.DEFAULT_BANDWIDTH_CAP,
                 tx_power: float = defaults.DEFAULT_TX_POWER) -> "ChannelParams":
        """Build params whose p*g/N0 equals the given ratio."""
        return cls(bandwidth=bandwidth, tx_power=tx_power,
                   gain=snr / tx_power, noise_power=1.0,
                   bandwidth_cap=bandwidth_cap)

    @classmethod
    def for_target_rate(cls, rate: float = defaults.DEFAULT_UPLINK_RATE,
                        snr: float = defaults.DEFAULT_SNR,
                        bandwidth_cap: float = defaults.DEFAULT_BANDWIDTH_CAP,
                        tx_power: float = defaults.DEFAULT_TX_POWER) -> "ChannelParams":
        """Solve the bandwidth so the effective uplink rate equals `rate`."""
        bandwidth = rate / math.log2(1.0 + snr)
        return cls.from_snr(snr, bandwidth, bandwidth_cap, tx_power)


def effective_duration(task: Task, server: Server) -> float:
    """Execution time of `task` on `server`: cycles / cpu_frequency."""
    if server.cpu_frequency <= 0:
        raise ValueError(f"server {server.id}: cpu_frequency must be positive")
    return task.cycles / server.cpu_frequency


@dataclass(frozen=True)
class Violation:
    """One broken validation or feasibility rule."""

    kind: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.subject}: {self.message}"


@dataclass(frozen=True)
class Scenario:
    """A complete problem instance on a uniform slot grid."""

    tasks: tuple[Task, ...]
    servers: tuple[Server, ...]
    channel: ChannelParams
    delta: float = defaults.DEFAULT_DELTA
    slot_width: float = 0.05
    horizon: float = 1.0
    rng_seed: int = 0
    channel_overrides: dict[int, ChannelParams] = field(default_factory=dict)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_servers(self) -> int:
        return len(self.servers)

    @property
    def n_slots(self) -> int:
        return int(round(self.horizon / self.slot_width))

    @cached_property
    def task_by_id(self) -> dict[int, Task]:
        return {t.id: t for t in self.tasks}

    @cached_property
    def server_by_id(self) -> dict[int, Server]:
        return {s.id: s for s in self.servers}

    def channel_for(self, ue_id: int) -> ChannelParams:
        return self.channel_overrides.get(ue_id, self.channel)

    @cached_property
    def first_task_id(self) -> int | None:
        """Id of the globally earliest-arriving task (ties: lowest id)."""
        if not self.tasks:
            return None
        return min(self.tasks, key=lambda t: (t.arrival, t.id)).id

    # -- slot grid arithmetic ------------------------------------------------

    def slot_at_or_after(self, time: float) -> int:
        """Smallest slot index s with s * slot_width >= time."""
        return grid_ceil(time, self.slot_width)

    def slot_at_or_before(self, time: float) -> int:
        """Largest slot index s with s * slot_width <= time."""
        return grid_floor(time, self.slot_width)

    def slot_time(self, slot: int) -> float:
        return slot * self.slot_width


def validate_scenario(scenario: Scenario) -> list[Violation]:
    """Check scenario-level rules; returns an empty list when valid."""
    out: list[Violation] = []

    def bad(kind, subject, message):
        out.append(Violation(kind, subject, message))

    if not scenario.servers:
        bad("no-servers", "scenario", "at least one server is required")
    if scenario.delta <= 0:
        bad("nonpositive-delta", "scenario",
            f"latency weight delta must be positive, got {scenario.delta}")
    if scenario.slot_width <= 0:
        bad("bad-slot-width", "scenario",
            f"slot_width must be positive, got {scenario.slot_width}")
    if scenario.horizon <= 0:
        bad("bad-horizon", "scenario",
            f"horizon must be positive, got {scenario.horizon}")
    elif scenario.slot_width > 0:
        q = scenario.horizon / scenario.slot_width
        if abs(q - round(q)) > 1e-6 * max(1.0, abs(q)) or round(q) < 1:
            bad("grid-mismatch", "scenario",
                f"horizon ({scenario.horizon}) must be a positive integer "
                f"multiple of slot_width ({scenario.slot_width})")

    seen_server_ids = set()
    for srv in scenario.servers:
        subject = f"server {srv.id}"
        if srv.id in seen_server_ids:
            bad("duplicate-server-id", subject, "server id reused")
        seen_server_ids.add(srv.id)
        if srv.cpu_frequency <= 0:
            bad("bad-cpu-frequency", subject,
                f"cpu_frequency must be positive, got {srv.cpu_frequency}")
        if srv.cpu_count < 1 or int(srv.cpu_count) != srv.cpu_count:
            bad("bad-cpu-count", subject,
                f"cpu_count must be a positive integer, got {srv.cpu_count}")

    channels = [("default channel", scenario.channel)]
    channels += [(f"channel override for ue {ue}", ch)
                 for ue, ch in sorted(scenario.channel_overrides.items())]
    for subject, ch in channels:
        if ch.bandwidth <= 0:
            bad("bad-bandwidth", subject,
                f"bandwidth must be positive, got {ch.bandwidth}")
        elif ch.bandwidth > ch.bandwidth_cap + 1e-12 * ch.bandwidth_cap:
            bad("bandwidth-exceeds-cap", subject,
                f"bandwidth {ch.bandwidth} exceeds cap {ch.bandwidth_cap}")
        if ch.tx_power <= 0:
            bad("bad-tx-power", subject,
                f"tx_power must be positive, got {ch.tx_power}")
        if ch.gain <= 0:
            bad("bad-gain", subject, f"gain must be positive, got {ch.gain}")
        if ch.noise_power <= 0:
            bad("bad-noise-power", subject,
                f"noise_power must be positive, got {ch.noise_power}")

    seen_task_ids = set()
    for t in scenario.tasks:
        subject = f"task {t.id}"
        if t.id in seen_task_ids:
            bad("duplicate-task-id", subject, "task id reused")
        seen_task_ids.add(t.id)
        if t.size_bits <= 0:
            bad("bad-size", subject, f"size_bits must be positive, got {t.size_bits}")
        if t.cycles <= 0:
            bad("bad-cycles", subject, f"cycles must be positive, got {t.cycles}")
        if t.processing_time <= 0:
            bad("bad-processing-time", subject,
                f"processing_time must be positive, got {t.processing_time}")
        if t.arrival < 0:
            bad("negative-arrival", subject, f"arrival must be >= 0, got {t.arrival}")
        elif scenario.horizon > 0 and t.arrival >= scenario.horizon:
            bad("arrival-beyond-horizon", subject,
                f"arrival {t.arrival} is not inside [0, horizon={scenario.horizon})")
        if t.slack <= 0:
            bad("degenerate-slack", subject,
                f"deadline - arrival - processing_time must be > 0, got {t.slack}")

    return out


def ensure_valid(scenario: Scenario) -> Scenario:
    """Raise ScenarioValidationError unless the scenario validates cleanly."""
    violations = validate_scenario(scenario)
    if violations:
        raise ScenarioValidationError(violations)
    return scenario


@dataclass(frozen=True)
class Schedule:
    """Result of any solver: assignment, start times, per-server timelines.

    Dropped tasks simply do not appear in `assignment`.
    """

    assignment: dict[int, int]  # task id -> server id
    start_times: dict[int, float]  # task id -> start, s
    server_timelines: dict[int, tuple[tuple[int, tuple[float, float]], ...]]

    @property
    def assigned_ids(self) -> set[int]:
        return set(self.assignment)

    @property
    def n_assigned(self) -> int:
        return len(self.assignment)

    def dropped_ids(self, scenario: Scenario) -> set[int]:
        return {t.id for t in scenario.tasks} - self.assigned_ids


def make_schedule(assignment: dict[int, int], start_times: dict[int, float],
                  scenario: Scenario) -> Schedule:
    """Build a Schedule, deriving the per-server timelines."""
    timelines: dict[int, list[tuple[int, tuple[float, float]]]] = {
        srv.id: [] for srv in scenario.servers}
    for tid in sorted(assignment):
        task = scenario.task_by_id[tid]
        start = start_times[tid]
        timelines[assignment[tid]].append(
            (tid, (start, start + task.processing_time)))
    for sid in timelines:
        timelines[sid].sort(key=lambda item: (item[1][0], item[0]))
    return Schedule(
        assignment=dict(sorted(assignment.items())),
        start_times={tid: start_times[tid] for tid in sorted(assignment)},
        server_timelines={sid: tuple(rows) for sid, rows in timelines.items()},
    )


def empty_schedule(scenario: Scenario) -> Schedule:
    return make_schedule({}, {}, scenario)


def check_schedule(schedule: Schedule, scenario: Scenario) -> list[Violation]:
    """Feasibility-check a schedule against its scenario.

    The same checker judges every solver's output. Violation kinds:
    unknown-task / unknown-server / missing-start: structural mismatches;
    start-before-arrival / misses-deadline: service-window breaches;
    capacity-exceeded: more concurrent work than a server's CPUs;
    timeline-mismatch: server_timelines disagree with assignment/starts;
    urgent-dropped: an urgent task has no server (greedy baselines may
    legitimately report this one; optimizers must never produce it).
    """
    from .latency import comm_latency  # local import to avoid a module cycle

    out: list[Violation] = []

    def bad(kind, subject, message):
        out.append(Violation(kind, subject, message))

    if set(schedule.start_times) != set(schedule.assignment):
        bad("missing-start", "schedule",
            "start_times keys differ from assignment keys")

    for tid, sid in sorted(schedule.assignment.items()):
        task = scenario.task_by_id.get(tid)
        subject = f"task {tid}"
        if task is None:
            bad("unknown-task", subject, "assigned task not in scenario")
            continue
        if sid not in scenario.server_by_id:
            bad("unknown-server", subject, f"assigned server {sid} not in scenario")
            continue
        start = schedule.start_times.get(tid)
        if start is None:
            continue
        if start < task.arrival - TIME_TOL:
            bad("start-before-arrival", subject,
                f"start {start} precedes arrival {task.arrival}")
        latest = (task.deadline - task.processing_time
                  - comm_latency(task, scenario.channel_for(task.ue_id)))
        if start > latest + TIME_TOL:
            bad("misses-deadline", subject,
                f"start {start} exceeds latest feasible start {latest}")

    # capacity sweep per server: at every instant, overlapping executions
    # must not exceed cpu_count (interval ends touching starts are fine)
    for srv in scenario.servers:
        events = []
        for tid, sid in schedule.assignment.items():
            if sid != srv.id or tid not in scenario.task_by_id:
                continue
            if tid not in schedule.start_times:
                continue
            start = schedule.start_times[tid]
            end = start + scenario.task_by_id[tid].processing_time
            events.append((start + TIME_TOL, 1, tid))
            events.append((end - TIME_TOL, -1, tid))
        events.sort(key=lambda e: (e[0], e[1]))
        load = 0
        for time, step, tid in events:
            load += step
            if load > srv.cpu_count:
                bad("capacity-exceeded", f"server {srv.id}",
                    f"{load} concurrent tasks around t={time:.6g} "
                    f"exceed cpu_count={srv.cpu_count}")
                break

    expected = make_schedule(schedule.assignment, schedule.start_times, scenario) \
        if not out else None
    if expected is not None and expected.server_timelines != schedule.server_timelines:
        bad("timeline-mismatch", "schedule",
            "server_timelines do not match assignment/start_times")

    for t in scenario.tasks:
        if t.urgent and t.id not in schedule.assignment:
            bad("urgent-dropped", f"task {t.id}", "urgent task was dropped")

    return out
