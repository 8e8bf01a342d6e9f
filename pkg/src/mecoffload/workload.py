"""Random workload generation: Poisson arrivals, task draws, urgency tags.

Every UE owns an independent substream derived from (seed, ue_id), so the
generated scenario does not depend on UE iteration order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import defaults
from .errors import ScenarioValidationError
from .model import ChannelParams, Scenario, Server, Task, Violation, ensure_valid

TAIL_POLICIES = ("redraw", "non_urgent")


@dataclass(frozen=True)
class WorkloadConfig:
    """Knobs of the random workload generator."""

    ue_count: int
    tasks_per_ue: int
    arrival_rate: float = 2.0  # tasks/s per UE
    size_range: tuple[float, float] = (5e5, 2e6)  # bit
    cycle_range: tuple[float, float] = (1.1e7, 4.4e7)  # CPU cycles
    deadline_slack_range: tuple[float, float] = (0.2, 0.8)  # s beyond arrival+proc
    rng_seed: int = 0
    tail_policy: str = "redraw"
    reference_frequency: float = defaults.REFERENCE_CPU_FREQUENCY


def validate_config(cfg: WorkloadConfig) -> list[Violation]:
    out = []

    def bad(kind, message):
        out.append(Violation(kind, "workload config", message))

    if cfg.ue_count < 1:
        bad("bad-ue-count", f"ue_count must be >= 1, got {cfg.ue_count}")
    if cfg.tasks_per_ue < 1:
        bad("bad-tasks-per-ue", f"tasks_per_ue must be >= 1, got {cfg.tasks_per_ue}")
    if cfg.arrival_rate <= 0:
        bad("bad-arrival-rate", f"arrival_rate must be positive, got {cfg.arrival_rate}")
    for name, rng in (("size_range", cfg.size_range),
                      ("cycle_range", cfg.cycle_range),
                      ("deadline_slack_range", cfg.deadline_slack_range)):
        lo, hi = rng
        if not (0 < lo <= hi):
            bad("bad-range", f"{name} must satisfy 0 < lo <= hi, got {rng}")
    if cfg.tail_policy not in TAIL_POLICIES:
        bad("bad-tail-policy",
            f"tail_policy must be one of {TAIL_POLICIES}, got {cfg.tail_policy!r}")
    if cfg.reference_frequency <= 0:
        bad("bad-reference-frequency",
            f"reference_frequency must be positive, got {cfg.reference_frequency}")
    return out


def gen_arrivals(rate: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Poisson-process arrival instants: cumulative exponential gaps."""
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    gaps = rng.exponential(1.0 / rate, size=count)
    return np.cumsum(gaps)


def classify_urgency(rng: np.random.Generator, tail_policy: str = "redraw") -> bool:
    """Tag a task urgent when a standard normal draw lands in 2 <= |z| <= 3.

    Draws beyond |z| > 3 are redrawn under the default policy, or treated as
    non-urgent under tail_policy="non_urgent".
    """
    lo, hi = defaults.URGENCY_BAND
    while True:
        z = abs(rng.standard_normal())
        if z <= hi:
            return z >= lo
        if tail_policy == "non_urgent":
            return False
        # redraw


def gen_tasks(cfg: WorkloadConfig) -> tuple[Task, ...]:
    """Draw all tasks; per-UE draw order: arrivals, then per task
    (size, cycles, slack, urgency)."""
    violations = validate_config(cfg)
    if violations:
        raise ScenarioValidationError(violations)
    tasks = []
    for ue in range(cfg.ue_count):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, ue]))
        arrivals = gen_arrivals(cfg.arrival_rate, cfg.tasks_per_ue, rng)
        for k in range(cfg.tasks_per_ue):
            size = rng.uniform(*cfg.size_range)
            cycles = rng.uniform(*cfg.cycle_range)
            slack = rng.uniform(*cfg.deadline_slack_range)
            urgent = classify_urgency(rng, cfg.tail_policy)
            proc = cycles / cfg.reference_frequency
            arrival = float(arrivals[k])
            tasks.append(Task(
                id=ue * cfg.tasks_per_ue + k,
                ue_id=ue,
                arrival=arrival,
                size_bits=float(size),
                cycles=float(cycles),
                deadline=arrival + proc + float(slack),
                processing_time=proc,
                urgent=urgent,
            ))
    return tuple(tasks)


def default_servers(count: int = defaults.DEFAULT_SERVER_COUNT) -> tuple[Server, ...]:
    return tuple(Server(id=i) for i in range(count))


def default_slot_width(tasks, max_slots: int = defaults.DEFAULT_MAX_SLOTS) -> float:
    """Quarter of the shortest processing time, widened so the grid stays
    within max_slots."""
    if not tasks:
        return 0.05
    base_horizon = max(t.deadline for t in tasks)
    width = min(t.processing_time for t in tasks) / 4.0
    return max(width, base_horizon / max_slots)


def gen_scenario(cfg: WorkloadConfig, *,
                 servers: tuple[Server, ...] | None = None,
                 channel: ChannelParams | None = None,
                 delta: float = defaults.DEFAULT_DELTA,
                 slot_width: float | None = None,
                 max_slots: int = defaults.DEFAULT_MAX_SLOTS) -> Scenario:
    """Assemble and validate a full scenario around a generated workload.

    The horizon is the latest deadline plus one slot, rounded up to a whole
    number of slots.
    """
    tasks = gen_tasks(cfg)
    if servers is None:
        servers = default_servers()
    if channel is None:
        channel = ChannelParams.for_target_rate()
    width = slot_width if slot_width is not None else \
        default_slot_width(tasks, max_slots)
    base_horizon = max((t.deadline for t in tasks), default=width)
    n_slots = int(math.ceil(base_horizon / width - 1e-9)) + 1
    scenario = Scenario(
        tasks=tasks,
        servers=servers,
        channel=channel,
        delta=delta,
        slot_width=width,
        horizon=n_slots * width,
        rng_seed=cfg.rng_seed,
    )
    return ensure_valid(scenario)


def derive_seed(base: int, *path: int) -> int:
    """Stable derived seed for replication/grid substreams."""
    seq = np.random.SeedSequence([base, *path])
    return int(seq.generate_state(1, np.uint64)[0])


def config_for_replication(cfg: WorkloadConfig, base_seed: int,
                           grid_index: int, replication: int) -> WorkloadConfig:
    return replace(cfg, rng_seed=derive_seed(base_seed, grid_index, replication))
