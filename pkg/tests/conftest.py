"""Shared scenario builders for the test suite.

Hand-built scenarios use round numbers on a 0.05 s grid with a channel whose
uplink rate is exactly 50 Mbit/s, so expected latencies are short decimal
literals. Generated scenarios go through the public workload generator.
"""

from __future__ import annotations

import pytest

from mecoffload.model import ChannelParams, Scenario, Server, Task, ensure_valid
from mecoffload.workload import WorkloadConfig, default_servers, gen_scenario

# bandwidth * log2(1 + 99) = bandwidth * log2(100); picking
# bandwidth = 50e6 / log2(100) gives an uplink rate of exactly 50 Mbit/s.
RATE_50MBPS = ChannelParams.for_target_rate(rate=50e6, snr=99.0)


def make_task(tid: int, *, ue: int = 0, arrival: float = 0.0,
              size: float = 1e6, cycles: float = 2.2e7,
              slack: float = 0.5, urgent: bool = False,
              frequency: float = 2.2e9) -> Task:
    """A task with processing_time = cycles / 2.2 GHz and the given slack."""
    proc = cycles / frequency
    return Task(id=tid, ue_id=ue, arrival=arrival, size_bits=size,
                cycles=cycles, deadline=arrival + proc + slack,
                processing_time=proc, urgent=urgent)


def build_scenario(tasks, *, n_servers: int = 1, cpu_count: int = 1,
                   slot_width: float = 0.05, horizon: float | None = None,
                   delta: float = 1.0, channel: ChannelParams = RATE_50MBPS,
                   validate: bool = True) -> Scenario:
    if horizon is None:
        last = max((t.deadline for t in tasks), default=slot_width)
        n_slots = int(last / slot_width) + 2
        horizon = n_slots * slot_width
    scenario = Scenario(
        tasks=tuple(tasks),
        servers=tuple(Server(id=i, cpu_count=cpu_count)
                      for i in range(n_servers)),
        channel=channel,
        delta=delta,
        slot_width=slot_width,
        horizon=horizon,
    )
    return ensure_valid(scenario) if validate else scenario


@pytest.fixture
def tiny_scenario() -> Scenario:
    """Three staggered tasks (one urgent) on one single-CPU server."""
    tasks = [
        make_task(0, arrival=0.0, cycles=2.2e7, slack=0.6),
        make_task(1, arrival=0.05, cycles=4.4e7, slack=0.6, urgent=True),
        make_task(2, arrival=0.10, cycles=2.2e7, slack=0.6),
    ]
    return build_scenario(tasks, n_servers=1)


@pytest.fixture
def two_server_scenario() -> Scenario:
    """Four tasks on two servers; enough contention to make choices matter."""
    tasks = [
        make_task(0, arrival=0.0, cycles=4.4e7, slack=0.5),
        make_task(1, arrival=0.0, ue=1, cycles=2.2e7, slack=0.5, urgent=True),
        make_task(2, arrival=0.05, cycles=4.4e7, slack=0.5),
        make_task(3, arrival=0.10, ue=1, cycles=2.2e7, slack=0.5),
    ]
    return build_scenario(tasks, n_servers=2)


def generated_scenario(seed: int, *, ues: int = 2, tasks_per_ue: int = 2,
                       servers: int = 2, rate: float = 6.0,
                       max_slots: int = 14, delta: float = 1.0,
                       **cfg_kwargs) -> Scenario:
    """Small random scenario for oracle-scale tests (<= 20 slots)."""
    cfg = WorkloadConfig(ue_count=ues, tasks_per_ue=tasks_per_ue,
                         arrival_rate=rate, rng_seed=seed, **cfg_kwargs)
    return gen_scenario(cfg, servers=default_servers(servers),
                        max_slots=max_slots, delta=delta)
