"""Population-based schedule searches (genetic algorithm and particle swarm).

Both searches share one solution encoding: a genome of N integers, one per
task in task-id order, where 0 means "drop" and k in 1..M means "run on the
k-th server" (servers in id order). A genome decodes to a schedule by
dispatching tasks in a fixed priority order -- the globally first-arriving
task, then urgent before non-urgent, then by arrival time, then id -- placing
each on its server's earliest feasible grid slot. A task whose gene picks a
server it can no longer meet its deadline on is demoted to dropped.

Fitness is the schedule objective plus a large penalty per dropped urgent
task; a repair step reassigns dropped urgent tasks to the feasible server
with the best resulting fitness, so returned solutions drop urgent work only
when no server can host it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import defaults
from .latency import comm_latency, effective_duration
from .model import Scenario, Schedule, grid_ceil, make_schedule
from .timeline import slot_window


class _DecodeContext:
    """Precomputed per-scenario arrays for fast genome placement."""

    __slots__ = ("scenario", "n", "m", "width", "tids", "arrival", "proc",
                 "first", "last", "wait_scale", "urgent", "fixed_cost",
                 "order", "cpu_counts", "server_ids")

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        tasks = sorted(scenario.tasks, key=lambda t: t.id)
        servers = sorted(scenario.servers, key=lambda s: s.id)
        self.n = len(tasks)
        self.m = len(servers)
        self.width = scenario.slot_width
        self.tids = [t.id for t in tasks]
        self.arrival = [t.arrival for t in tasks]
        self.proc = [t.processing_time for t in tasks]
        windows = [slot_window(t, scenario) for t in tasks]
        self.first = [w[0] for w in windows]
        self.last = [w[1] for w in windows]
        self.wait_scale = [
            scenario.delta / (t.deadline - t.arrival - t.processing_time)
            for t in tasks
        ]
        self.urgent = [t.urgent for t in tasks]
        self.fixed_cost = [
            [scenario.delta * (comm_latency(t, scenario.channel_for(t.ue_id))
                               + effective_duration(t, s))
             for s in servers]
            for t in tasks
        ]
        first_id = scenario.first_task_id
        self.order = sorted(
            range(self.n),
            key=lambda p: (tasks[p].id != first_id, not tasks[p].urgent,
                           tasks[p].arrival, tasks[p].id))
        self.cpu_counts = [s.cpu_count for s in servers]
        self.server_ids = [s.id for s in servers]

    def place(self, genome) -> tuple[float, list[int], dict[int, int],
                                     dict[int, float]]:
        """Dispatch a genome; returns (objective, urgent-dropped positions,
        assignment, start times). The objective excludes the urgent penalty.
        """
        width = self.width
        free = [[0.0] * c for c in self.cpu_counts]
        assignment: dict[int, int] = {}
        starts: dict[int, float] = {}
        value = 0.0
        urgent_dropped: list[int] = []
        for p in self.order:
            gene = genome[p]
            if gene == 0:
                if self.urgent[p]:
                    urgent_dropped.append(p)
                continue
            sj = gene - 1
            cpus = free[sj]
            cpu = min(range(len(cpus)), key=lambda c: (cpus[c], c))
            slot = max(self.first[p], grid_ceil(cpus[cpu], width))
            if slot > self.last[p]:
                if self.urgent[p]:
                    urgent_dropped.append(p)
                continue
            start = slot * width
            cpus[cpu] = start + self.proc[p]
            assignment[self.tids[p]] = self.server_ids[sj]
            starts[self.tids[p]] = start
            value += (self.fixed_cost[p][sj]
                      + self.wait_scale[p] * (start - self.arrival[p]))
        value += self.m - len(assignment) / self.n if self.n else 0.0
        return value, urgent_dropped, assignment, starts

    def fitness(self, genome, urgent_penalty: float) -> float:
        value, urgent_dropped, _, _ = self.place(genome)
        return value + urgent_penalty * len(urgent_dropped)

    def repair(self, genome: np.ndarray, urgent_penalty: float,
               ) -> tuple[np.ndarray, float]:
        """Reassign dropped urgent tasks; returns (genome, fitness).

        Each dropped urgent task is moved to the feasible server minimizing
        the resulting fitness (ties: lowest server); passes repeat until no
        further urgent task can be rescued.
        """
        genome = np.array(genome, dtype=np.int64, copy=True)
        value, urgent_dropped, _, _ = self.place(genome)
        fit = value + urgent_penalty * len(urgent_dropped)
        while urgent_dropped:
            changed = False
            for p in urgent_dropped:
                original = genome[p]
                best_fit = fit
                best_gene = -1
                for gene in range(1, self.m + 1):
                    if gene == original:
                        continue
                    genome[p] = gene
                    v, dropped, _, _ = self.place(genome)
                    if p in dropped:
                        continue
                    cand = v + urgent_penalty * len(dropped)
                    if cand < best_fit:
                        best_fit = cand
                        best_gene = gene
                genome[p] = best_gene if best_gene > 0 else original
                if best_gene > 0:
                    fit = best_fit
                    changed = True
            if not changed:
                break
            value, urgent_dropped, _, _ = self.place(genome)
            fit = value + urgent_penalty * len(urgent_dropped)
        return genome, fit


def _context(scenario: Scenario) -> _DecodeContext:
    return _DecodeContext(scenario)


def _check_genome(genome, n: int, m: int) -> np.ndarray:
    arr = np.asarray(genome, dtype=np.int64)
    if arr.shape != (n,):
        raise ValueError(f"genome must have length {n}, got shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() > m):
        raise ValueError(f"genome entries must lie in 0..{m}")
    return arr


def decode(genome, scenario: Scenario) -> Schedule:
    """Turn a genome into a schedule (see module docstring for the rules)."""
    ctx = _context(scenario)
    arr = _check_genome(genome, ctx.n, ctx.m)
    _, _, assignment, starts = ctx.place(arr)
    return make_schedule(assignment, starts, scenario)


def fitness(genome, scenario: Scenario, *,
            urgent_penalty: float = defaults.URGENT_DROP_PENALTY) -> float:
    """Objective of the decoded schedule plus penalty per dropped urgent task."""
    ctx = _context(scenario)
    arr = _check_genome(genome, ctx.n, ctx.m)
    return ctx.fitness(arr, urgent_penalty)


def repair_urgent(genome, scenario: Scenario, *,
                  urgent_penalty: float = defaults.URGENT_DROP_PENALTY,
                  ) -> np.ndarray:
    """Reassign dropped urgent tasks to the best feasible server, if any."""
    ctx = _context(scenario)
    arr = _check_genome(genome, ctx.n, ctx.m)
    repaired, _ = ctx.repair(arr, urgent_penalty)
    return repaired


@dataclass(frozen=True)
class GaParams:
    population_size: int = 50
    generations: int = 200
    tournament_size: int = 2
    mutation_rate: float = 0.01
    mutation_sigma: float = 1.0
    elite_count: int = 1


@dataclass(frozen=True)
class PsoParams:
    swarm_size: int = 50
    iterations: int = 200
    # Inertia decays linearly from `inertia` to `inertia_end` over the run
    # (set inertia_end to None for a constant coefficient): early iterations
    # explore, late ones settle onto the best genomes found.
    inertia: float = 0.9
    inertia_end: float | None = 0.4
    cognitive: float = 1.49
    social: float = 1.49
    velocity_clamp: float | None = None  # defaults to n_servers / 2
    # Probability per position component of a uniform resample each
    # iteration. Rounding to integer genomes freezes the swarm once
    # velocities fall below half a step, so a small kick keeps the search
    # moving; 0 disables it.
    turbulence: float = 0.02


@dataclass(frozen=True)
class SearchResult:
    schedule: Schedule
    objective: float
    genome: tuple[int, ...]
    trace: tuple[float, ...] = field(repr=False)


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def run_ga(scenario: Scenario, params: GaParams | None = None, *,
           rng=None,
           urgent_penalty: float = defaults.URGENT_DROP_PENALTY,
           ) -> SearchResult:
    """Genetic algorithm over genomes: tournament selection, scattered
    crossover, additive-noise mutation, elitism, urgent repair each birth.

    The trace holds the best fitness so far at generation 0..generations and
    is non-increasing.
    """
    params = params or GaParams()
    ctx = _context(scenario)
    gen = _as_rng(rng)
    pop_size = params.population_size
    n, m = ctx.n, ctx.m
    if n == 0:
        empty = make_schedule({}, {}, scenario)
        trace = tuple([0.0] * (params.generations + 1))
        return SearchResult(empty, 0.0, (), trace)

    population = np.empty((pop_size, n), dtype=np.int64)
    fits = np.empty(pop_size)
    for i in range(pop_size):
        seed_genome = gen.integers(0, m + 1, size=n)
        population[i], fits[i] = ctx.repair(seed_genome, urgent_penalty)

    best_idx = int(np.argmin(fits))
    best_fit = float(fits[best_idx])
    best_genome = population[best_idx].copy()
    trace = [best_fit]

    for _ in range(params.generations):
        new_pop = np.empty_like(population)
        new_fits = np.empty_like(fits)
        elite = int(np.argmin(fits))
        for e in range(min(params.elite_count, pop_size)):
            new_pop[e] = population[elite]
            new_fits[e] = fits[elite]
        for i in range(min(params.elite_count, pop_size), pop_size):
            contenders = gen.integers(0, pop_size, size=params.tournament_size)
            p1 = int(min(contenders, key=lambda c: (fits[c], c)))
            contenders = gen.integers(0, pop_size, size=params.tournament_size)
            p2 = int(min(contenders, key=lambda c: (fits[c], c)))
            mask = gen.random(n) < 0.5
            child = np.where(mask, population[p1], population[p2])
            mut_mask = gen.random(n) < params.mutation_rate
            noise = gen.normal(0.0, params.mutation_sigma, size=n)
            mutated = np.clip(np.rint(child + noise), 0, m).astype(np.int64)
            child = np.where(mut_mask, mutated, child)
            new_pop[i], new_fits[i] = ctx.repair(child, urgent_penalty)
        population, fits = new_pop, new_fits
        gen_best = int(np.argmin(fits))
        if fits[gen_best] < best_fit:
            best_fit = float(fits[gen_best])
            best_genome = population[gen_best].copy()
        trace.append(best_fit)

    _, _, assignment, starts = ctx.place(best_genome)
    schedule = make_schedule(assignment, starts, scenario)
    return SearchResult(schedule, best_fit, tuple(int(g) for g in best_genome),
                        tuple(trace))


def run_pso(scenario: Scenario, params: PsoParams | None = None, *,
            rng=None,
            urgent_penalty: float = defaults.URGENT_DROP_PENALTY,
            ) -> SearchResult:
    """Particle swarm over continuous positions in [0, M]^N.

    Positions round to genomes for evaluation (after urgent repair); personal
    and global bests track the repaired genomes, and a particle's best
    position snaps to its repaired genome so the swarm is attracted to
    genomes as actually evaluated rather than to pre-repair points. The trace
    holds the global best fitness at iteration 0..iterations and is
    non-increasing.
    """
    params = params or PsoParams()
    ctx = _context(scenario)
    gen = _as_rng(rng)
    n, m = ctx.n, ctx.m
    swarm = params.swarm_size
    if n == 0:
        empty = make_schedule({}, {}, scenario)
        trace = tuple([0.0] * (params.iterations + 1))
        return SearchResult(empty, 0.0, (), trace)

    v_max = params.velocity_clamp if params.velocity_clamp is not None else m / 2.0
    pos = gen.uniform(0.0, m, size=(swarm, n))
    vel = np.zeros((swarm, n))

    genomes = np.empty((swarm, n), dtype=np.int64)
    fits = np.empty(swarm)
    for i in range(swarm):
        rounded = np.clip(np.rint(pos[i]), 0, m).astype(np.int64)
        genomes[i], fits[i] = ctx.repair(rounded, urgent_penalty)
    pbest_pos = genomes.astype(float)
    pbest_fit = fits.copy()
    pbest_genome = genomes.copy()
    g_idx = int(np.argmin(pbest_fit))
    gbest_fit = float(pbest_fit[g_idx])
    gbest_pos = pbest_pos[g_idx].copy()
    gbest_genome = pbest_genome[g_idx].copy()
    trace = [gbest_fit]

    steps = max(1, params.iterations - 1)
    for it in range(params.iterations):
        if params.inertia_end is None:
            inertia = params.inertia
        else:
            inertia = (params.inertia
                       + (params.inertia_end - params.inertia) * it / steps)
        r1 = gen.random((swarm, n))
        r2 = gen.random((swarm, n))
        vel = (inertia * vel
               + params.cognitive * r1 * (pbest_pos - pos)
               + params.social * r2 * (gbest_pos - pos))
        np.clip(vel, -v_max, v_max, out=vel)
        pos = np.clip(pos + vel, 0.0, m)
        if params.turbulence > 0.0:
            kick = gen.random((swarm, n)) < params.turbulence
            pos = np.where(kick, gen.uniform(0.0, m, size=(swarm, n)), pos)
            vel = np.where(kick, 0.0, vel)
        for i in range(swarm):
            rounded = np.clip(np.rint(pos[i]), 0, m).astype(np.int64)
            genome, fit = ctx.repair(rounded, urgent_penalty)
            if fit < pbest_fit[i]:
                pbest_fit[i] = fit
                pbest_pos[i] = genome.astype(float)
                pbest_genome[i] = genome
            if fit < gbest_fit:
                gbest_fit = float(fit)
                gbest_pos = genome.astype(float)
                gbest_genome = genome.copy()
        trace.append(gbest_fit)

    _, _, assignment, starts = ctx.place(gbest_genome)
    schedule = make_schedule(assignment, starts, scenario)
    return SearchResult(schedule, gbest_fit,
                        tuple(int(g) for g in gbest_genome), tuple(trace))
