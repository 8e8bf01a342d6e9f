"""End-to-end acceptance checks for the offloading toolkit.

Nine criteria, one test each; every test prints a single
``[PASS]``/``[FAIL]`` line with the measured margin so a full run reads as a
scorecard. Budgets are wall-clock ceilings, generous on purpose: the point
is catching pathological slowdowns, not benchmarking.
"""

from __future__ import annotations

import itertools
import json
import math
import time

import numpy as np
import pytest

from conftest import RATE_50MBPS, build_scenario, generated_scenario, make_task
from mecoffload.cli import main
from mecoffload.errors import InfeasibleModelError
from mecoffload.greedy import schedule_fcfs, schedule_stf
from mecoffload.latency import (comm_latency, computational_latency,
                                drop_term, dropped_ratio, objective_value,
                                task_breakdown, uplink_rate, waiting_ratio)
from mecoffload.metaheuristics import (GaParams, PsoParams, decode, run_ga,
                                       run_pso)
from mecoffload.metrics import compute_metrics
from mecoffload.milp.bnb import solve_scenario
from mecoffload.milp.model import verify_product_envelopes
from mecoffload.model import (Server, check_schedule, effective_duration,
                              make_schedule)
from mecoffload.oracle import enumerate_optimal
from mecoffload.workload import (WorkloadConfig, classify_urgency,
                                 default_servers, derive_seed, gen_scenario)


@pytest.fixture
def announce(capsys):
    """Print one scorecard line per criterion, bypassing pytest capture."""

    def _line(ok: bool, label: str, detail: str) -> None:
        with capsys.disabled():
            print(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")

    return _line


# --- 1 & 7: exact-solver sweep shared by the oracle and tightness checks ---

SMALL_COMBOS = [(1, 2, 1), (2, 2, 1), (2, 2, 2), (3, 2, 2),
                (4, 2, 2), (2, 4, 2), (4, 1, 2), (3, 1, 1)]


@pytest.fixture(scope="session")
def exact_sweep():
    """50 oracle-scale scenarios solved exactly with the audit formulation.

    Deterministic seed scan from 500; seeds whose scenario admits no
    zero-urgent-drop schedule are skipped and replaced so every kept run has
    a comparable optimum.
    """
    rows = []
    skipped = 0
    seed = 500
    t0 = time.perf_counter()
    while len(rows) < 50:
        ues, tpu, srv = SMALL_COMBOS[len(rows) % len(SMALL_COMBOS)]
        cfg = WorkloadConfig(ue_count=ues, tasks_per_ue=tpu,
                             arrival_rate=6.0, rng_seed=seed)
        seed += 1
        scenario = gen_scenario(cfg, servers=default_servers(srv),
                                max_slots=14)
        try:
            run = solve_scenario(scenario, formulation="full")
        except InfeasibleModelError:
            skipped += 1
            continue
        rows.append((scenario, run, enumerate_optimal(scenario)))
    return rows, time.perf_counter() - t0, skipped


def test_exact_solver_matches_exhaustive_oracle(exact_sweep, announce):
    rows, elapsed, skipped = exact_sweep
    diffs = [abs(run.result.objective - oracle.objective)
             for _, run, oracle in rows]
    feasible = [not check_schedule(run.schedule, scenario)
                for scenario, run, _ in rows]
    matches = sum(d <= 1e-6 for d in diffs)
    ok = matches == 50 and all(feasible) and elapsed < 60.0
    announce(ok, "1 exact solver matches exhaustive oracle",
             f"{matches}/50 objectives within 1e-6 "
             f"(max diff {max(diffs):.2e}), {sum(feasible)}/50 schedules "
             f"feasible, {skipped} infeasible seeds replaced, {elapsed:.1f}s "
             f"(< 60s)")
    assert matches == 50
    assert all(feasible)
    assert elapsed < 60.0


def test_product_variables_tight_at_integral_solutions(exact_sweep, announce):
    rows, _, _ = exact_sweep
    audited = 0
    worst = 0.0
    issues: list[str] = []
    for _, run, _ in rows:
        values = run.result.values
        issues.extend(verify_product_envelopes(run.model, values))
        for tr in run.model.product_triples:
            factor = 1.0 if tr.factor is None else values[tr.factor]
            gap = abs(tr.scale * values[tr.product]
                      - tr.scale * factor * values[tr.switch])
            worst = max(worst, gap)
            audited += 1
    ok = not issues and worst <= 1e-6
    announce(ok, "7 product variables tight at integral solutions",
             f"{audited} linearized products across 50 optima, worst "
             f"natural-unit gap {worst:.2e} (<= 1e-6), "
             f"{len(issues)} envelope violations")
    assert not issues
    assert worst <= 1e-6


# --- 2: optimizers never drop urgent tasks ---

URGENT_COMBOS = [(5, 3, 2), (10, 2, 3), (10, 4, 4), (8, 3, 3), (6, 4, 3),
                 (4, 5, 2), (10, 3, 4), (5, 8, 3)]


def test_optimizers_never_drop_urgent_tasks(announce):
    t0 = time.perf_counter()
    ga_params = GaParams(generations=40)
    pso_params = PsoParams(iterations=40)
    bad: list[str] = []
    collected = 0
    seed = 800
    while collected < 100:
        ues, tpu, srv = URGENT_COMBOS[collected % len(URGENT_COMBOS)]
        cfg = WorkloadConfig(ue_count=ues, tasks_per_ue=tpu, rng_seed=seed)
        seed += 1
        scenario = gen_scenario(cfg, servers=default_servers(srv),
                                max_slots=30)
        if not any(t.urgent for t in scenario.tasks):
            continue  # nothing to guarantee; take the next seed
        try:
            milp = solve_scenario(scenario)
        except InfeasibleModelError:
            continue  # no zero-drop schedule exists; take the next seed
        schedules = {
            "milp": milp.schedule,
            "ga": run_ga(scenario, ga_params,
                         rng=derive_seed(4301, seed - 1)).schedule,
            "pso": run_pso(scenario, pso_params,
                           rng=derive_seed(4402, seed - 1)).schedule,
        }
        for name, sched in schedules.items():
            ratio = compute_metrics(sched, scenario).urgent.dropped_ratio
            if ratio != 0.0:
                bad.append(f"seed {seed - 1} {name}: {ratio}")
        # greedy baselines report the metric but carry no guarantee
        for sched in (schedule_fcfs(scenario), schedule_stf(scenario)):
            reported = compute_metrics(sched, scenario).urgent.dropped_ratio
            assert math.isfinite(reported) and reported >= 0.0
        collected += 1
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 300.0
    announce(ok, "2 optimizers never drop urgent tasks",
             f"100 feasible scenarios x (milp, ga, pso): "
             f"{len(bad)} nonzero urgent-drop ratios, last seed {seed - 1}, "
             f"{elapsed:.1f}s (< 300s)")
    assert not bad, bad[:5]
    assert elapsed < 300.0


# --- 3: solver quality ordering at desk scale ---

DESK_SEEDS = tuple(range(9300, 9310))
DESK_REPLICATIONS = 3


def desk_scenario(seed: int):
    """40 tasks on 4 servers, congested enough that drops are expensive."""
    cfg = WorkloadConfig(ue_count=10, tasks_per_ue=4, arrival_rate=20.0,
                         size_range=(2.5e5, 1e6),
                         deadline_slack_range=(0.3, 0.9), rng_seed=seed)
    return gen_scenario(cfg, servers=default_servers(4), delta=0.1,
                        max_slots=30)


def test_solver_quality_ordering_at_desk_scale(announce):
    t0 = time.perf_counter()
    order_ok = 0
    latency_ok = 0
    lines = []
    for seed in DESK_SEEDS:
        scenario = desk_scenario(seed)

        def mean_latency(schedules):
            per_run = []
            for sched in schedules:
                report = compute_metrics(sched, scenario)
                per_run.append(report.comm_latency_s + report.comp_latency_s)
            return float(np.mean(per_run))

        milp = solve_scenario(scenario)
        ga_runs = [run_ga(scenario, rng=derive_seed(4101, seed, rep))
                   for rep in range(DESK_REPLICATIONS)]
        pso_runs = [run_pso(scenario, rng=derive_seed(4202, seed, rep))
                    for rep in range(DESK_REPLICATIONS)]
        m = milp.result.objective
        p = float(np.mean([r.objective for r in pso_runs]))
        g = float(np.mean([r.objective for r in ga_runs]))
        fcfs_latency = mean_latency([schedule_fcfs(scenario)])
        solver_latency = {
            "milp": mean_latency([milp.schedule]),
            "pso": mean_latency([r.schedule for r in pso_runs]),
            "ga": mean_latency([r.schedule for r in ga_runs]),
        }
        if m <= p + 1e-9 and p <= g + 1e-9:
            order_ok += 1
        if all(v < fcfs_latency for v in solver_latency.values()):
            latency_ok += 1
        lines.append(f"seed {seed}: m={m:.4f} p={p:.4f} g={g:.4f}")
    elapsed = time.perf_counter() - t0
    ok = order_ok >= 8 and latency_ok == 10 and elapsed < 600.0
    announce(ok, "3 solver quality ordering at desk scale",
             f"milp <= pso <= ga on {order_ok}/10 seeds (need >= 8, "
             f"{DESK_REPLICATIONS}-replication means), optimizer latency "
             f"below fcfs on {latency_ok}/10, {elapsed:.1f}s (< 600s)")
    assert order_ok >= 8, lines
    assert latency_ok == 10
    assert elapsed < 600.0


# --- 4: convergence traces are monotone ---

def test_search_traces_are_monotone(exact_sweep, announce):
    t0 = time.perf_counter()
    scenarios = [
        generated_scenario(4040, ues=5, tasks_per_ue=4, servers=3, rate=12.0,
                           max_slots=30),
        desk_scenario(9300),
    ]
    checked = 0
    for i, scenario in enumerate(scenarios):
        for runner, tag in ((run_ga, "ga"), (run_pso, "pso")):
            trace = runner(scenario, rng=derive_seed(4004, i)).trace
            assert len(trace) == 201, tag  # initial best + 200 iterations
            assert all(a >= b for a, b in zip(trace, trace[1:])), tag
            checked += 1
    # every exact run from the oracle sweep, plus one that branches deeper
    rows, _, _ = exact_sweep
    branching = generated_scenario(232, ues=3, tasks_per_ue=2, servers=2,
                                   rate=8.0)
    results = [run.result for _, run, _ in rows]
    results.append(solve_scenario(branching, formulation="full").result)
    inc_entries = bound_entries = max_nodes = 0
    inc_ok = bound_ok = True
    for result in results:
        incumbents = [value for _, value in result.incumbent_trace]
        bounds = [value for _, value in result.bound_trace]
        inc_ok &= all(a >= b for a, b in zip(incumbents, incumbents[1:]))
        bound_ok &= all(a <= b for a, b in zip(bounds, bounds[1:]))
        inc_entries += len(incumbents)
        bound_entries += len(bounds)
        max_nodes = max(max_nodes, result.nodes)
    elapsed = time.perf_counter() - t0
    ok = checked == 4 and inc_ok and bound_ok and elapsed < 60.0
    announce(ok, "4 convergence traces are monotone",
             f"{checked} search traces non-increasing over 200 iterations; "
             f"exact solver over {len(results)} runs (deepest {max_nodes} "
             f"nodes): {inc_entries} incumbent entries non-increasing "
             f"({inc_ok}), {bound_entries} bound entries non-decreasing "
             f"({bound_ok}), {elapsed:.1f}s (< 60s)")
    assert inc_ok and bound_ok
    assert elapsed < 60.0


# --- 5: formula unit suite ---

def test_latency_formulas_and_drop_identity(announce):
    t0 = time.perf_counter()
    # round-number examples on the exact-50-Mbit/s channel
    assert uplink_rate(RATE_50MBPS) == pytest.approx(50e6, rel=1e-12)
    payload = make_task(0, size=1e6)
    assert comm_latency(payload, RATE_50MBPS) == pytest.approx(0.04,
                                                               abs=1e-12)
    waiter = make_task(1, arrival=0.2, cycles=2.2e7, slack=0.5)
    assert waiting_ratio(waiter, 0.35) == pytest.approx(0.3, abs=1e-12)
    server = Server(id=0)
    heavy = make_task(2, cycles=4.4e7, slack=0.5)
    assert effective_duration(heavy, server) == pytest.approx(0.02, abs=1e-12)
    assert computational_latency(waiter, server, 0.35) == pytest.approx(
        0.31, abs=1e-12)
    parts = task_breakdown(heavy, server, RATE_50MBPS, 0.05)
    assert parts.computational == pytest.approx(
        parts.execution + parts.waiting, abs=1e-12)

    # frozen two-task optimum: 0.04+0.01+0 + 0.08+0.02+0.1, no drop cost
    pair = build_scenario([
        make_task(0, size=1e6, cycles=2.2e7, slack=0.5),
        make_task(1, size=2e6, cycles=4.4e7, slack=0.5),
    ], n_servers=1)
    schedule = make_schedule({0: 0, 1: 0}, {0: 0.0, 1: 0.05}, pair)
    assert objective_value(schedule, pair) == pytest.approx(0.25, abs=1e-12)
    assert dropped_ratio(schedule, 2) == 0.0

    # drop-term affine identity on 1000 random schedules
    scenario = generated_scenario(5050, ues=5, tasks_per_ue=2, servers=3)
    n, m = scenario.n_tasks, scenario.n_servers
    server_ids = sorted(s.id for s in scenario.servers)
    rng = np.random.default_rng(55)
    worst = 0.0
    for _ in range(1000):
        sched = decode(rng.integers(0, m + 1, size=n), scenario)
        ones = sum(int(sched.assignment.get(t.id) == sid)
                   for t in scenario.tasks for sid in server_ids)
        lhs = (n * m - ones) / n
        worst = max(worst, abs(lhs - drop_term(sched, n, m)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    announce(ok, "5 latency formulas and drop identity",
             f"round-number examples exact to 1e-12; affine drop identity "
             f"over 1000 random schedules, worst gap {worst:.2e}, "
             f"{elapsed:.2f}s (< 1s)")
    assert worst <= 1e-12
    assert elapsed < 1.0


# --- 6: urgency-band statistics ---

def test_urgent_fraction_matches_band_mass(announce):
    from scipy.stats import norm

    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    draws = 100_000
    urgent = sum(classify_urgency(rng) for _ in range(draws))
    fraction = urgent / draws
    # two-sided band conditioned on the redraw-accepted region
    band_mass = 2 * (norm.cdf(3.0) - norm.cdf(2.0)) / (2 * norm.cdf(3.0) - 1)
    elapsed = time.perf_counter() - t0
    ok = 0.038 <= fraction <= 0.052 and elapsed < 1.0
    announce(ok, "6 urgent fraction matches band mass",
             f"{urgent}/{draws} draws urgent ({fraction:.4f}), analytic mass "
             f"{band_mass:.4f}, accepted window [0.038, 0.052], "
             f"{elapsed:.2f}s (< 1s)")
    assert 0.038 <= fraction <= 0.052
    assert abs(band_mass - 0.0429) < 5e-4  # oracle sanity, not a tolerance
    assert elapsed < 1.0


# --- 8: determinism of exported experiment results ---

def test_experiment_outputs_are_byte_identical(tmp_path, announce):
    t0 = time.perf_counter()
    config = {
        "grid": [{"ue_count": 2, "tasks_per_ue": 2, "arrival_rate": 6.0},
                 {"ue_count": 3, "tasks_per_ue": 2, "arrival_rate": 6.0}],
        "solvers": ["fcfs", "stf", "milp", "ga", "pso"],
        "replications": 2,
        "server_count": 2,
        "slot_width": 0.1,
        "base_seed": 11,
        "ga": {"population_size": 12, "generations": 8},
        "pso": {"swarm_size": 12, "iterations": 8},
    }
    config_path = tmp_path / "plan.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    for out in ("first", "second"):
        assert main(["experiment", "--config", str(config_path),
                     "--out", str(tmp_path / out)]) == 0
    compared = []
    for name in ("results.csv", "results.json", "aggregates.csv",
                 "efficiency.csv"):
        first = (tmp_path / "first" / name).read_bytes()
        second = (tmp_path / "second" / name).read_bytes()
        compared.append((name, first == second, len(first)))
    elapsed = time.perf_counter() - t0
    ok = all(same for _, same, _ in compared) and elapsed < 120.0
    announce(ok, "8 experiment outputs are byte-identical",
             "two runs of one plan: " + ", ".join(
                 f"{name} {'==' if same else '!='} ({size}B)"
                 for name, same, size in compared)
             + f", {elapsed:.1f}s (< 120s)")
    for name, same, _ in compared:
        assert same, name
    assert elapsed < 120.0


# --- 9: greedy baseline properties ---

def test_greedy_baselines_keep_order_and_cut_waiting(announce):
    t0 = time.perf_counter()
    # FCFS keeps arrival order inside a priority class on one server
    combos = [(1, 3), (2, 2), (3, 2), (2, 4), (4, 2), (3, 3), (5, 2), (2, 5)]
    rates = [2.0, 6.0, 20.0]
    order_violations = 0
    for i in range(500):
        ues, tpu = combos[i % len(combos)]
        cfg = WorkloadConfig(ue_count=ues, tasks_per_ue=tpu,
                             arrival_rate=rates[i % len(rates)],
                             rng_seed=7000 + i)
        scenario = gen_scenario(cfg, servers=default_servers(1), max_slots=30)
        schedule = schedule_fcfs(scenario)
        placed = [t for t in scenario.tasks if t.id in schedule.assignment
                  and t.id != scenario.first_task_id]
        for a, b in itertools.combinations(placed, 2):
            if a.urgent != b.urgent or a.arrival == b.arrival:
                continue
            early, late = (a, b) if a.arrival < b.arrival else (b, a)
            if (schedule.start_times[early.id]
                    >= schedule.start_times[late.id]):
                order_violations += 1

    # shortest-first cuts mean waiting under congestion
    stf_wins = 0
    for s in range(20):
        cfg = WorkloadConfig(ue_count=8, tasks_per_ue=2, arrival_rate=50.0,
                             cycle_range=(1.1e7, 8.8e7),
                             deadline_slack_range=(0.4, 0.8),
                             rng_seed=7700 + s)
        scenario = gen_scenario(cfg, servers=default_servers(1),
                                max_slots=200)
        fcfs_wait = compute_metrics(schedule_fcfs(scenario),
                                    scenario).waiting_seconds_mean
        stf_wait = compute_metrics(schedule_stf(scenario),
                                   scenario).waiting_seconds_mean
        if stf_wait <= fcfs_wait:
            stf_wins += 1
    elapsed = time.perf_counter() - t0
    ok = order_violations == 0 and stf_wins >= 18 and elapsed < 60.0
    announce(ok, "9 greedy baselines keep order and cut waiting",
             f"fcfs arrival order inside classes: {order_violations} "
             f"violations over 500 single-server instances; stf waiting <= "
             f"fcfs on {stf_wins}/20 congested seeds (need >= 18), "
             f"{elapsed:.1f}s (< 60s)")
    assert order_violations == 0
    assert stf_wins >= 18
    assert elapsed < 60.0
