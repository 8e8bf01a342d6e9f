"""Experiment harness: plans, seeding, skips, exports, determinism."""

import csv
import json
import math

import pytest

from mecoffload.harness import (
    AGGREGATE_COLUMNS,
    CANONICAL_SOLVERS,
    EFFICIENCY_COLUMNS,
    RESULT_COLUMNS,
    ExperimentPlan,
    build_scenario,
    export_results,
    plan_hash,
    run_experiment,
    summarize_by_solver,
)
from mecoffload.latency import efficiency_vs
from mecoffload.metaheuristics import GaParams, PsoParams
from mecoffload.workload import WorkloadConfig

FAST_GA = GaParams(population_size=12, generations=8)
FAST_PSO = PsoParams(swarm_size=12, iterations=8)


def small_plan(**overrides):
    defaults = dict(
        configs=(WorkloadConfig(ue_count=2, tasks_per_ue=2, arrival_rate=6.0),
                 WorkloadConfig(ue_count=3, tasks_per_ue=2, arrival_rate=6.0)),
        replications=2,
        base_seed=7,
        server_count=2,
        slot_width=0.1,  # coarse grid keeps the exact solver quick here
        ga_params=FAST_GA,
        pso_params=FAST_PSO,
    )
    defaults.update(overrides)
    return ExperimentPlan(**defaults)


@pytest.fixture(scope="module")
def small_result():
    return run_experiment(small_plan())


class TestPlanValidation:
    def test_unknown_solver(self):
        with pytest.raises(ValueError, match="unknown solver"):
            run_experiment(small_plan(solvers=("fcfs", "sa")))

    def test_replications_must_be_positive(self):
        with pytest.raises(ValueError, match="replications"):
            run_experiment(small_plan(replications=0))

    def test_needs_a_config(self):
        with pytest.raises(ValueError, match="configuration"):
            run_experiment(small_plan(configs=()))


class TestScenarioSharing:
    def test_unit_scenarios_are_reproducible(self):
        plan = small_plan()
        assert build_scenario(plan, 0, 0) == build_scenario(plan, 0, 0)

    def test_replications_differ(self):
        plan = small_plan()
        assert build_scenario(plan, 0, 0) != build_scenario(plan, 0, 1)

    def test_grid_points_differ(self):
        plan = small_plan()
        a = build_scenario(plan, 0, 0)
        b = build_scenario(plan, 1, 0)
        assert (a.n_tasks, a.tasks) != (b.n_tasks, b.tasks)

    def test_server_shape_follows_the_plan(self):
        scenario = build_scenario(small_plan(cpus_per_server=3), 0, 0)
        assert scenario.n_servers == 2
        assert all(s.cpu_count == 3 for s in scenario.servers)


class TestRunExperiment:
    def test_covers_the_full_cross_product(self, small_result):
        plan = small_result.plan
        expected = {(g, r, s)
                    for g in range(len(plan.configs))
                    for r in range(plan.replications)
                    for s in plan.solvers}
        seen = {(r.grid_index, r.replication, r.solver)
                for r in small_result.records}
        skipped = {(r.grid_index, r.replication, r.solver)
                   for r in small_result.skips}
        assert seen | skipped == expected
        assert not seen & skipped

    def test_records_are_sorted_canonically(self, small_result):
        order = {name: i for i, name in enumerate(CANONICAL_SOLVERS)}
        keys = [(r.grid_index, r.replication, order[r.solver])
                for r in small_result.records]
        assert keys == sorted(keys)

    def test_rerun_reproduces_every_report(self, small_result):
        again = run_experiment(small_result.plan)
        assert [(r.grid_index, r.replication, r.solver, r.report)
                for r in again.records] == \
               [(r.grid_index, r.replication, r.solver, r.report)
                for r in small_result.records]

    def test_solver_subset_does_not_shift_search_seeds(self, small_result):
        solo = run_experiment(small_plan(solvers=("pso",)))
        full = {(r.grid_index, r.replication): r.report
                for r in small_result.records if r.solver == "pso"}
        for rec in solo.records:
            assert rec.report == full[(rec.grid_index, rec.replication)]

    def test_search_traces_are_attached(self, small_result):
        by_solver = {}
        for rec in small_result.records:
            by_solver.setdefault(rec.solver, rec)
        assert by_solver["fcfs"].trace is None
        assert by_solver["stf"].trace is None
        assert len(by_solver["ga"].trace) == FAST_GA.generations + 1
        assert len(by_solver["pso"].trace) == FAST_PSO.iterations + 1
        assert by_solver["milp"].trace  # incumbent trace
        assert by_solver["milp"].bound_trace

    def test_parallel_run_matches_serial(self, small_result, monkeypatch,
                                         tmp_path):
        # NaN fields defeat report equality across the process boundary, so
        # compare the exported bytes (the determinism that actually matters)
        serial_paths = export_results(small_result, tmp_path / "serial")
        monkeypatch.setenv("OFFLOAD_THREADS", "2")
        parallel = run_experiment(small_result.plan)
        parallel_paths = export_results(parallel, tmp_path / "parallel")
        for key in ("results_csv", "results_json"):
            assert parallel_paths[key].read_bytes() == \
                serial_paths[key].read_bytes()


class TestSkips:
    def test_milp_task_cap_skips_only_milp(self):
        result = run_experiment(small_plan(milp_task_cap=1, replications=1))
        assert all(s.solver == "milp" for s in result.skips)
        assert {s.kind for s in result.skips} == {"task-cap"}
        assert len(result.skips) == 2  # one per grid point
        ran = {r.solver for r in result.records}
        assert ran == {"fcfs", "stf", "ga", "pso"}

    def test_unschedulable_urgent_task_skips_milp_as_infeasible(self):
        # deadlines tighter than the uplink time: an urgent task can never
        # be placed, so the exact solver reports the unit infeasible
        cfg = WorkloadConfig(ue_count=3, tasks_per_ue=3, arrival_rate=6.0,
                             size_range=(1e6, 2e6),
                             deadline_slack_range=(0.01, 0.02))
        plan = small_plan(configs=(cfg,), base_seed=1, replications=1)
        result = run_experiment(plan)
        milp_skips = [s for s in result.skips if s.solver == "milp"]
        assert len(milp_skips) == 1
        assert milp_skips[0].kind == "infeasible"
        # the permissive solvers still produce records for the unit
        assert {r.solver for r in result.records} >= {"fcfs", "ga", "pso"}


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    result = run_experiment(small_plan())
    out = tmp_path_factory.mktemp("export")
    return result, export_results(result, out)


class TestExport:
    def test_results_csv_header_and_shape(self, exported):
        result, paths = exported
        with open(paths["results_csv"], encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == RESULT_COLUMNS
        assert len(rows) - 1 == len(result.records)

    def test_wall_time_is_zeroed_without_timing(self, exported):
        _, paths = exported
        with open(paths["results_csv"], encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                assert row["wall_time_s"] == "0.0"

    def test_wall_time_recorded_when_asked(self, tmp_path):
        result = run_experiment(small_plan(replications=1,
                                           record_wall_time=True))
        paths = export_results(result, tmp_path)
        with open(paths["results_csv"], encoding="utf-8") as fh:
            times = [float(r["wall_time_s"]) for r in csv.DictReader(fh)]
        assert any(t > 0.0 for t in times)

    def test_aggregates_average_the_replications(self, exported):
        result, paths = exported
        with open(paths["aggregates_csv"], encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert rows and set(rows[0]) == set(AGGREGATE_COLUMNS)
        fcfs0 = next(r for r in rows
                     if r["solver"] == "fcfs" and r["grid_id"] == "0")
        objs = [r.report.objective for r in result.records
                if r.solver == "fcfs" and r.grid_index == 0]
        assert float(fcfs0["mean_objective"]) == pytest.approx(
            math.fsum(objs) / len(objs))
        assert int(fcfs0["replications"]) == len(objs)

    def test_efficiency_rows_compare_against_milp(self, exported):
        result, paths = exported
        with open(paths["efficiency_csv"], encoding="utf-8") as fh:
            eff = {(r["grid_id"], r["solver"]): r
                   for r in csv.DictReader(fh)}
        assert set(eff[("0", "fcfs")]) == set(EFFICIENCY_COLUMNS)
        assert ("0", "milp") not in eff
        with open(paths["aggregates_csv"], encoding="utf-8") as fh:
            agg = {(r["grid_id"], r["solver"]): r
                   for r in csv.DictReader(fh)}
        expected = efficiency_vs(float(agg[("0", "fcfs")]["mean_objective"]),
                                 float(agg[("0", "milp")]["mean_objective"]))
        assert float(eff[("0", "fcfs")]["objective_efficiency"]) == \
            pytest.approx(expected)

    def test_no_efficiency_file_without_milp(self, tmp_path):
        result = run_experiment(small_plan(solvers=("fcfs", "stf"),
                                           replications=1))
        paths = export_results(result, tmp_path)
        assert "efficiency_csv" not in paths
        assert not (tmp_path / "efficiency.csv").exists()

    def test_trace_files_for_searches_and_milp(self, exported):
        _, paths = exported
        trace_dir = paths["traces_dir"]
        ga = trace_dir / "grid0_rep0_ga.csv"
        with open(ga, encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iteration", "best_objective"]
        assert len(rows) - 1 == FAST_GA.generations + 1
        assert (trace_dir / "grid0_rep0_milp.csv").exists()
        assert (trace_dir / "grid0_rep0_milp_bound.csv").exists()
        assert not (trace_dir / "grid0_rep0_fcfs.csv").exists()

    def test_json_is_strict_and_complete(self, exported):
        result, paths = exported
        raw = paths["results_json"].read_text(encoding="utf-8")
        assert "NaN" not in raw
        doc = json.loads(raw)
        assert doc["metadata"]["config_hash"] == plan_hash(result.plan)
        assert doc["metadata"]["solvers"] == list(result.plan.solvers)
        assert len(doc["records"]) == len(result.records)
        assert len(doc["grid"] if "grid" in doc else
                   doc["metadata"]["grid"]) == len(result.plan.configs)

    def test_nan_urgent_means_become_null(self, exported):
        result, paths = exported
        doc = json.loads(paths["results_json"].read_text(encoding="utf-8"))
        nan_records = [r for r in result.records
                       if math.isnan(r.report.urgent.comm_latency_s)]
        assert nan_records, "expected a replication without urgent tasks"
        nulls = [r for r in doc["records"]
                 if r["urgent_comm_latency_s"] is None]
        assert len(nulls) == len(nan_records)

    def test_reexport_is_byte_identical(self, tmp_path):
        plan = small_plan(replications=1)
        paths_a = export_results(run_experiment(plan), tmp_path / "a")
        paths_b = export_results(run_experiment(plan), tmp_path / "b")
        for key in ("results_csv", "results_json", "aggregates_csv"):
            assert paths_a[key].read_bytes() == paths_b[key].read_bytes()


class TestPlanHash:
    def test_stable_for_equal_plans(self):
        assert plan_hash(small_plan()) == plan_hash(small_plan())

    def test_sensitive_to_any_knob(self):
        base = plan_hash(small_plan())
        assert plan_hash(small_plan(base_seed=8)) != base
        assert plan_hash(small_plan(gap_tol=1e-5)) != base
        assert plan_hash(small_plan(ga_params=GaParams())) != base

    def test_is_a_sha256_digest(self):
        digest = plan_hash(small_plan())
        assert len(digest) == 64
        int(digest, 16)  # hex


class TestSummaries:
    def test_summarize_by_solver(self, small_result):
        summary = summarize_by_solver(small_result)
        assert set(summary) == set(small_result.plan.solvers)
        fcfs = [r.report.objective for r in small_result.records
                if r.solver == "fcfs"]
        assert summary["fcfs"].objective == pytest.approx(
            sum(fcfs) / len(fcfs))
        assert summary["fcfs"].replication_count == len(fcfs)
