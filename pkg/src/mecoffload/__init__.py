"""Task offloading for 5G edge servers: models, solvers, experiments.

The package covers one pipeline: generate a scenario (users emitting
Poisson-arriving compute tasks, some tagged urgent, plus edge servers and an
uplink channel), schedule it with exact optimization, population-based
search, or greedy baselines -- all placing task starts on a shared slot grid
-- then score every schedule with the same latency/drop objective and sweep
whole parameter grids reproducibly.
"""

from ._version import __version__
from .defaults import (DEFAULT_DELTA, REFERENCE_CPU_FREQUENCY,
                       URGENCY_BAND, URGENT_DROP_PENALTY)
from .errors import (FractionalSolutionError, InfeasibleModelError,
                     InfeasibleScheduleError, InstanceTooLargeError,
                     MecOffloadError, ModelTooLargeError, PivotLimitError,
                     ScenarioFormatError, ScenarioValidationError)
from .greedy import schedule_fcfs, schedule_stf
from .harness import (ExperimentPlan, ExperimentResult, RunRecord,
                      SkipRecord, export_results, run_experiment)
from .latency import (LatencyBreakdown, comm_latency, computational_latency,
                      drop_term, dropped_ratio, efficiency_vs,
                      objective_value, task_breakdown, uplink_rate,
                      waiting_ratio)
from .metaheuristics import (GaParams, PsoParams, SearchResult, decode,
                             fitness, repair_urgent, run_ga, run_pso)
from .metrics import (ClassMetrics, MetricsReport, average_reports,
                      compute_metrics)
from .milp import (BnbResult, LpSolution, MilpModel, MilpRun,
                   branch_and_bound, build_model, export_lp,
                   extract_schedule, solve_lp_relaxation, solve_scenario,
                   write_lp)
from .model import (ChannelParams, Scenario, Schedule, Server, Task,
                    Violation, check_schedule, effective_duration,
                    empty_schedule, ensure_valid, make_schedule,
                    validate_scenario)
from .oracle import OracleResult, enumerate_optimal
from .scenario_io import (parse_scenario, read_scenario, serialize_scenario,
                          write_scenario)
from .timeline import ServerState, place_in_order, slot_window, slots_needed
from .workload import (WorkloadConfig, config_for_replication,
                       default_servers, default_slot_width, derive_seed,
                       gen_arrivals, gen_scenario, gen_tasks,
                       classify_urgency)

__all__ = [
    "__version__",
    # constants
    "DEFAULT_DELTA", "REFERENCE_CPU_FREQUENCY", "URGENCY_BAND",
    "URGENT_DROP_PENALTY",
    # errors
    "FractionalSolutionError", "InfeasibleModelError",
    "InfeasibleScheduleError", "InstanceTooLargeError", "MecOffloadError",
    "ModelTooLargeError", "PivotLimitError", "ScenarioFormatError",
    "ScenarioValidationError",
    # core model
    "ChannelParams", "Scenario", "Schedule", "Server", "Task", "Violation",
    "check_schedule", "effective_duration", "empty_schedule", "ensure_valid",
    "make_schedule", "validate_scenario",
    # latency / objective
    "LatencyBreakdown", "comm_latency", "computational_latency", "drop_term",
    "dropped_ratio", "efficiency_vs", "objective_value", "task_breakdown",
    "uplink_rate", "waiting_ratio",
    # grid placement
    "ServerState", "place_in_order", "slot_window", "slots_needed",
    # workload
    "WorkloadConfig", "classify_urgency", "config_for_replication",
    "default_servers", "default_slot_width", "derive_seed", "gen_arrivals",
    "gen_scenario", "gen_tasks",
    # scenario io
    "parse_scenario", "read_scenario", "serialize_scenario", "write_scenario",
    # solvers
    "schedule_fcfs", "schedule_stf",
    "GaParams", "PsoParams", "SearchResult", "decode", "fitness",
    "repair_urgent", "run_ga", "run_pso",
    "BnbResult", "LpSolution", "MilpModel", "MilpRun", "branch_and_bound",
    "build_model", "export_lp", "extract_schedule", "solve_lp_relaxation",
    "solve_scenario", "write_lp",
    "OracleResult", "enumerate_optimal",
    # metrics / experiments
    "ClassMetrics", "MetricsReport", "average_reports", "compute_metrics",
    "ExperimentPlan", "ExperimentResult", "RunRecord", "SkipRecord",
    "export_results", "run_experiment",
]
