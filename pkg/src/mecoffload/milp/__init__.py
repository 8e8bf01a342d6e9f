"""Exact optimization lane: model builder, LP simplex, branch and bound."""

from .bnb import (BnbResult, DEFAULT_GAP_TOL, DEFAULT_NODE_LIMIT,
                  INTEGRALITY_TOL, MilpRun, branch_and_bound,
                  extract_schedule, solve_scenario)
from .export import export_lp, write_lp
from .model import (MilpModel, ProductTriple, Row, Variable, build_model,
                    encode_schedule, estimate_variable_counts,
                    evaluate_solution, row_activity, verify_product_envelopes,
                    violated_rows)
from .simplex import LpSolution, solve_lp_relaxation

__all__ = [
    "BnbResult", "DEFAULT_GAP_TOL", "DEFAULT_NODE_LIMIT", "INTEGRALITY_TOL",
    "LpSolution", "MilpModel", "MilpRun", "ProductTriple", "Row", "Variable",
    "branch_and_bound", "build_model", "encode_schedule",
    "estimate_variable_counts", "evaluate_solution", "export_lp",
    "extract_schedule", "row_activity", "solve_lp_relaxation",
    "solve_scenario", "verify_product_envelopes", "violated_rows", "write_lp",
]
