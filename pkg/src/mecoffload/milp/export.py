"""Deterministic LP-format text export of a built model.

The output follows the classic CPLEX LP conventions (Minimize / Subject To /
Bounds / Binaries / End) so external solvers can cross-check the model.
Floats are written with repr so re-exporting the same model is byte-stable.
"""

from __future__ import annotations

from pathlib import Path

from ..errors import MecOffloadError
from .model import MilpModel


def _num(x: float) -> str:
    return repr(float(x))


def _term(coef: float, name: str) -> str:
    sign = "-" if coef < 0 else "+"
    return f"{sign} {_num(abs(coef))} {name}"


def export_lp(model: MilpModel) -> str:
    lines: list[str] = []
    lines.append(f"\\ offload model: formulation={model.formulation} "
                 f"tasks={len(model.task_ids)} servers={len(model.server_ids)} "
                 f"slots={model.n_slots}")
    lines.append("Minimize")
    lines.append(" obj:")
    for vi in sorted(model.objective):
        coef = model.objective[vi]
        if coef != 0.0:
            lines.append(f"   {_term(coef, model.variables[vi].name)}")
    if model.objective_offset:
        lines.append(f"   {_term(model.objective_offset, '')}".rstrip())
    lines.append("Subject To")
    for row in model.rows:
        terms = " ".join(_term(row.coeffs[vi], model.variables[vi].name)
                         for vi in sorted(row.coeffs)
                         if row.coeffs[vi] != 0.0)
        op = "=" if row.sense == "==" else "<="
        lines.append(f" {row.name}: {terms} {op} {_num(row.rhs)}")
    lines.append("Bounds")
    for var in model.variables:
        if var.lower == var.upper:
            lines.append(f" {var.name} = {_num(var.lower)}")
        elif var.upper == float("inf"):
            lines.append(f" {_num(var.lower)} <= {var.name}")
        else:
            lines.append(f" {_num(var.lower)} <= {var.name} <= "
                         f"{_num(var.upper)}")
    binaries = [model.variables[vi].name for vi in model.binary_indices]
    if binaries:
        lines.append("Binaries")
        for name in binaries:
            lines.append(f" {name}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(model: MilpModel, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.write_text(export_lp(model), encoding="utf-8")
    except OSError as exc:
        raise MecOffloadError(f"failed writing {path}: {exc}") from exc
    return path
