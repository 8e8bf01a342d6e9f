"""Exception types shared across the package."""

from __future__ import annotations


class MecOffloadError(Exception):
    """Base class for package-specific errors."""


class ScenarioValidationError(MecOffloadError):
    """A scenario failed validation; carries the violation list."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"scenario invalid: {lines}")


class InfeasibleScheduleError(MecOffloadError):
    """A schedule violates the feasibility rules of its scenario."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"infeasible schedule: {lines}")


class ModelTooLargeError(MecOffloadError):
    """Requested MILP exceeds the configured variable budget."""


class InfeasibleModelError(MecOffloadError):
    """Root relaxation infeasible: some urgent task cannot be scheduled."""

    def __init__(self, message, task_ids=()):
        self.task_ids = tuple(task_ids)
        super().__init__(message)


class FractionalSolutionError(MecOffloadError):
    """Schedule extraction was handed a non-integral solution."""


class PivotLimitError(MecOffloadError):
    """Simplex gave up after the configured pivot budget (numerical trouble)."""


class InstanceTooLargeError(MecOffloadError):
    """Exhaustive oracle refused an instance beyond its hard caps."""


class ScenarioFormatError(MecOffloadError):
    """Scenario file could not be parsed."""
