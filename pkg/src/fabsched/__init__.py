"""Energy-aware flexible job-shop scheduling for a small wafer fab."""

from .formulation import ModelConfig, check_solution
from .model import (
    Assignment,
    Instance,
    MachineDef,
    MachineTimeline,
    OperationDef,
    ScheduleSolution,
    build_minifab,
    validate_instance,
)
from .solver import Objective, SolveResult, brute_force_solve, lower_bound, solve
from .timeline import optimize_timeline

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "Instance",
    "MachineDef",
    "MachineTimeline",
    "ModelConfig",
    "Objective",
    "OperationDef",
    "ScheduleSolution",
    "SolveResult",
    "brute_force_solve",
    "build_minifab",
    "check_solution",
    "lower_bound",
    "optimize_timeline",
    "solve",
    "validate_instance",
]
