"""Deterministic on-ramp merge simulation with mainline-priority planning."""

__version__ = "0.1.0"

from .core import CONSTANTS, GEOMETRY, Constants, Geometry, Lane, VehicleClass, VehicleState
from .engine import AuditFailure, ScenarioConfig, generate_arrivals, run
from .planner import FreeFlow, MergeInfeasible, MergePlan, PlannerConfig, plan

__all__ = [
    "CONSTANTS", "GEOMETRY", "Constants", "Geometry", "Lane", "VehicleClass", "VehicleState",
    "AuditFailure", "ScenarioConfig", "generate_arrivals", "run",
    "FreeFlow", "MergeInfeasible", "MergePlan", "PlannerConfig", "plan",
]
