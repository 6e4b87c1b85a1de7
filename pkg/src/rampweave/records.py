"""Trace containers shared by the engine, metrics and IO layers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import VehicleClass


@dataclass
class VehicleRecord:
    id: int
    cls: VehicleClass
    entry_time: float
    exit_time: float | None = None
    distance: float = 0.0
    fuel: float = 0.0

    @property
    def exited(self) -> bool:
        return self.exit_time is not None


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    id: int
    detail: str = ""


@dataclass
class SimulationTrace:
    """Column-oriented per-step records plus events and per-vehicle summaries.

    Rows are ordered by ``(t, id)``. ``is_ramp`` marks the vehicle class,
    ``in_main`` the lane the vehicle occupies at that instant.
    """

    dt: float
    t: np.ndarray
    id: np.ndarray
    is_ramp: np.ndarray
    station: np.ndarray
    speed: np.ndarray
    accel: np.ndarray
    in_main: np.ndarray
    events: list[Event] = field(default_factory=list)
    vehicles: dict[int, VehicleRecord] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def empty(cls, dt: float, **kw) -> "SimulationTrace":
        z = np.zeros(0)
        return cls(dt, z, z.astype(np.int64), z.astype(bool), z, z.copy(), z.copy(),
                   z.astype(bool), **kw)

    def __len__(self) -> int:
        return len(self.t)

    def violations(self) -> list[Event]:
        return [e for e in self.events if e.kind == "audit_violation"]

    def flags(self) -> list[Event]:
        return [e for e in self.events if e.kind.startswith("audit_")]

    def merge_events(self) -> list[Event]:
        return [e for e in self.events if e.kind == "merge"]
