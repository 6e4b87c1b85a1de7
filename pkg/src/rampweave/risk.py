"""Conflict severity: collision acceleration times urgent acceleration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CONSTANTS, Constants

DV_RANGE = (0.0, 100.0)  # m/s, head-on at 180 km/h each covers it
P_RANGE = (-3.0, 3.0)  # log10 of the mass ratio


@dataclass(frozen=True)
class MassRatio:
    """log10 of m1/m2, restricted to [-3, 3]."""

    p: float = 0.0

    def __post_init__(self):
        if not P_RANGE[0] <= self.p <= P_RANGE[1]:
            raise ValueError(f"log mass ratio {self.p} outside {P_RANGE}")

    @classmethod
    def from_k(cls, k: float) -> "MassRatio":
        if k <= 0:
            raise ValueError("mass ratio must be positive")
        return cls(math.log10(k))

    @property
    def k(self) -> float:
        return 10.0**self.p


@dataclass(frozen=True)
class SeverityAssessment:
    collision_accel: float
    urgent_accel: float
    severity: float
    critical: bool


def _p_value(p) -> float:
    return p.p if isinstance(p, MassRatio) else float(MassRatio(float(p)).p)


def collision_acceleration(dv: float, p: float | MassRatio,
                           constants: Constants = CONSTANTS) -> float:
    """Mean acceleration (m/s^2) over a perfectly inelastic impact.

    With the 0.2 s impact duration this is ``5 * dv / (1 + 10**p)``.
    """
    if not DV_RANGE[0] <= dv <= DV_RANGE[1]:
        raise ValueError(f"speed difference {dv} m/s outside {DV_RANGE}")
    p = _p_value(p)
    return (1.0 / constants.t_col) * dv / (1.0 + 10.0**p)


def urgent_acceleration(v_fast: float, v_slow: float, S: float) -> float:
    """Deceleration needed by the faster vehicle to match the slower one
    within spacing ``S``."""
    if S <= 0:
        raise ValueError(f"spacing must be positive, got {S}")
    if v_slow < 0 or v_fast < v_slow:
        raise ValueError(f"not a closing pair: v_fast={v_fast}, v_slow={v_slow}")
    return (v_fast**2 - v_slow**2) / (2.0 * S)


def is_critical(severity: float, constants: Constants = CONSTANTS) -> bool:
    return severity >= constants.J_crit


def severity_of(collision_accel: float, urgent_accel: float,
                constants: Constants = CONSTANTS) -> SeverityAssessment:
    j = collision_accel * urgent_accel
    return SeverityAssessment(collision_accel, urgent_accel, j, is_critical(j, constants))


def assess(dv: float, p: float | MassRatio, v_fast: float, v_slow: float, S: float,
           constants: Constants = CONSTANTS) -> SeverityAssessment:
    a = collision_acceleration(dv, p, constants)
    a_p = urgent_acceleration(v_fast, v_slow, S)
    return severity_of(a, a_p, constants)


def collision_accel_surface(dv_grid, p_grid, constants: Constants = CONSTANTS) -> np.ndarray:
    """Collision acceleration on the outer product of the two grids,
    shape ``(len(dv_grid), len(p_grid))``."""
    dv = np.asarray(dv_grid, dtype=float)
    p = np.asarray(p_grid, dtype=float)
    if dv.size == 0 or p.size == 0:
        raise ValueError("grids must be non-empty")
    if dv.min() < DV_RANGE[0] or dv.max() > DV_RANGE[1]:
        raise ValueError(f"speed difference outside {DV_RANGE}")
    if p.min() < P_RANGE[0] or p.max() > P_RANGE[1]:
        raise ValueError(f"log mass ratio outside {P_RANGE}")
    return (1.0 / constants.t_col) * dv[:, None] / (1.0 + 10.0 ** p[None, :])
