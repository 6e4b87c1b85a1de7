"""Safe following distance and minimum merge gap."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CONSTANTS, Constants, ms_to_kmh

# speeds below this are treated as exactly zero (keeps the clock term clean)
_SPEED_FLOOR = 1e-9


def _check_speeds(*speeds: float) -> None:
    for v in speeds:
        if v < 0:
            raise ValueError(f"speed must be non-negative, got {v}")


def _floor(v: float) -> float:
    return 0.0 if v < _SPEED_FLOOR else v


@dataclass(frozen=True)
class SafeGapBreakdown:
    positioning: float
    clock: float
    speed_diff: float

    @property
    def total(self) -> float:
        return self.positioning + self.clock + self.speed_diff


@dataclass(frozen=True)
class MergeGapRequirement:
    front_clearance: float
    rear_clearance: float
    min_gap: float

    @classmethod
    def from_clearances(cls, front: float, rear: float,
                        constants: Constants = CONSTANTS) -> "MergeGapRequirement":
        return cls(front, rear, constants.L_v + front + rear)

    @classmethod
    def symmetric(cls, l_safe: float, constants: Constants = CONSTANTS) -> "MergeGapRequirement":
        return cls(l_safe, l_safe, min_merge_gap_symmetric(l_safe, constants))


def clock_error_distance(v1: float, v2: float, constants: Constants = CONSTANTS) -> float:
    """Distance (m) swept during the clock synchronisation error, speeds in m/s."""
    _check_speeds(v1, v2)
    return constants.tau_clk * (_floor(v1) + _floor(v2))


def speed_gap_distance(v_follow: float, v_lead: float, constants: Constants = CONSTANTS) -> float:
    """Braking allowance (m) for a follower closing on its leader. Speeds in km/h.

    Zero unless the follower is strictly faster.
    """
    _check_speeds(v_follow, v_lead)
    if v_follow <= v_lead:
        return 0.0
    return (v_follow - v_lead) ** 2 / constants.braking_denominator


def safe_following_distance(v_lead: float, v_follow: float,
                            constants: Constants = CONSTANTS) -> SafeGapBreakdown:
    """Bumper-to-bumper safe distance for a vehicle pair, speeds in m/s."""
    _check_speeds(v_lead, v_follow)
    v_lead, v_follow = _floor(v_lead), _floor(v_follow)
    return SafeGapBreakdown(
        positioning=2 * constants.L1,
        clock=clock_error_distance(v_lead, v_follow, constants),
        speed_diff=speed_gap_distance(ms_to_kmh(v_follow), ms_to_kmh(v_lead), constants),
    )


def safe_following_total(v_lead, v_follow, constants: Constants = CONSTANTS):
    """Array version of ``safe_following_distance(...).total`` (m/s in, m out).

    Used by the bulk audit; no validation beyond what numpy does.
    """
    v_lead = np.where(v_lead < _SPEED_FLOOR, 0.0, v_lead)
    v_follow = np.where(v_follow < _SPEED_FLOOR, 0.0, v_follow)
    closing = np.maximum(v_follow * 3.6 - v_lead * 3.6, 0.0)
    return (2 * constants.L1 + constants.tau_clk * (v_lead + v_follow)
            + closing**2 / constants.braking_denominator)


def min_merge_gap_symmetric(l_safe: float, constants: Constants = CONSTANTS) -> float:
    if l_safe < 0:
        raise ValueError("safe distance must be non-negative")
    return constants.L_v + 2 * l_safe


def merge_clearance(v_rx: float, v_neighbor: float, constants: Constants = CONSTANTS) -> float:
    """Clearance (m) between a merging vehicle and one neighbour of the
    target gap, speeds in km/h. The squared difference makes this symmetric."""
    _check_speeds(v_rx, v_neighbor)
    return 2 * constants.L1 + (v_rx - v_neighbor) ** 2 / constants.braking_denominator


def min_merge_gap(v_rx: float, v_front: float, v_rear: float,
                  constants: Constants = CONSTANTS) -> MergeGapRequirement:
    return MergeGapRequirement.from_clearances(
        merge_clearance(v_rx, v_front, constants),
        merge_clearance(v_rx, v_rear, constants),
        constants,
    )
