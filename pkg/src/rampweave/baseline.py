"""Krauss-like car following with gap-acceptance merging.

This is the non-cooperative comparison strategy. It is a simplified
stand-in for a full microsimulator, not a replica of one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import CONSTANTS, Constants, VehicleState, merge_lateral_speed, ms_to_kmh
from .safety import MergeGapRequirement, min_merge_gap


@dataclass(frozen=True)
class FollowerParams:
    reaction_time: float = 1.0
    max_decel: float = 4.5
    max_accel: float = 2.6
    desired_speed: float = 20.0

    def __post_init__(self):
        for name in ("reaction_time", "max_decel", "max_accel", "desired_speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_decel < self.max_accel:
            raise ValueError("max_decel must be at least max_accel")


def safe_speed(v: float, v_leader: float, gap: float, params: FollowerParams) -> float:
    tau = params.reaction_time
    return v_leader + (gap - v_leader * tau) / (v / params.max_decel + tau)


def follow_step(vehicle: VehicleState, leader: VehicleState | None,
                params: FollowerParams, dt: float) -> float:
    """Speed for the next step.

    Pass the leader's already-updated state when updating front to back: the
    result is then additionally capped so that an Euler position update
    cannot carry the follower into the leader's rear bumper.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    v = vehicle.speed
    new = min(v + params.max_accel * dt, params.desired_speed)
    if leader is not None:
        gap = leader.rear - vehicle.station
        new = min(new, safe_speed(v, leader.speed, gap, params), gap / dt)
    return max(0.0, new)


def neighbours(ramp: VehicleState, fleet: Sequence[VehicleState]
               ) -> tuple[VehicleState | None, VehicleState | None]:
    """Closest mainline vehicle at or ahead of the ramp vehicle's front
    bumper, and the closest one behind it."""
    front = rear = None
    for veh in fleet:
        if veh.station >= ramp.station:
            if front is None or veh.station < front.station:
                front = veh
        elif rear is None or veh.station > rear.station:
            rear = veh
    return front, rear


def merge_requirement(ramp: VehicleState, front: VehicleState | None,
                      rear: VehicleState | None,
                      constants: Constants = CONSTANTS) -> MergeGapRequirement:
    v_rx = merge_lateral_speed(ms_to_kmh(ramp.speed), constants)
    v_front = ms_to_kmh(front.speed if front else ramp.speed)
    v_rear = ms_to_kmh(rear.speed if rear else ramp.speed)
    return min_merge_gap(v_rx, v_front, v_rear, constants)


def try_merge(ramp: VehicleState, fleet: Sequence[VehicleState],
              requirement: MergeGapRequirement | None = None,
              accel_lane: tuple[float, float] = (0.0, 200.0),
              constants: Constants = CONSTANTS) -> bool:
    """Accept the merge iff the adjacent mainline gap reaches the minimum
    merge gap and both clearances hold at the current positions.

    Without an explicit ``requirement`` it is computed from the actual
    speeds of the ramp vehicle and its two would-be neighbours.
    """
    if not accel_lane[0] <= ramp.station <= accel_lane[1]:
        return False
    front, rear = neighbours(ramp, fleet)
    if requirement is None:
        requirement = merge_requirement(ramp, front, rear, constants)
    gap = (front.rear if front else math.inf) - (rear.station if rear else -math.inf)
    if gap < requirement.min_gap:
        return False
    if front is not None and front.rear - ramp.station < requirement.front_clearance:
        return False
    if rear is not None and ramp.rear - rear.station < requirement.rear_clearance:
        return False
    return True
