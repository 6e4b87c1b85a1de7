"""Mainline-priority merge planning.

The ramp vehicle is planned once, when it shows up (and again on every
replan tick while it is being held). Mainline vehicles keep their speed
unless no usable gap exists, in which case the vehicle ahead of the chosen
gap speeds up and slows back down to open it.

Times in plans are relative to the planning instant; callers shift them.
Speeds follow the units of the underlying formulas: km/h arguments are
named ``v0``/``vR0``, vehicle states carry m/s.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .core import (
    CONSTANTS, GEOMETRY, Constants, Geometry, VehicleState, kmh_to_ms,
    merge_lateral_speed, ms_to_kmh,
)
from .kinematics import PiecewiseTrajectory, ramp_trajectory
from .safety import MergeGapRequirement, min_merge_gap, safe_following_total


class MergeInfeasible(Exception):
    """No acceleration / merge point satisfies the bounds for this gap."""


class MergeMode(str, enum.Enum):
    DIRECT = "direct_merge"
    GAP_CREATION = "gap_creation"


@dataclass(frozen=True)
class PlannerConfig:
    v0_kmh: float = 72.0
    default_ar: float = 2.0
    # spacing of the fallback acceleration grid; 0 turns the fallback off
    retime_step: float = 0.05
    constants: Constants = CONSTANTS
    geometry: Geometry = GEOMETRY

    @property
    def v0_ms(self) -> float:
        return kmh_to_ms(self.v0_kmh)

    def requirement(self) -> MergeGapRequirement:
        # every vehicle around the merge point cruises at v0 when it happens
        v_rx = merge_lateral_speed(self.v0_kmh, self.constants)
        return min_merge_gap(v_rx, self.v0_kmh, self.v0_kmh, self.constants)


@dataclass(frozen=True)
class ConflictReport:
    ramp_id: int
    mainline_id: int
    t_merge: float
    ramp_station: float
    mainline_station: float


@dataclass(frozen=True)
class GapSelection:
    front_id: int | None
    rear_id: int | None
    S_front: float
    S_behind: float
    gap_length: float
    mode: MergeMode


@dataclass(frozen=True)
class GapCreationProfile:
    delta_L: float
    t2p: float
    a_acc: float
    a_dec: float
    t_acc: float
    t_dec: float
    v_peak: float
    ramp_accel: float
    merge_station: float

    def phases(self) -> list[tuple[float, float]]:
        """Speed-up then slow-down phases for the vehicle ahead of the gap."""
        return [(self.t_acc, self.a_acc), (self.t_dec, self.a_dec)]


@dataclass(frozen=True)
class FreeFlow:
    ramp_trajectory: PiecewiseTrajectory
    ramp_accel: float
    merge_station: float
    t_merge: float


@dataclass(frozen=True)
class MergePlan:
    ramp_accel: float
    merge_station: float
    ramp_trajectory: PiecewiseTrajectory
    t_merge: float
    gap: GapSelection
    conflict: ConflictReport | None = None
    x_adjustment: GapCreationProfile | None = None
    x_adjust_start: float | None = None  # when the vehicle ahead starts its profile
    retimed: bool = False  # lands inside a gap rather than right behind its front vehicle


Verifier = Callable[["FreeFlow | MergePlan"], bool]


def _cruise_time(r: float, vR0: float) -> float:
    """Seconds to reach the ramp end from ``r`` at ``vR0`` km/h."""
    if r >= 0:
        return 0.0
    if vR0 <= 0:
        raise MergeInfeasible("vehicle is stopped upstream of the ramp end")
    return abs(r) / kmh_to_ms(vR0)


def _merge_station(vR0: float, v0: float, a: float) -> float:
    return (kmh_to_ms(v0) ** 2 - kmh_to_ms(vR0) ** 2) / (2 * a)


def accel_lower_bound(v0: float, vR0: float, constants: Constants = CONSTANTS) -> float:
    """Smallest ramp acceleration that reaches ``v0`` within the acceleration lane."""
    if not v0 > vR0 >= 0:
        raise ValueError(f"need v0 > vR0 >= 0, got v0={v0}, vR0={vR0}")
    return ((v0 / 3.6) ** 2 - (vR0 / 3.6) ** 2) / (2 * constants.S_a)


def _check_bounds(a: float, v0: float, vR0: float, constants: Constants) -> float:
    lb = accel_lower_bound(v0, vR0, constants)
    if not lb <= a <= constants.a_max:
        raise MergeInfeasible(f"acceleration {a:.4f} outside [{lb:.4f}, {constants.a_max}]")
    station = _merge_station(vR0, v0, a)
    if not 0 < station < constants.S_a:
        raise MergeInfeasible(f"merge point {station:.3f} outside the acceleration lane")
    return station


def identify_conflict(ramp: VehicleState, fleet: Sequence[VehicleState], v0: float,
                      vR0: float, a_r: float,
                      constants: Constants = CONSTANTS) -> ConflictReport | None:
    """Mainline vehicle that would sit within one body length (plus the
    equal-speed spacing) of the ramp vehicle's unadjusted merge point."""
    if not fleet:
        return None
    t_merge = _cruise_time(ramp.station, vR0) + (v0 - vR0) / (3.6 * a_r)
    s_ramp = _merge_station(vR0, v0, a_r)
    band = constants.L_v + constants.L_mm
    hit = None
    for veh in fleet:
        s_main = veh.station + v0 / 3.6 * t_merge
        if s_main - band <= s_ramp <= s_main + band:
            # two candidates: the one further downstream wins
            if hit is None or s_main > hit[1]:
                hit = (veh, s_main)
    if hit is None:
        return None
    return ConflictReport(ramp.id, hit[0].id, t_merge, s_ramp, hit[1])


def _ordered(fleet: Sequence[VehicleState]) -> list[VehicleState]:
    return sorted(fleet, key=lambda v: (-v.station, v.id))


def _gap_length(front: VehicleState | None, rear: VehicleState | None) -> float:
    if front is None or rear is None:
        return math.inf
    return front.station - front.length - rear.station


def _gap(ordered: list[VehicleState], k: int) -> tuple[VehicleState | None, VehicleState | None]:
    """Gap ``k`` lies between ``ordered[k-1]`` (front) and ``ordered[k]`` (rear)."""
    front = ordered[k - 1] if k >= 1 else None
    rear = ordered[k] if k < len(ordered) else None
    return front, rear


def iter_direct_gaps(ordered: list[VehicleState], i: int,
                     requirement: MergeGapRequirement) -> Iterator[GapSelection]:
    """Gaps large enough for a direct merge, in preference order around
    conflict vehicle ``ordered[i]``: the two adjacent gaps (larger first,
    ties to the front), then outward alternating front / rear."""
    n = len(ordered)
    s_front = _gap_length(*_gap(ordered, i))
    s_behind = _gap_length(*_gap(ordered, i + 1))
    lmin = requirement.min_gap

    order = [i, i + 1] if s_front >= s_behind else [i + 1, i]
    front_side = list(range(i - 1, -1, -1))
    rear_side = list(range(i + 2, n + 1))
    for j in range(max(len(front_side), len(rear_side))):
        if j < len(front_side):
            order.append(front_side[j])
        if j < len(rear_side):
            order.append(rear_side[j])

    for k in order:
        front, rear = _gap(ordered, k)
        length = _gap_length(front, rear)
        if length >= lmin:
            yield GapSelection(
                front.id if front else None, rear.id if rear else None,
                s_front, s_behind, length, MergeMode.DIRECT,
            )


def solve_direct_merge_accel(x: float, r: float, v0: float, vR0: float,
                             clearance_front: float,
                             constants: Constants = CONSTANTS) -> float:
    """Ramp acceleration that brings the ramp vehicle up to ``v0`` exactly
    ``L_v + clearance_front`` behind the vehicle whose initial station is
    ``x``. Raises :class:`MergeInfeasible` outside the comfort / lane bounds.
    """
    if vR0 >= v0:
        raise ValueError("ramp speed must be below the mainline speed")
    t1 = _cruise_time(r, vR0)
    # position of the gap's front vehicle when the ramp vehicle reaches the
    # ramp end, less the room the ramp vehicle needs behind it
    reach = x + v0 / 3.6 * t1 - constants.L_v - clearance_front
    if reach >= 0:
        raise MergeInfeasible("target vehicle too far downstream for any positive acceleration")
    a = -((v0 - vR0) ** 2) / (25.92 * reach)
    _check_bounds(a, v0, vR0, constants)
    return a


def _leader_headway_ok(gap0: float, profile: GapCreationProfile, v0_ms: float,
                       constants: Constants, n: int = 65) -> bool:
    tau = np.linspace(0.0, profile.t2p, n)
    half = profile.t2p / 2
    a = profile.a_acc
    rel_v = np.where(tau <= half, a * tau, a * (profile.t2p - tau))
    rel_s = np.where(tau <= half, 0.5 * a * tau**2,
                     profile.delta_L - 0.5 * a * (profile.t2p - tau) ** 2)
    need = safe_following_total(np.full(n, v0_ms), v0_ms + rel_v, constants)
    return bool(np.all(gap0 - rel_s >= need))


def plan_gap_creation(x: float, y: float, r: float, v0: float, vR0: float,
                      requirement: MergeGapRequirement,
                      constants: Constants = CONSTANTS,
                      leader_station: float | None = None) -> GapCreationProfile:
    """Open a gap that is too short by moving its front vehicle forward.

    The front vehicle speeds up uniformly for half of ``t2p`` and slows back
    to ``v0`` over the other half, gaining ``delta_L``; the ramp vehicle
    then merges ``L_v + front_clearance`` behind it with the acceleration
    that takes exactly ``t2p``.
    """
    if vR0 >= v0:
        raise ValueError("ramp speed must be below the mainline speed")
    length = x - y - constants.L_v
    delta_L = requirement.min_gap - length
    if delta_L < 0:
        raise ValueError(f"gap {length:.3f} m already admits the merge")
    t1 = _cruise_time(r, vR0)
    reach = x + v0 / 3.6 * t1 + delta_L - constants.L_v - requirement.front_clearance
    t2p = 7.2 * reach / (vR0 - v0)
    if t2p <= 0:
        raise MergeInfeasible("gap front vehicle is too far downstream")
    ramp_accel = (v0 - vR0) / (3.6 * t2p)
    merge_station = (v0 + vR0) * t2p / 7.2
    a_acc = 4 * delta_L / t2p**2
    _check_bounds(ramp_accel, v0, vR0, constants)
    if a_acc > constants.a_max:
        raise MergeInfeasible(f"gap creation needs {a_acc:.3f} m/s^2")
    v0_ms = kmh_to_ms(v0)
    profile = GapCreationProfile(
        delta_L=delta_L, t2p=t2p, a_acc=a_acc, a_dec=-a_acc,
        t_acc=t2p / 2, t_dec=t2p / 2, v_peak=v0_ms + a_acc * t2p / 2,
        ramp_accel=ramp_accel, merge_station=merge_station,
    )
    if leader_station is not None:
        gap0 = leader_station - constants.L_v - x
        if not _leader_headway_ok(gap0, profile, v0_ms, constants):
            raise MergeInfeasible("speeding up would crowd the vehicle ahead")
    return profile


def select_target_gap(conflict: ConflictReport, fleet: Sequence[VehicleState],
                      requirement: MergeGapRequirement,
                      ramp: VehicleState | None = None,
                      config: PlannerConfig | None = None) -> GapSelection:
    """Target gap around the conflicting mainline vehicle.

    Without ``ramp``/``config`` only the size rules apply. With them, a
    candidate must also admit a feasible direct-merge acceleration.
    Falls back to the (too short) gap ahead of the conflict vehicle.
    """
    ordered = _ordered(fleet)
    if len(ordered) < 2:
        return GapSelection(None, None, math.inf, math.inf, math.inf, MergeMode.DIRECT)
    i = next(k for k, v in enumerate(ordered) if v.id == conflict.mainline_id)
    constants = config.constants if config else CONSTANTS
    for gap in iter_direct_gaps(ordered, i, requirement):
        if ramp is None or config is None:
            return gap
        if gap.front_id is None:
            continue
        x = next(v for v in ordered if v.id == gap.front_id).station
        try:
            solve_direct_merge_accel(x, ramp.station, config.v0_kmh, ms_to_kmh(ramp.speed),
                                     requirement.front_clearance, constants)
        except MergeInfeasible:
            continue
        return gap
    for k in (i, i + 1):
        front, rear = _gap(ordered, k)
        length = _gap_length(front, rear)
        if length < requirement.min_gap:
            return GapSelection(front.id, rear.id, _gap_length(*_gap(ordered, i)),
                                _gap_length(*_gap(ordered, i + 1)), length,
                                MergeMode.GAP_CREATION)
    raise MergeInfeasible("no gap around the conflict vehicle")


def _stations_at(ordered: list[VehicleState], v0_ms: float, t: float) -> list[float]:
    return [v.station + v0_ms * t for v in ordered]


def _clearances_ok(ordered: list[VehicleState], v0_ms: float, t_merge: float,
                   s_ramp: float, requirement: MergeGapRequirement,
                   constants: Constants) -> bool:
    for veh, s in zip(ordered, _stations_at(ordered, v0_ms, t_merge)):
        if s >= s_ramp:
            if s - veh.length - s_ramp < requirement.front_clearance:
                return False
        elif s_ramp - constants.L_v - s < requirement.rear_clearance:
            return False
    return True


def plan(ramp: VehicleState, fleet: Sequence[VehicleState], config: PlannerConfig,
         verify: Verifier | None = None) -> FreeFlow | MergePlan:
    """Plan the merge of ``ramp`` (station <= ramp end, speed in m/s).

    ``fleet`` holds the vehicles that will be on the mainline around the
    merge, each at its station as seen at the planning instant and assumed
    to cruise at the mainline speed. ``verify`` lets the caller veto a
    candidate (e.g. after checking it against full trajectories); candidates
    are offered in preference order. Raises :class:`MergeInfeasible` if
    every candidate fails.
    """
    c = config.constants
    v0 = config.v0_kmh
    v0_ms = config.v0_ms
    vR = ms_to_kmh(ramp.speed)
    if vR >= v0:
        raise ValueError("ramp vehicle already at mainline speed")
    r = ramp.station
    t1 = _cruise_time(r, vR)
    requirement = config.requirement()
    ordered = _ordered(fleet)
    lb = accel_lower_bound(v0, vR, c)
    a_def = min(max(config.default_ar, lb * 1.01), c.a_max)

    def accepted(candidate):
        return verify is None or verify(candidate)

    def ramp_path(a: float) -> PiecewiseTrajectory:
        return ramp_trajectory(0.0, r, ramp.speed, v0_ms, a, config.geometry.ramp_end)

    t_free = t1 + (v0 - vR) / (3.6 * a_def)
    s_free = _merge_station(vR, v0, a_def)
    conflict = identify_conflict(ramp, ordered, v0, vR, a_def, c)
    if conflict is None and _clearances_ok(ordered, v0_ms, t_free, s_free, requirement, c):
        free = FreeFlow(ramp_path(a_def), a_def, s_free, t_free)
        if accepted(free):
            return free
    if not ordered:
        raise MergeInfeasible("free flow rejected and no mainline gap to choose from")

    if conflict is not None:
        i = next(k for k, v in enumerate(ordered) if v.id == conflict.mainline_id)
    else:
        at_merge = _stations_at(ordered, v0_ms, t_free)
        i = min(range(len(ordered)), key=lambda k: (abs(at_merge[k] - s_free), k))

    for gap in iter_direct_gaps(ordered, i, requirement):
        front = next((v for v in ordered if v.id == gap.front_id), None)
        if front is None:
            # open road ahead of everyone: default profile, rear clearance only
            rear = next(v for v in ordered if v.id == gap.rear_id)
            if s_free - c.L_v - (rear.station + v0_ms * t_free) < requirement.rear_clearance:
                continue
            a = a_def
        else:
            try:
                a = solve_direct_merge_accel(front.station, r, v0, vR,
                                             requirement.front_clearance, c)
            except MergeInfeasible:
                continue
        t2 = (v0 - vR) / (3.6 * a)
        candidate = MergePlan(a, _merge_station(vR, v0, a), ramp_path(a), t1 + t2, gap, conflict)
        if accepted(candidate):
            return candidate

    for k in (i, i + 1):
        front, rear = _gap(ordered, k)
        if front is None or rear is None:
            continue
        length = _gap_length(front, rear)
        if length >= requirement.min_gap or abs(front.speed - v0_ms) > 1e-9:
            continue
        leader = ordered[k - 2] if k >= 2 else None
        try:
            profile = plan_gap_creation(front.station, rear.station, r, v0, vR, requirement, c,
                                        leader.station if leader else None)
        except MergeInfeasible:
            continue
        gap = GapSelection(front.id, rear.id, _gap_length(*_gap(ordered, i)),
                           _gap_length(*_gap(ordered, i + 1)), length, MergeMode.GAP_CREATION)
        candidate = MergePlan(profile.ramp_accel, profile.merge_station,
                              ramp_path(profile.ramp_accel), t1 + profile.t2p, gap, conflict,
                              x_adjustment=profile, x_adjust_start=t1)
        if accepted(candidate):
            return candidate

    # last resort before holding: any other acceleration whose merge point
    # clears every neighbour
    if config.retime_step > 0:
        grid = np.arange(lb * 1.01, c.a_max + 1e-12, config.retime_step)
        for a in sorted(grid, key=lambda g: (abs(g - a_def), g)):
            a = float(a)
            s_m = _merge_station(vR, v0, a)
            if not 0 < s_m < c.S_a:
                continue
            t_m = t1 + (v0 - vR) / (3.6 * a)
            if identify_conflict(ramp, ordered, v0, vR, a, c) is not None:
                continue
            if not _clearances_ok(ordered, v0_ms, t_m, s_m, requirement, c):
                continue
            at_merge = _stations_at(ordered, v0_ms, t_m)
            ahead = [k for k, s in enumerate(at_merge) if s >= s_m]
            k = ahead[-1] + 1 if ahead else 0
            front, rear = _gap(ordered, k)
            gap = GapSelection(front.id if front else None, rear.id if rear else None,
                               _gap_length(*_gap(ordered, i)), _gap_length(*_gap(ordered, i + 1)),
                               _gap_length(front, rear), MergeMode.DIRECT)
            candidate = MergePlan(a, s_m, ramp_path(a), t_m, gap, conflict, retimed=True)
            if accepted(candidate):
                return candidate

    raise MergeInfeasible(f"ramp vehicle {ramp.id}: every candidate gap rejected")
