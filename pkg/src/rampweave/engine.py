"""Scenario configuration, arrivals, the two simulation strategies and the
runtime safety audit.

Under ``mainline_priority`` every vehicle follows a closed-form trajectory,
so the run is event driven: ramp arrivals (and periodic replans of held ramp
vehicles) call the planner, and the per-step trace is sampled afterwards.
The ``baseline`` strategy is a plain fixed-step loop.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import __version__
from .baseline import FollowerParams, safe_speed, try_merge
from .core import (
    CONSTANTS, GEOMETRY, Constants, Geometry, Lane, VehicleClass, VehicleState, kmh_to_ms,
)
from .kinematics import PiecewiseTrajectory
from .metrics import FUEL_PARAMS, fuel_rate
from .planner import FreeFlow, MergeInfeasible, MergePlan, PlannerConfig, plan
from .records import Event, SimulationTrace, VehicleRecord
from .risk import collision_acceleration
from .safety import safe_following_distance, safe_following_total

STRATEGIES = ("baseline", "mainline_priority")
PRNG_NAME = "numpy.random.PCG64"
STREAMS = {"mainline": 0, "ramp": 1, "speeds": 2}

VERIFY_STEP = 0.025  # s, grid used to vet candidate plans
VERIFY_MARGIN = 0.005  # m, extra room demanded on that grid
VERIFY_HORIZON = 120.0  # s
LOOKAHEAD = 60.0  # s of future mainline arrivals shown to the planner
MAX_PLAN_CRUISE = 30.0  # s; slower approaches keep holding instead
CREEP_ACCEL = 1.0
MAX_BRAKE = 4.5


class AuditFailure(RuntimeError):
    """Safe-distance violation under mainline priority; indicates a planning bug."""

    def __init__(self, violation: "Violation"):
        self.violation = violation
        super().__init__(
            f"safe distance violated at t={violation.t:.3f} s: vehicle {violation.follower} "
            f"behind {violation.leader}, gap {violation.gap:.4f} m < {violation.required:.4f} m"
        )


@dataclass(frozen=True)
class ScenarioConfig:
    q_main_vph: float = 1800.0
    q_ramp_vph: float = 500.0
    strategy: str = "mainline_priority"
    v0_kmh: float = 72.0  # common mainline speed under mainline priority
    vR0_kmh: float = 61.2
    baseline_speed_range_kmh: tuple[float, float] = (54.0, 72.0)
    default_ar_ms2: float = 2.0
    seed: int = 20240611
    duration_s: float = 600.0
    dt_s: float = 0.1
    warmup_s: float = 60.0
    min_headway_s: float = 1.5
    replan_interval_s: float = 0.5
    hold_gap_m: float = 2.0
    ramp_freeflow_s: float | None = None
    reaction_time_s: float = 1.0
    max_decel_ms2: float = 4.5
    max_accel_ms2: float = 2.6
    audit_abort: bool = True
    inject_fault: bool = False  # test hook: a mainline vehicle 0.02 m behind the first

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        for key in ("q_main_vph", "q_ramp_vph", "warmup_s", "min_headway_s", "hold_gap_m"):
            if getattr(self, key) < 0:
                raise ValueError(f"{key} must be non-negative")
        for key in ("dt_s", "duration_s", "v0_kmh", "vR0_kmh", "default_ar_ms2",
                    "replan_interval_s", "reaction_time_s", "max_decel_ms2", "max_accel_ms2"):
            if not getattr(self, key) > 0:
                raise ValueError(f"{key} must be positive")
        if self.vR0_kmh >= self.v0_kmh:
            raise ValueError("vR0_kmh must be below v0_kmh")
        lo, hi = self.baseline_speed_range_kmh
        if not 0 < lo <= hi:
            raise ValueError("baseline_speed_range_kmh must be an increasing positive pair")
        if self.ramp_freeflow_s is not None and not self.ramp_freeflow_s > 0:
            raise ValueError("ramp_freeflow_s must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        object.__setattr__(self, "baseline_speed_range_kmh", (float(lo), float(hi)))

    @property
    def v0_ms(self) -> float:
        return kmh_to_ms(self.v0_kmh)

    @property
    def vR0_ms(self) -> float:
        return kmh_to_ms(self.vR0_kmh)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["baseline_speed_range_kmh"] = list(self.baseline_speed_range_kmh)
        return d


def rng_for(seed: int, stream: str) -> np.random.Generator:
    """Independent, portable generator per named stream."""
    ss = np.random.SeedSequence(seed, spawn_key=(STREAMS[stream],))
    return np.random.Generator(np.random.PCG64(ss))


def generate_arrivals(q: float, duration: float, seed: int, min_headway: float = 1.5,
                      stream: str = "mainline") -> list[float]:
    """Arrival times in ``[0, duration)`` for a flow of ``q`` veh/h.

    Headways are ``min_headway`` plus an exponential draw, so the mean stays
    3600/q. If that mean does not exceed ``min_headway`` the flow is
    uniform instead.
    """
    if q <= 0 or duration <= 0:
        return []
    mean = 3600.0 / q
    if mean <= min_headway:
        return [float(t) for t in np.arange(mean, duration, mean)]
    rng = rng_for(seed, stream)
    times: list[float] = []
    t = 0.0
    chunk = max(16, int(1.2 * duration / mean) + 8)
    while True:
        heads = min_headway + rng.exponential(mean - min_headway, chunk)
        for h in heads:
            t += float(h)
            if t >= duration:
                return times
            times.append(t)


@dataclass(frozen=True)
class Violation:
    t: float
    follower: int
    leader: int
    gap: float
    required: float
    kind: str = "safe_distance"  # or "critical"
    severity: float | None = None


def audit_step(fleet: Sequence[VehicleState], t: float,
               constants: Constants = CONSTANTS) -> list[Violation]:
    """Check every same-lane adjacent pair at one instant."""
    out = []
    for lane in Lane:
        vehicles = sorted((v for v in fleet if v.lane == lane), key=lambda v: (v.station, v.id))
        for follower, leader in zip(vehicles, vehicles[1:]):
            gap = leader.rear - follower.station
            need = safe_following_distance(leader.speed, follower.speed, constants).total
            if gap < need:
                out.append(Violation(t, follower.id, leader.id, gap, need))
            dv = follower.speed - leader.speed
            if dv > 0:
                if gap <= 0:
                    out.append(Violation(t, follower.id, leader.id, gap, need, "critical", math.inf))
                    continue
                a = collision_acceleration(min(dv, 100.0), 0.0, constants)
                j = a * (follower.speed**2 - leader.speed**2) / (2 * gap)
                if j >= constants.J_crit:
                    out.append(Violation(t, follower.id, leader.id, gap, need, "critical", j))
    return out


def audit_rows(step, in_main, ids, station, speed, length, constants: Constants = CONSTANTS,
               margin: float = 0.0, tol: float = 1e-9):
    """Vectorised :func:`audit_step` over many instants at once.

    ``step`` is any per-instant key (integer step index or time). Returns
    ``(violation_rows, critical_rows)``, each a tuple of arrays
    ``(row_follower, row_leader, gap, required, severity)``.
    """
    station = np.asarray(station, dtype=float)
    if station.size < 2:
        empty = (np.zeros(0, int),) * 2 + (np.zeros(0),) * 3
        return empty, empty
    order = np.lexsort((station, step, in_main))
    same = (in_main[order][1:] == in_main[order][:-1]) & (step[order][1:] == step[order][:-1])
    f = order[:-1][same]
    lead = order[1:][same]
    gap = station[lead] - length[lead] - station[f]
    need = safe_following_total(speed[lead], speed[f], constants)
    bad = gap < need + margin - tol
    dv = speed[f] - speed[lead]
    with np.errstate(divide="ignore", invalid="ignore"):
        j = (np.minimum(dv, 100.0) / constants.t_col / 2.0) \
            * (speed[f] ** 2 - speed[lead] ** 2) / (2 * gap)
    j = np.where(gap <= 0, np.inf, j)
    crit = (dv > 0) & (j >= constants.J_crit)
    pick = lambda m: (f[m], lead[m], gap[m], need[m], j[m])
    return pick(bad), pick(crit)


# ---------------------------------------------------------------- mainline priority


@dataclass
class _Vehicle:
    id: int
    cls: VehicleClass
    scheduled: float
    traj: PiecewiseTrajectory | None = None
    inserted: float | None = None
    merge_time: float = math.inf  # ramp vehicles: joins the main lane
    merge_station: float | None = None
    held: bool = False
    hold_target: float | None = None
    _exit: float | None = None

    @property
    def exit_time(self) -> float:
        if self._exit is None:
            self._exit = self.traj.time_at_station(GEOMETRY.exit_station) if self.traj else math.inf
        return self._exit

    def set_traj(self, traj: PiecewiseTrajectory | None) -> None:
        self.traj = traj
        self._exit = None


def _splice(old: PiecewiseTrajectory | None, t: float, rel: PiecewiseTrajectory) -> PiecewiseTrajectory:
    """Absolute trajectory: ``old`` before ``t``, then ``rel`` shifted to start at ``t``."""
    new = rel.shifted(t)
    if old is None or old.t0 >= t:
        return new
    phases = [(seg.duration, seg.a) for seg in new.segments[:-1]]
    return old.splice(t, phases)


class _PriorityRun:
    def __init__(self, cfg: ScenarioConfig, constants: Constants, geometry: Geometry):
        self.cfg = cfg
        self.c = constants
        self.geo = geometry
        self.v0 = cfg.v0_ms
        self.pcfg = PlannerConfig(cfg.v0_kmh, cfg.default_ar_ms2, constants=constants, geometry=geometry)
        self.vehicles: dict[int, _Vehicle] = {}
        self.ramp_queue: list[int] = []  # inserted ramp vehicles in entry order
        self.pending: deque[int] = deque()
        self.events: list[Event] = []
        self.stats = {"free_flow": 0, "direct_merge": 0, "gap_creation": 0, "retimed": 0,
                      "holds": 0, "verify_calls": 0}

    # -- bookkeeping

    def setup(self, main_times: list[float], ramp_times: list[float]) -> list[tuple[float, int]]:
        arrivals = [(t, 0) for t in main_times] + [(t, 1) for t in ramp_times]
        if self.cfg.inject_fault and main_times:
            arrivals.append((main_times[0] + (self.c.L_v + 0.02) / self.v0, 0))
        arrivals.sort()
        ramp_events = []
        for vid, (t, kind) in enumerate(arrivals):
            cls = VehicleClass.RAMP if kind else VehicleClass.MAINLINE
            veh = _Vehicle(vid, cls, t)
            self.vehicles[vid] = veh
            self.events.append(Event(t, "arrival", vid, cls.value))
            if kind:
                ramp_events.append((t, vid))
            else:
                veh.inserted = t
                self.events.append(Event(t, "enter", vid, "main"))
                veh.set_traj(PiecewiseTrajectory.from_phases(t, self.geo.mainline_span[0], self.v0, []))
        return ramp_events

    def _state(self, veh: _Vehicle, t: float) -> tuple[float, float]:
        return veh.traj.eval(t)

    def _snapshot(self, t: float) -> list[VehicleState]:
        """Vehicles settled at the mainline speed, projected back to ``t``."""
        fleet = []
        for veh in self.vehicles.values():
            if veh.traj is None or veh.held or veh.exit_time <= t:
                continue
            if veh.cls == VehicleClass.MAINLINE and veh.scheduled > t + LOOKAHEAD:
                continue
            if abs(veh.traj.final_speed - self.v0) > 1e-9:
                continue
            tf = max(veh.traj.final_start, t)
            s_f, _ = veh.traj.eval(tf)
            fleet.append(VehicleState(veh.id, veh.cls, s_f - self.v0 * (tf - t), self.v0))
        return fleet

    # -- verification on a fine absolute grid

    def _check(self, t: float, proposed: dict[int, tuple[PiecewiseTrajectory, float]]) -> bool:
        self.stats["verify_calls"] += 1
        traj = {}
        merge = {}
        entry = {}
        for veh in self.vehicles.values():
            if veh.traj is None:
                continue
            traj[veh.id] = veh.traj
            merge[veh.id] = veh.merge_time if veh.cls == VehicleClass.RAMP else -math.inf
            entry[veh.id] = veh.inserted
        for vid, (tr, m) in proposed.items():
            traj[vid] = tr
            merge[vid] = m
            if entry.get(vid) is None:
                entry[vid] = t

        horizon = t
        for vid, (tr, m) in proposed.items():
            horizon = max(horizon, tr.final_start, m if math.isfinite(m) else t)
        for veh in self.vehicles.values():
            if veh.traj is None or veh.id in proposed:
                continue
            if veh.cls == VehicleClass.RAMP and veh.exit_time > t:
                horizon = max(horizon, veh.traj.final_start,
                              veh.merge_time if math.isfinite(veh.merge_time) else t)
        t_end = min(horizon + 1.0, t + VERIFY_HORIZON)

        grid = np.arange(math.ceil(t / VERIFY_STEP) * VERIFY_STEP, t_end, VERIFY_STEP)
        extra = [t]
        for vid, (tr, m) in proposed.items():
            extra += [seg.t_start for seg in tr.segments if t < seg.t_start < t_end]
            if t < m < t_end:
                extra.append(m)
        grid = np.unique(np.concatenate([grid, extra]))

        keys, lanes, ids, stations, speeds = [], [], [], [], []
        for vid, tr in traj.items():
            start = entry[vid]
            if start >= t_end:
                continue
            exit_t = tr.time_at_station(self.geo.exit_station) if vid in proposed \
                else self.vehicles[vid].exit_time
            if exit_t <= t:
                continue
            mask = (grid >= start) & (grid < exit_t)
            if not mask.any():
                continue
            ts = grid[mask]
            s, v, _ = tr.sample(ts)
            keys.append(np.flatnonzero(mask))
            lanes.append(ts >= merge[vid])
            ids.append(np.full(ts.size, vid))
            stations.append(s)
            speeds.append(v)
        if not keys:
            return True
        key = np.concatenate(keys)
        ids = np.concatenate(ids)
        bad, _ = audit_rows(key, np.concatenate(lanes), ids,
                            np.concatenate(stations), np.concatenate(speeds),
                            np.full(key.size, self.c.L_v), self.c, margin=VERIFY_MARGIN)
        # pairs the proposal does not touch are the audit's business, not ours
        touched = np.isin(ids[bad[0]], list(proposed)) | np.isin(ids[bad[1]], list(proposed))
        return not touched.any()

    # -- planning

    def _verifier(self, veh: _Vehicle, t: float, s: float):
        def verify(candidate: FreeFlow | MergePlan) -> bool:
            rel = candidate.ramp_trajectory
            new = _splice(veh.traj, t, rel)
            proposed = {veh.id: (new, t + candidate.t_merge)}
            if isinstance(candidate, MergePlan) and candidate.x_adjustment is not None:
                x = self.vehicles[candidate.gap.front_id]
                start = t + candidate.x_adjust_start
                if x.traj.final_start > start or x.inserted > start:
                    return False
                if x.cls == VehicleClass.RAMP and x.merge_time > start:
                    return False
                x_new = x.traj.splice(start, candidate.x_adjustment.phases())
                proposed[x.id] = (x_new, x.merge_time if x.cls == VehicleClass.RAMP else -math.inf)
            return self._check(t, proposed)
        return verify

    def try_plan(self, veh: _Vehicle, t: float, s: float, v: float) -> bool:
        if s < self.geo.ramp_end and (v <= 0 or (self.geo.ramp_end - s) / v > MAX_PLAN_CRUISE):
            return False
        state = VehicleState(veh.id, VehicleClass.RAMP, s, v)
        try:
            result = plan(state, self._snapshot(t), self.pcfg, self._verifier(veh, t, s))
        except MergeInfeasible:
            return False
        veh.set_traj(_splice(veh.traj, t, result.ramp_trajectory))
        veh.merge_time = t + result.t_merge
        veh.merge_station = result.merge_station
        veh.held = False
        veh.hold_target = None
        if isinstance(result, FreeFlow):
            kind = "free_flow"
            detail = f"a={result.ramp_accel:.4f}"
        else:
            kind = "retimed" if result.retimed else result.gap.mode.value
            detail = (f"a={result.ramp_accel:.4f} front={result.gap.front_id} "
                      f"rear={result.gap.rear_id}")
            if result.x_adjustment is not None:
                x = self.vehicles[result.gap.front_id]
                start = t + result.x_adjust_start
                x.set_traj(x.traj.splice(start, result.x_adjustment.phases()))
                prof = result.x_adjustment
                self.events.append(Event(start, "gap_creation", x.id,
                                         f"for={veh.id} dL={prof.delta_L:.4f} a={prof.a_acc:.4f}"))
        self.stats[kind] += 1
        self.events.append(Event(t, "plan", veh.id, f"{kind} {detail} merge_s={result.merge_station:.3f}"))
        return True

    def _hold_phases(self, s: float, v: float, target: float) -> list[tuple[float, float]]:
        d = target - s
        if v > 1e-9:
            d = max(d, v * v / (2 * MAX_BRAKE))
            b = v * v / (2 * d)
            return [(v / b, -b)]
        if d < 0.5:
            return []
        peak = min(math.sqrt(d * CREEP_ACCEL), self.cfg.vR0_ms)
        t_a = peak / CREEP_ACCEL
        cruise = (d - peak * t_a) / peak
        return [(t_a, CREEP_ACCEL), (cruise, 0.0), (t_a, -CREEP_ACCEL)]

    def _leader(self, veh: _Vehicle) -> _Vehicle | None:
        i = self.ramp_queue.index(veh.id) if veh.id in self.ramp_queue else len(self.ramp_queue)
        return self.vehicles[self.ramp_queue[i - 1]] if i > 0 else None

    def hold(self, veh: _Vehicle, t: float, s: float, v: float, strict: bool) -> bool:
        """Put ``veh`` on a stopping profile. With ``strict`` (used at entry)
        fail instead of accepting a profile that does not verify."""
        leader = self._leader(veh)
        base = self.geo.ramp_end
        if leader is not None and leader.held:
            base = leader.hold_target - self.c.L_v - self.cfg.hold_gap_m
        stalled = v == 0 and base - s >= 0.5
        if veh.held and veh.hold_target == base and not stalled:
            return True
        chosen = None
        for k in range(12):
            # stopping short of the target is the fallback when the ramp leader is close
            target = base - 5.0 * k
            if k and target < s:
                break
            rel = PiecewiseTrajectory.from_phases(0.0, s, v, self._hold_phases(s, v, target))
            new = _splice(veh.traj, t, rel)
            if self._check(t, {veh.id: (new, math.inf)}):
                chosen = new
                break
        if chosen is None:
            if strict:
                return False
            rel = PiecewiseTrajectory.from_phases(0.0, s, v, self._hold_phases(s, v, base))
            chosen = _splice(veh.traj, t, rel)
        if not veh.held:
            self.stats["holds"] += 1
            self.events.append(Event(t, "hold", veh.id, f"target={base:.3f}"))
        veh.set_traj(chosen)
        veh.held = True
        veh.hold_target = base
        veh.merge_time = math.inf
        return True

    def on_tick(self, t: float) -> None:
        for vid in list(self.ramp_queue):
            veh = self.vehicles[vid]
            if not veh.held:
                continue
            s, v = self._state(veh, t)
            leader = self._leader(veh)
            if (leader is None or not leader.held) and self.try_plan(veh, t, s, v):
                continue
            self.hold(veh, t, s, v, strict=False)
        self.insert_pending(t)

    def insert_pending(self, t: float) -> None:
        while self.pending:
            veh = self.vehicles[self.pending[0]]
            s, v = self.geo.ramp_start, self.cfg.vR0_ms
            leader = self.vehicles[self.ramp_queue[-1]] if self.ramp_queue else None
            if leader is not None and leader.merge_time > t:
                ls, _ = leader.traj.eval(t)
                if ls - self.c.L_v - s < safe_following_distance(v, v, self.c).total:
                    return
            veh.inserted = t
            self.ramp_queue.append(veh.id)
            planned = (leader is None or not leader.held) and self.try_plan(veh, t, s, v)
            if not planned and not self.hold(veh, t, s, v, strict=True):
                self.ramp_queue.pop()
                veh.inserted = None
                veh.set_traj(None)
                return
            self.pending.popleft()
            self.events.append(Event(t, "enter", veh.id, "ramp"))

    def next_tick(self, t: float) -> float:
        h = self.cfg.replan_interval_s
        k = math.floor(t / h + 1e-9) + 1
        return k * h

    def run(self, ramp_events: list[tuple[float, int]]) -> None:
        duration = self.cfg.duration_s
        queue = list(ramp_events)
        heapq.heapify(queue)
        tick = None
        while True:
            waiting = self.pending or any(self.vehicles[v].held for v in self.ramp_queue)
            if waiting and tick is None:
                tick = self.next_tick(self._now)
            elif not waiting:
                tick = None
            nxt_arrival = queue[0][0] if queue else math.inf
            if tick is not None and tick <= nxt_arrival:
                t = tick
                if t >= duration:
                    break
                self._now = t
                tick = None
                self.on_tick(t)
                continue
            if not queue or nxt_arrival >= duration:
                break
            t, vid = heapq.heappop(queue)
            self._now = t
            self.pending.append(vid)
            self.insert_pending(t)

    _now = 0.0


def _sample_priority(state: _PriorityRun, cfg: ScenarioConfig) -> SimulationTrace:
    dt = cfg.dt_s
    n_steps = int(round(cfg.duration_s / dt))
    grid = np.arange(n_steps) * dt
    cols = {k: [] for k in ("t", "id", "ramp", "s", "v", "a", "main")}
    records: dict[int, VehicleRecord] = {}
    for vid in sorted(state.vehicles):
        veh = state.vehicles[vid]
        if veh.inserted is None or veh.traj is None:
            continue
        exit_t = veh.exit_time
        rec = VehicleRecord(vid, veh.cls, veh.scheduled,
                            exit_t if exit_t < cfg.duration_s else None)
        records[vid] = rec
        mask = (grid >= veh.inserted - 1e-9) & (grid < exit_t)
        ts = grid[mask]
        if ts.size == 0:
            continue
        s, v, a = veh.traj.sample(np.maximum(ts, veh.traj.t0))
        cols["t"].append(ts)
        cols["id"].append(np.full(ts.size, vid, dtype=np.int64))
        cols["ramp"].append(np.full(ts.size, veh.cls == VehicleClass.RAMP))
        cols["s"].append(s)
        cols["v"].append(v)
        cols["a"].append(a)
        cols["main"].append(ts >= veh.merge_time if veh.cls == VehicleClass.RAMP
                            else np.ones(ts.size, bool))
        end = min(exit_t, cfg.duration_s)
        rec.distance = veh.traj.eval(end)[0] - veh.traj.eval(veh.traj.t0)[0]
        if exit_t < cfg.duration_s:
            state.events.append(Event(exit_t, "exit", vid, ""))
        if veh.cls == VehicleClass.RAMP and veh.merge_time < cfg.duration_s:
            state.events.append(Event(veh.merge_time, "merge", vid, f"station={veh.merge_station:.6g}"))
    return _assemble(cols, dt, records, state.events)


def _assemble(cols, dt, records, events) -> SimulationTrace:
    if not cols["t"]:
        trace = SimulationTrace.empty(dt)
    else:
        cat = {k: np.concatenate(v) for k, v in cols.items()}
        order = np.lexsort((cat["id"], cat["t"]))
        trace = SimulationTrace(dt, cat["t"][order], cat["id"][order], cat["ramp"][order],
                                cat["s"][order], cat["v"][order], cat["a"][order], cat["main"][order])
    kind_rank = {"arrival": 0, "enter": 1, "plan": 2, "hold": 3, "gap_creation": 4,
                 "merge": 5, "exit": 6}
    trace.events = sorted(events, key=lambda e: (e.t, e.id, kind_rank.get(e.kind, 9), e.detail))
    trace.vehicles = records
    return trace


def _attach_fuel(trace: SimulationTrace) -> None:
    if len(trace) == 0:
        return
    rates = fuel_rate(trace.speed, trace.accel, FUEL_PARAMS) * trace.dt
    ids, inverse = np.unique(trace.id, return_inverse=True)
    sums = np.bincount(inverse, weights=rates)
    for vid, total in zip(ids, sums):
        if int(vid) in trace.vehicles:
            trace.vehicles[int(vid)].fuel = float(total)


def audit_trace(trace: SimulationTrace, constants: Constants = CONSTANTS
                ) -> tuple[list[Violation], list[Violation]]:
    """Bulk audit of a finished trace: (safe-distance violations, critical pairs)."""
    if len(trace) < 2:
        return [], []
    step = np.rint(trace.t / trace.dt).astype(np.int64)
    bad, crit = audit_rows(step, trace.in_main, trace.id, trace.station, trace.speed,
                           np.full(len(trace), constants.L_v), constants)

    def to_list(rows, kind):
        f, lead, gap, need, j = rows
        out = [Violation(float(trace.t[a]), int(trace.id[a]), int(trace.id[b]), float(g), float(n),
                         kind, float(s) if kind == "critical" else None)
               for a, b, g, n, s in zip(f, lead, gap, need, j)]
        return sorted(out, key=lambda x: (x.t, x.follower))
    return to_list(bad, "safe_distance"), to_list(crit, "critical")


def _run_priority(cfg: ScenarioConfig, main_times, ramp_times, constants, geometry) -> SimulationTrace:
    state = _PriorityRun(cfg, constants, geometry)
    ramp_events = state.setup(main_times, ramp_times)
    state.run(ramp_events)
    trace = _sample_priority(state, cfg)
    trace.metadata["planner_stats"] = dict(state.stats)
    return trace


# ---------------------------------------------------------------- baseline


@dataclass
class _Car:
    id: int
    cls: VehicleClass
    scheduled: float
    desired_main: float
    s: float = 0.0
    v: float = 0.0
    a: float = 0.0
    in_main: bool = True
    inserted: float | None = None


def _krauss(v: float, v_lead: float, gap: float, desired: float, p: FollowerParams, dt: float) -> float:
    new = min(v + p.max_accel * dt, desired)
    if gap < math.inf:
        new = min(new, safe_speed(v, v_lead, gap, p), gap / dt)
    return max(0.0, new)


def _run_baseline(cfg: ScenarioConfig, main_times, ramp_times, constants: Constants,
                  geometry: Geometry) -> SimulationTrace:
    dt = cfg.dt_s
    n_steps = int(round(cfg.duration_s / dt))
    lo, hi = (kmh_to_ms(x) for x in cfg.baseline_speed_range_kmh)
    speeds = rng_for(cfg.seed, "speeds")
    params = FollowerParams(cfg.reaction_time_s, cfg.max_decel_ms2, cfg.max_accel_ms2, hi)
    L = constants.L_v
    wall = geometry.accel_lane[1]
    ramp_desired = cfg.vR0_ms

    arrivals = sorted([(t, 0) for t in main_times] + [(t, 1) for t in ramp_times])
    cars = []
    for vid, (t, kind) in enumerate(arrivals):
        cls = VehicleClass.RAMP if kind else VehicleClass.MAINLINE
        cars.append(_Car(vid, cls, t, float(speeds.uniform(lo, hi)), in_main=not kind))
    waiting = {VehicleClass.MAINLINE: deque(c for c in cars if c.cls == VehicleClass.MAINLINE),
               VehicleClass.RAMP: deque(c for c in cars if c.cls == VehicleClass.RAMP)}
    main: list[_Car] = []  # front first
    ramp: list[_Car] = []
    events = [Event(c.scheduled, "arrival", c.id, c.cls.value) for c in cars]
    records: dict[int, VehicleRecord] = {}
    cols = {k: [] for k in ("t", "id", "ramp", "s", "v", "a", "main")}
    start_s = {VehicleClass.MAINLINE: geometry.mainline_span[0], VehicleClass.RAMP: geometry.ramp_start}

    def record(t):
        for lane in (main, ramp):
            for c in lane:
                cols["t"].append(t)
                cols["id"].append(c.id)
                cols["ramp"].append(c.cls == VehicleClass.RAMP)
                cols["s"].append(c.s)
                cols["v"].append(c.v)
                cols["a"].append(c.a)
                cols["main"].append(c.in_main)

    for k in range(n_steps):
        t = k * dt
        # insert arrivals whose time has come, if the entry is clear
        for cls, lane in ((VehicleClass.MAINLINE, main), (VehicleClass.RAMP, ramp)):
            q = waiting[cls]
            while q and q[0].scheduled <= t + 1e-9:
                c = q[0]
                desired = c.desired_main if cls == VehicleClass.MAINLINE else ramp_desired
                s0 = start_s[cls]
                last = lane[-1] if lane else None
                v = desired
                if last is not None:
                    gap = last.s - L - s0
                    if gap < safe_following_distance(last.v, 0.0, constants).total:
                        break
                    v = min(v, max(0.0, safe_speed(v, last.v, gap, params)))
                    if gap - safe_following_distance(last.v, v, constants).total < 0:
                        v = min(v, last.v)
                c.s, c.v, c.a, c.inserted = s0, v, 0.0, t
                lane.append(c)
                q.popleft()
                records[c.id] = VehicleRecord(c.id, c.cls, c.scheduled)
                events.append(Event(t, "enter", c.id, "ramp" if cls == VehicleClass.RAMP else "main"))
        record(t)

        # advance: each lane front to back against the leader's new state
        exited = []
        for lane in (main, ramp):
            prev = None
            for c in lane:
                if c.cls == VehicleClass.RAMP and not c.in_main:
                    desired = ramp_desired if c.s < geometry.ramp_end else c.desired_main
                else:
                    desired = c.desired_main
                if prev is not None:
                    gap, vl = prev.s - L - c.s, prev.v
                elif not c.in_main:
                    gap, vl = wall - c.s, 0.0
                else:
                    gap, vl = math.inf, 0.0
                v_new = _krauss(c.v, vl, gap, desired, params, dt)
                c.a = (v_new - c.v) / dt
                c.v = v_new
                s_old = c.s
                c.s += v_new * dt
                if c.in_main and c.s >= geometry.exit_station:
                    exit_t = t + (geometry.exit_station - s_old) / v_new
                    exited.append((c, exit_t))
                prev = c
        for c, exit_t in exited:
            main.remove(c)
            rec = records[c.id]
            if exit_t < cfg.duration_s:
                rec.exit_time = exit_t
                events.append(Event(exit_t, "exit", c.id, ""))
            rec.distance = c.s - start_s[c.cls]

        # gap acceptance from the acceleration lane
        for c in list(ramp):
            if c.s < geometry.accel_lane[0]:
                continue
            me = VehicleState(c.id, c.cls, c.s, c.v)
            fleet = [VehicleState(m.id, m.cls, m.s, m.v) for m in main
                     if abs(m.s - c.s) < 200.0]
            if try_merge(me, fleet, None, geometry.accel_lane, constants):
                c.in_main = True
                ramp.remove(c)
                idx = next((i for i, m in enumerate(main) if m.s < c.s), len(main))
                main.insert(idx, c)
                events.append(Event(t + dt, "merge", c.id, f"station={c.s:.6g}"))

    for lane in (main, ramp):
        for c in lane:
            records[c.id].distance = c.s - start_s[c.cls]

    dtypes = {"t": float, "id": np.int64, "ramp": bool, "s": float, "v": float, "a": float,
              "main": bool}
    packed = {k: [np.asarray(v, dtypes[k])] for k, v in cols.items()} if cols["t"] \
        else {k: [] for k in cols}
    return _assemble(packed, dt, records, events)


# ---------------------------------------------------------------- entry point


def run(cfg: ScenarioConfig, constants: Constants = CONSTANTS,
        geometry: Geometry = GEOMETRY) -> SimulationTrace:
    """Simulate one scenario. Raises :class:`AuditFailure` on a safe-distance
    violation under mainline priority (unless ``audit_abort`` is off)."""
    main_times = generate_arrivals(cfg.q_main_vph, cfg.duration_s, cfg.seed, cfg.min_headway_s, "mainline")
    ramp_times = generate_arrivals(cfg.q_ramp_vph, cfg.duration_s, cfg.seed, cfg.min_headway_s, "ramp")
    return run_arrivals(cfg, main_times, ramp_times, constants, geometry)


def run_arrivals(cfg: ScenarioConfig, main_times: Sequence[float], ramp_times: Sequence[float],
                 constants: Constants = CONSTANTS, geometry: Geometry = GEOMETRY) -> SimulationTrace:
    """Like :func:`run` but with explicit arrival times (mainline at the
    corridor start, ramp vehicles at the ramp start)."""
    main_times = sorted(float(t) for t in main_times if t < cfg.duration_s)
    ramp_times = sorted(float(t) for t in ramp_times if t < cfg.duration_s)
    if cfg.strategy == "mainline_priority":
        trace = _run_priority(cfg, main_times, ramp_times, constants, geometry)
    else:
        trace = _run_baseline(cfg, main_times, ramp_times, constants, geometry)
    _attach_fuel(trace)

    violations, critical = audit_trace(trace, constants)
    for v in violations:
        trace.events.append(Event(v.t, "audit_violation", v.follower,
                                  f"leader={v.leader} gap={v.gap:.6g} required={v.required:.6g}"))
    for v in critical:
        trace.events.append(Event(v.t, "audit_critical", v.follower,
                                  f"leader={v.leader} gap={v.gap:.6g} J={v.severity:.6g}"))
    trace.events.sort(key=lambda e: (e.t, e.id))  # stable: keeps kind order
    trace.metadata.update({
        "strategy": cfg.strategy,
        "baseline_model": "Krauss-like car following with gap acceptance" if cfg.strategy == "baseline" else None,
        "mainline_speed": (f"common {cfg.v0_kmh} km/h" if cfg.strategy == "mainline_priority"
                           else f"per-vehicle uniform draw in {list(cfg.baseline_speed_range_kmh)} km/h"),
        "prng": PRNG_NAME,
        "prng_streams": dict(STREAMS),
        "seed": cfg.seed,
        "code_version": __version__,
        "audit_violations": len(violations),
        "audit_critical": len(critical),
        "fuel_coefficients": "default polynomial (p0=0.1569, p2=-7.415e-4); alternative inline set p0=0.1596, p2=-7.145e-4 not used",
    })
    if violations and cfg.strategy == "mainline_priority" and cfg.audit_abort:
        raise AuditFailure(violations[0])
    return trace
