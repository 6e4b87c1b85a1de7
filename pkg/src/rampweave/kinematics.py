"""Piecewise constant-acceleration trajectories.

A trajectory covers ``[t0, inf)``: every segment but the last has a finite
end, the last one runs forever (constant speed in practice). Station and
speed are continuous at every breakpoint; that is checked on construction.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import GEOMETRY, kmh_to_ms

CONTINUITY_TOL = 1e-9


@dataclass(frozen=True)
class TrajectorySegment:
    t_start: float
    t_end: float
    s0: float
    v0: float
    a: float

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError(f"empty segment [{self.t_start}, {self.t_end}]")
        if self.v0 < -CONTINUITY_TOL:
            raise ValueError(f"negative start speed {self.v0}")
        if math.isinf(self.t_end):
            if self.a < 0:
                raise ValueError("an unbounded segment cannot decelerate")
        elif self.v0 + self.a * (self.t_end - self.t_start) < -CONTINUITY_TOL:
            raise ValueError("speed reverses inside segment")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def station(self, t: float) -> float:
        tau = t - self.t_start
        return self.s0 + self.v0 * tau + 0.5 * self.a * tau * tau

    def speed(self, t: float) -> float:
        return self.v0 + self.a * (t - self.t_start)

    def end_state(self) -> tuple[float, float]:
        return self.station(self.t_end), max(0.0, self.speed(self.t_end))


class PiecewiseTrajectory:
    """Immutable ordered list of :class:`TrajectorySegment`."""

    __slots__ = ("segments", "_starts", "_starts_arr", "_s0", "_v0", "_a")

    def __init__(self, segments: Sequence[TrajectorySegment]):
        segments = tuple(segments)
        if not segments:
            raise ValueError("trajectory needs at least one segment")
        if not math.isinf(segments[-1].t_end):
            raise ValueError("last segment must be unbounded")
        for prev, nxt in zip(segments, segments[1:]):
            if prev.t_end != nxt.t_start:
                raise ValueError(f"time gap/overlap at t={prev.t_end} vs {nxt.t_start}")
            s_end, v_end = prev.end_state()
            if abs(s_end - nxt.s0) > CONTINUITY_TOL * max(1.0, abs(s_end)) \
                    or abs(v_end - nxt.v0) > CONTINUITY_TOL * max(1.0, v_end):
                raise ValueError(f"discontinuity at t={nxt.t_start}")
        self.segments = segments
        self._starts = [seg.t_start for seg in segments]
        self._starts_arr = np.array(self._starts)
        self._s0 = np.array([seg.s0 for seg in segments])
        self._v0 = np.array([seg.v0 for seg in segments])
        self._a = np.array([seg.a for seg in segments])

    def __repr__(self):
        parts = ", ".join(f"[{s.t_start:.3f}: s={s.s0:.3f} v={s.v0:.3f} a={s.a:.3f}]"
                          for s in self.segments)
        return f"PiecewiseTrajectory({parts})"

    def __eq__(self, other):
        return isinstance(other, PiecewiseTrajectory) and self.segments == other.segments

    def __hash__(self):
        return hash(self.segments)

    @classmethod
    def from_phases(cls, t0: float, s0: float, v0: float,
                    phases: Sequence[tuple[float, float]]) -> "PiecewiseTrajectory":
        """Chain ``(duration, accel)`` phases from an initial state, then
        cruise at the final speed forever. Zero-length phases are skipped."""
        segments = []
        t, s, v = t0, s0, v0
        for duration, a in phases:
            if duration <= 0 or t + duration <= t:
                continue
            seg = TrajectorySegment(t, t + duration, s, v, a)
            segments.append(seg)
            t = seg.t_end
            s, v = seg.end_state()
        segments.append(TrajectorySegment(t, math.inf, s, v, 0.0))
        return cls(segments)

    @property
    def t0(self) -> float:
        return self.segments[0].t_start

    @property
    def final_start(self) -> float:
        """Time from which the trajectory is a pure cruise."""
        return self.segments[-1].t_start

    @property
    def final_speed(self) -> float:
        return self.segments[-1].v0

    def _index(self, t: float) -> int:
        if t < self.t0:
            raise ValueError(f"t={t} precedes trajectory start {self.t0}")
        return bisect.bisect_right(self._starts, t) - 1

    def segment_at(self, t: float) -> TrajectorySegment:
        return self.segments[self._index(t)]

    def eval(self, t: float) -> tuple[float, float]:
        seg = self.segments[self._index(t)]
        return seg.station(t), max(0.0, seg.speed(t))

    def accel(self, t: float) -> float:
        return self.segments[self._index(t)].a

    def sample(self, ts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorised (station, speed, accel) at times ``ts`` (all >= t0)."""
        ts = np.asarray(ts, dtype=float)
        if ts.size and ts.min() < self.t0:
            raise ValueError("sample time precedes trajectory start")
        idx = np.searchsorted(self._starts_arr, ts, side="right") - 1
        tau = ts - self._starts_arr[idx]
        a = self._a[idx]
        v0 = self._v0[idx]
        s = self._s0[idx] + v0 * tau + 0.5 * a * tau * tau
        v = np.maximum(v0 + a * tau, 0.0)
        return s, v, a

    def time_at_station(self, x: float) -> float:
        """First time the station reaches ``x``; ``inf`` if it never does."""
        for seg in self.segments:
            if seg.s0 >= x:
                return seg.t_start
            if math.isinf(seg.t_end):
                if seg.v0 <= 0 and seg.a <= 0:
                    return math.inf
            elif seg.station(seg.t_end) < x:
                continue
            d = x - seg.s0
            if seg.a == 0:
                return seg.t_start + d / seg.v0
            disc = max(seg.v0 * seg.v0 + 2 * seg.a * d, 0.0)
            return seg.t_start + (-seg.v0 + math.sqrt(disc)) / seg.a
        return math.inf

    def splice(self, t: float, phases: Sequence[tuple[float, float]]) -> "PiecewiseTrajectory":
        """Keep the motion before ``t`` and replace everything after it with
        ``phases`` started from the state at ``t``."""
        s, v = self.eval(t)
        head = []
        for seg in self.segments:
            if seg.t_start >= t:
                break
            head.append(TrajectorySegment(seg.t_start, min(seg.t_end, t), seg.s0, seg.v0, seg.a))
        tail = PiecewiseTrajectory.from_phases(t, s, v, phases)
        return PiecewiseTrajectory(head + list(tail.segments))

    def shifted(self, dt: float, ds: float = 0.0) -> "PiecewiseTrajectory":
        return PiecewiseTrajectory([
            TrajectorySegment(seg.t_start + dt, seg.t_end + dt, seg.s0 + ds, seg.v0, seg.a)
            for seg in self.segments
        ])


def mainline_trajectory(x0: float, v0: float) -> PiecewiseTrajectory:
    """Constant-speed mainline vehicle from station ``x0`` at ``v0`` km/h."""
    if v0 <= 0:
        raise ValueError("mainline speed must be positive")
    return PiecewiseTrajectory([TrajectorySegment(0.0, math.inf, x0, kmh_to_ms(v0), 0.0)])


def _ramp_phase_times(vR0: float, v0: float, a_r: float) -> float:
    if not 0 < vR0 < v0:
        raise ValueError(f"need 0 < vR0 < v0, got vR0={vR0}, v0={v0} km/h")
    if a_r <= 0:
        raise ValueError("ramp acceleration must be positive")
    return (v0 - vR0) / (3.6 * a_r)


def ramp_free_trajectory(r: float, vR0: float, v0: float, a_r: float) -> PiecewiseTrajectory:
    """Unadjusted ramp vehicle: cruise at ``vR0`` from ``r`` to the ramp end,
    accelerate at ``a_r`` up to ``v0``, then cruise. Speeds in km/h."""
    if r >= 0:
        raise ValueError("ramp vehicle must start upstream of the ramp end")
    t2 = _ramp_phase_times(vR0, v0, a_r)
    t1 = abs(r) / kmh_to_ms(vR0)
    return PiecewiseTrajectory.from_phases(0.0, r, kmh_to_ms(vR0), [(t1, 0.0), (t2, a_r)])


def ramp_trajectory(t0: float, s: float, v: float, v_target: float, a: float,
                    ramp_end: float = GEOMETRY.ramp_end) -> PiecewiseTrajectory:
    """Generalised ramp profile in SI units from an arbitrary state.

    Cruise at ``v`` until the ramp end (skipped if already there), then
    accelerate at ``a`` until ``v_target``.
    """
    if s > ramp_end + 1e-9:
        raise ValueError("vehicle is already past the ramp end")
    if s < ramp_end and v <= 0:
        raise ValueError("a stopped vehicle cannot cruise to the ramp end")
    t1 = (ramp_end - s) / v if s < ramp_end else 0.0
    t2 = (v_target - v) / a
    return PiecewiseTrajectory.from_phases(t0, s, v, [(t1, 0.0), (t2, a)])


def merge_point(vR0: float, v0: float, a_r: float) -> float:
    """Station (m) where a ramp vehicle leaving the ramp end at ``vR0`` km/h
    reaches ``v0`` km/h under constant acceleration ``a_r``."""
    t2 = _ramp_phase_times(vR0, v0, a_r)
    return kmh_to_ms(vR0) * t2 + 0.5 * a_r * t2 * t2


def accel_phase_time(vR0: float, v0: float, a_r: float) -> float:
    """Duration (s) of the acceleration phase, speeds in km/h."""
    return _ramp_phase_times(vR0, v0, a_r)


def cruise_time_to_ramp_end(r: float, vR0: float) -> float:
    """Seconds from station ``r`` to the ramp end at ``vR0`` km/h."""
    return abs(r) / kmh_to_ms(vR0)
