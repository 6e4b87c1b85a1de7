"""Delay, improvement rate, mean-speed series and fuel use."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import GEOMETRY, Geometry, VehicleClass
from .records import SimulationTrace, VehicleRecord


@dataclass(frozen=True)
class FuelModelParams:
    p0: float = 0.1569
    p1: float = 0.0245
    p2: float = -7.415e-4
    p3: float = 5.975e-5
    q0: float = 0.07224
    q1: float = 0.09681
    q2: float = 1.075e-3
    # vehicle parameters kept alongside the polynomial; the polynomial does not use them
    M_v: float = 1200.0
    C_D: float = 0.32
    rho_a: float = 1.184
    A_f: float = 2.5
    mu: float = 0.015


FUEL_PARAMS = FuelModelParams()

# the same polynomial as sometimes printed with two digits swapped; kept for reference
ALT_INLINE_COEFFS = {"p0": 0.1596, "p2": -7.145e-4}


def fuel_rate(v, a, params: FuelModelParams = FUEL_PARAMS):
    """Fuel rate (model units per second); braking contributes nothing extra.

    Works on scalars and numpy arrays alike.
    """
    p = params
    cruise = p.p0 + v * (p.p1 + v * (p.p2 + v * p.p3))
    boost = p.q0 + v * (p.q1 + v * p.q2)
    if np.ndim(a) == 0 and np.ndim(v) == 0:
        return float(cruise + max(a, 0.0) * boost)
    return cruise + np.maximum(a, 0.0) * boost


def per_vehicle_fuel(trace: SimulationTrace, params: FuelModelParams = FUEL_PARAMS) -> dict[int, float]:
    if len(trace) == 0:
        return {}
    rates = fuel_rate(trace.speed, trace.accel, params) * trace.dt
    ids, inverse = np.unique(trace.id, return_inverse=True)
    sums = np.bincount(inverse, weights=rates, minlength=len(ids))
    return {int(i): float(s) for i, s in zip(ids, sums)}


def integrate_fuel(trace: SimulationTrace, params: FuelModelParams = FUEL_PARAMS) -> float:
    if len(trace) == 0:
        return 0.0
    return float(np.sum(fuel_rate(trace.speed, trace.accel, params)) * trace.dt)


@dataclass(frozen=True)
class FreeFlowReference:
    """Unimpeded corridor travel times per vehicle class."""

    mainline_s: float
    ramp_s: float

    @classmethod
    def from_speeds(cls, v0_ms: float, vR0_ms: float, a_r: float,
                    geometry: Geometry = GEOMETRY,
                    ramp_override_s: float | None = None) -> "FreeFlowReference":
        main = geometry.mainline_length / v0_ms
        if ramp_override_s is not None:
            return cls(main, ramp_override_s)
        # cruise the ramp, accelerate to v0, cruise to the exit
        t1 = geometry.ramp_length / vR0_ms
        t2 = (v0_ms - vR0_ms) / a_r
        s2 = (v0_ms**2 - vR0_ms**2) / (2 * a_r)
        rest = max(geometry.exit_station - geometry.ramp_end - s2, 0.0)
        return cls(main, t1 + t2 + rest / v0_ms)

    def for_class(self, cls: VehicleClass) -> float:
        return self.ramp_s if cls == VehicleClass.RAMP else self.mainline_s


def vehicle_delay(record: VehicleRecord, reference: FreeFlowReference) -> float:
    if record.exit_time is None:
        raise ValueError(f"vehicle {record.id} has not exited")
    delay = record.exit_time - record.entry_time - reference.for_class(record.cls)
    return delay if delay > 1e-9 else 0.0  # also swallows round-off from the subtraction


def average_delay(records, reference: FreeFlowReference, cls: VehicleClass,
                  warmup_s: float = 0.0) -> float:
    """Mean delay over exited vehicles of ``cls`` that entered after the warm-up.
    NaN if there are none."""
    delays = [vehicle_delay(r, reference) for r in records
              if r.cls == cls and r.exited and r.entry_time >= warmup_s]
    return float(np.mean(delays)) if delays else math.nan


def improvement_rate(d_strategy: float, d_baseline: float) -> float:
    """Percent reduction of ``d_strategy`` against ``d_baseline``; NaN when the
    baseline delay is not positive."""
    if not d_baseline > 0:
        return math.nan
    return (1.0 - d_strategy / d_baseline) * 100.0


def speed_series(trace: SimulationTrace) -> dict[VehicleClass, dict[int, float]]:
    """Mean instantaneous speed per whole second, per class. Seconds with no
    vehicle of a class are simply missing."""
    out: dict[VehicleClass, dict[int, float]] = {}
    if len(trace) == 0:
        return out
    # small offset keeps t=k*dt rounding (e.g. 2.9999999) in the right bucket
    bucket = np.floor(trace.t + 1e-9).astype(np.int64)
    for cls, mask in ((VehicleClass.MAINLINE, ~trace.is_ramp), (VehicleClass.RAMP, trace.is_ramp)):
        if not mask.any():
            continue
        b = bucket[mask]
        seconds, inverse = np.unique(b, return_inverse=True)
        sums = np.bincount(inverse, weights=trace.speed[mask])
        counts = np.bincount(inverse)
        out[cls] = {int(s): float(m) for s, m in zip(seconds, sums / counts)}
    return out


@dataclass
class MetricsReport:
    D_main: float
    D_ramp: float
    fuel_total: float
    improvement_main: float | None = None
    improvement_ramp: float | None = None
    fuel_improvement: float | None = None
    speed_series: dict = field(default_factory=dict, repr=False)
    counts: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "D_main_s": self.D_main, "D_ramp_s": self.D_ramp, "fuel_total": self.fuel_total,
            "improvement_main_pct": self.improvement_main,
            "improvement_ramp_pct": self.improvement_ramp,
            "fuel_improvement_pct": self.fuel_improvement,
            "counts": self.counts,
        }


def report(trace: SimulationTrace, reference: FreeFlowReference, warmup_s: float = 0.0,
           baseline: "MetricsReport | None" = None,
           params: FuelModelParams = FUEL_PARAMS, with_series: bool = False) -> MetricsReport:
    records = list(trace.vehicles.values())
    rep = MetricsReport(
        D_main=average_delay(records, reference, VehicleClass.MAINLINE, warmup_s),
        D_ramp=average_delay(records, reference, VehicleClass.RAMP, warmup_s),
        fuel_total=integrate_fuel(trace, params),
        speed_series=speed_series(trace) if with_series else {},
        counts={
            "entered": len(records),
            "exited": sum(r.exited for r in records),
            "ramp": sum(r.cls == VehicleClass.RAMP for r in records),
        },
    )
    if baseline is not None:
        rep.improvement_main = improvement_rate(rep.D_main, baseline.D_main)
        rep.improvement_ramp = improvement_rate(rep.D_ramp, baseline.D_ramp)
        rep.fuel_improvement = improvement_rate(rep.fuel_total, baseline.fuel_total)
    return rep
