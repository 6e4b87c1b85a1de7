import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rampweave.core import VehicleClass
from rampweave.kinematics import ramp_free_trajectory
from rampweave.metrics import (
    ALT_INLINE_COEFFS, FUEL_PARAMS, FreeFlowReference, average_delay, fuel_rate, improvement_rate,
    integrate_fuel, per_vehicle_fuel, report, speed_series, vehicle_delay,
)
from rampweave.records import SimulationTrace, VehicleRecord

REF = FreeFlowReference.from_speeds(20.0, 17.0, 2.0)


def make_trace(rows, dt=0.1):
    """rows: (t, id, is_ramp, station, speed, accel)."""
    if not rows:
        return SimulationTrace.empty(dt)
    t, i, r, s, v, a = (np.array(c) for c in zip(*rows))
    return SimulationTrace(dt, t.astype(float), i.astype(np.int64), r.astype(bool), s.astype(float),
                           v.astype(float), a.astype(float), np.ones(len(t), bool))


def cruise(vid, v, n, dt=0.1, is_ramp=False):
    return [(k * dt, vid, is_ramp, v * k * dt, v, 0.0) for k in range(n)]


# -- fuel

def test_fuel_defaults_are_the_tabulated_set():
    p = FUEL_PARAMS
    assert (p.p0, p.p1, p.p2, p.p3) == (0.1569, 0.0245, -7.415e-4, 5.975e-5)
    assert (p.q0, p.q1, p.q2) == (0.07224, 0.09681, 1.075e-3)
    assert ALT_INLINE_COEFFS == {"p0": 0.1596, "p2": -7.145e-4}


def test_fuel_rate_examples():
    assert fuel_rate(0.0, 0.0) == 0.1569
    assert fuel_rate(20.0, 0.0) == pytest.approx(0.8283, abs=1e-4)
    assert fuel_rate(20.0, -3.0) == fuel_rate(20.0, 0.0)


def test_fuel_rate_vectorised_matches_scalar():
    v = np.linspace(0, 30, 7)
    a = np.linspace(-2, 3, 7)
    assert np.allclose(fuel_rate(v, a), [fuel_rate(float(x), float(y)) for x, y in zip(v, a)])


@given(st.floats(0, 30), st.floats(0, 5), st.floats(0, 5))
def test_fuel_rate_monotone_in_accel(v, a1, a2):
    lo, hi = sorted((a1, a2))
    assert fuel_rate(v, lo) <= fuel_rate(v, hi)


@given(st.floats(0, 30))
def test_fuel_rate_continuous_at_zero(v):
    assert fuel_rate(v, 1e-12) == pytest.approx(fuel_rate(v, 0.0), abs=1e-10)
    assert fuel_rate(v, -1e-12) == fuel_rate(v, 0.0)


def test_integrate_fuel_examples():
    assert integrate_fuel(make_trace([])) == 0.0
    assert integrate_fuel(make_trace(cruise(1, 20.0, 100))) == pytest.approx(8.283, abs=1e-3)


def test_braking_segment_has_no_acceleration_term():
    rows = [(k * 0.1, 1, False, 0.0, 20.0 - 0.3 * k, -3.0) for k in range(10)]
    expected = sum(fuel_rate(20.0 - 0.3 * k, 0.0) for k in range(10)) * 0.1
    assert integrate_fuel(make_trace(rows)) == pytest.approx(expected)


@given(st.integers(1, 40), st.integers(1, 40), st.floats(0, 30), st.floats(0, 30))
def test_fuel_is_additive_over_vehicles(n1, n2, v1, v2):
    a, b = cruise(1, v1, n1), cruise(2, v2, n2)
    total = integrate_fuel(make_trace(sorted(a + b)))
    assert total == pytest.approx(integrate_fuel(make_trace(a)) + integrate_fuel(make_trace(b)))
    assert sum(per_vehicle_fuel(make_trace(sorted(a + b))).values()) == pytest.approx(total)


# -- delay and improvement

def test_mainline_reference_and_delays():
    assert REF.mainline_s == pytest.approx(40.0)
    rec = VehicleRecord(1, VehicleClass.MAINLINE, 10.0, 50.0)
    assert vehicle_delay(rec, REF) == pytest.approx(0.0, abs=1e-9)
    rec = VehicleRecord(2, VehicleClass.MAINLINE, 10.0, 54.44)
    assert vehicle_delay(rec, REF) == pytest.approx(4.44)


def test_ramp_reference_is_the_unimpeded_profile():
    tr = ramp_free_trajectory(-400.0, 61.2, 72.0, 2.0)
    travel = tr.time_at_station(200.0)
    rec = VehicleRecord(3, VehicleClass.RAMP, 0.0, travel)
    assert vehicle_delay(rec, REF) == pytest.approx(0.0, abs=1e-9)
    assert REF.ramp_s == pytest.approx(33.64, abs=0.01)
    pinned = FreeFlowReference.from_speeds(20.0, 17.0, 2.0, ramp_override_s=25.0)
    assert pinned.ramp_s == 25.0


def test_delay_is_clamped_and_requires_exit():
    fast = VehicleRecord(1, VehicleClass.MAINLINE, 0.0, 30.0)
    assert vehicle_delay(fast, REF) == 0.0
    with pytest.raises(ValueError):
        vehicle_delay(VehicleRecord(2, VehicleClass.MAINLINE, 0.0), REF)


def test_average_delay_skips_warmup_and_unexited():
    recs = [VehicleRecord(1, VehicleClass.MAINLINE, 10.0, 60.0),   # 10 s, warm-up
            VehicleRecord(2, VehicleClass.MAINLINE, 70.0, 112.0),  # 2 s
            VehicleRecord(3, VehicleClass.MAINLINE, 80.0, 124.0),  # 4 s
            VehicleRecord(4, VehicleClass.MAINLINE, 90.0)]
    assert average_delay(recs, REF, VehicleClass.MAINLINE, 60.0) == pytest.approx(3.0)
    assert math.isnan(average_delay(recs, REF, VehicleClass.RAMP, 60.0))


@pytest.mark.parametrize("d, base, expected", [(0.23, 4.44, 94.82), (0.15, 7.35, 97.96), (3.0, 3.0, 0.0)])
def test_improvement_examples(d, base, expected):
    assert improvement_rate(d, base) == pytest.approx(expected, abs=0.01)


def test_improvement_undefined_without_baseline_delay():
    assert math.isnan(improvement_rate(1.0, 0.0))


@given(st.floats(1e-6, 1e4))
def test_improvement_of_zero_delay_is_full(d):
    assert improvement_rate(0.0, d) == 100.0


@given(st.floats(0, 1e4), st.floats(0, 1e4), st.floats(1e-6, 1e4))
def test_improvement_is_antitone(d1, d2, base):
    lo, hi = sorted((d1, d2))
    assert improvement_rate(lo, base) >= improvement_rate(hi, base)


# -- speed series

def test_speed_series_examples():
    flat = speed_series(make_trace(cruise(1, 20.0, 50) + cruise(2, 20.0, 50)))
    assert set(flat) == {VehicleClass.MAINLINE}
    assert all(v == 20.0 for v in flat[VehicleClass.MAINLINE].values())
    mixed = speed_series(make_trace(sorted(cruise(1, 15.0, 10) + cruise(2, 20.0, 10))))
    assert mixed[VehicleClass.MAINLINE] == {0: 17.5}
    assert speed_series(make_trace([])) == {}


def test_speed_series_separates_classes_and_skips_empty_seconds():
    rows = cruise(1, 20.0, 10) + [(2.0 + k * 0.1, 2, True, 0.0, 10.0, 0.0) for k in range(10)]
    series = speed_series(make_trace(sorted(rows)))
    assert series[VehicleClass.MAINLINE] == {0: 20.0}
    assert series[VehicleClass.RAMP] == {2: 10.0}


# -- report

def test_report_with_and_without_baseline():
    trace = make_trace(cruise(1, 20.0, 10))
    trace.vehicles = {1: VehicleRecord(1, VehicleClass.MAINLINE, 70.0, 112.0)}
    alone = report(trace, REF, 60.0)
    assert alone.improvement_main is None and alone.D_main == pytest.approx(2.0)
    slower = report(trace, FreeFlowReference(38.0, REF.ramp_s), 60.0)
    paired = report(trace, FreeFlowReference(39.0, REF.ramp_s), 60.0, baseline=slower)
    assert paired.improvement_main == pytest.approx(25.0)
    assert paired.fuel_improvement == pytest.approx(0.0)
    assert set(paired.as_dict()) >= {"D_main_s", "D_ramp_s", "fuel_total", "improvement_main_pct"}
