import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import VOLUME_GRID
from rampweave.baseline import FollowerParams, follow_step, merge_requirement, neighbours, try_merge
from rampweave.core import VehicleClass, VehicleState
from rampweave.safety import min_merge_gap

P = FollowerParams()


def main_car(vid, s, v=20.0):
    return VehicleState(vid, VehicleClass.MAINLINE, s, v)


def ramp_car(s, v=17.0):
    return VehicleState(0, VehicleClass.RAMP, s, v)


def test_free_acceleration():
    assert follow_step(main_car(1, 0.0, 15.0), None, P, 0.1) == pytest.approx(15.26)


def test_free_acceleration_capped_by_desired_speed():
    assert follow_step(main_car(1, 0.0, 19.9), None, P, 0.1) == 20.0


def test_stopped_leader_close_ahead():
    leader = main_car(2, 5.04, 0.0)
    s, v = 0.0, 10.0
    for k in range(100):
        new = follow_step(VehicleState(1, VehicleClass.MAINLINE, s, v), leader, P, 0.1)
        assert new >= 0.0
        if k == 0:
            assert new < 0.02
        s, v = s + new * 0.1, new
        assert s <= 0.04
    assert v == pytest.approx(0.0, abs=1e-3)


def test_distant_leader_leaves_cruise_alone():
    assert follow_step(main_car(1, 0.0, 20.0), main_car(2, 1e6, 20.0), P, 0.1) == 20.0


def test_follow_step_rejects_bad_dt():
    with pytest.raises(ValueError):
        follow_step(main_car(1, 0.0), None, P, 0.0)


@pytest.mark.parametrize("kw", [dict(reaction_time=0), dict(max_decel=-1), dict(max_accel=0),
                                dict(desired_speed=0), dict(max_decel=2.0, max_accel=2.6)])
def test_follower_params_validation(kw):
    with pytest.raises(ValueError):
        FollowerParams(**kw)


@given(st.floats(0, 30), st.floats(0, 30), st.floats(0, 300), st.floats(0.01, 0.5))
def test_follow_step_is_total_and_never_into_leader(v, vl, gap, dt):
    leader = main_car(2, 5.0 + gap, vl)
    new = follow_step(main_car(1, 0.0, v), leader, P, dt)
    assert 0.0 <= new <= P.desired_speed
    assert new * dt <= gap + 1e-9


REQ100 = min_merge_gap(100 * np.cos(np.radians(30)), 100, 100)


def test_accepts_wide_gap():
    fleet = [main_car(1, 40.0, 100 / 3.6), main_car(2, 40.0 - 5 - 30, 100 / 3.6)]
    assert REQ100.min_gap == pytest.approx(7.85, abs=0.01)
    assert try_merge(ramp_car(22.0, 100 / 3.6), fleet, REQ100)


def test_rejects_narrow_gap():
    fleet = [main_car(1, 30.0, 100 / 3.6), main_car(2, 30.0 - 5 - 6, 100 / 3.6)]
    assert not try_merge(ramp_car(23.0, 100 / 3.6), fleet, REQ100)


def test_accepts_on_empty_mainline():
    assert try_merge(ramp_car(50.0), [], REQ100)
    assert try_merge(ramp_car(50.0), [])


def test_rejects_outside_acceleration_lane():
    assert not try_merge(ramp_car(-10.0), [], REQ100)
    assert not try_merge(ramp_car(200.5), [], REQ100)


def test_clearances_are_enforced_even_in_a_wide_gap():
    # 30 m gap, but the ramp vehicle sits almost under the front car's bumper
    fleet = [main_car(1, 40.0, 100 / 3.6), main_car(2, 5.0, 100 / 3.6)]
    assert not try_merge(ramp_car(34.9, 100 / 3.6), fleet, REQ100)


def test_neighbours_and_actual_speed_requirement():
    fleet = [main_car(1, 80.0), main_car(2, 30.0), main_car(3, 10.0)]
    front, rear = neighbours(ramp_car(20.0), fleet)
    assert (front.id, rear.id) == (2, 3)
    req = merge_requirement(ramp_car(20.0, 20.0), front, rear)
    assert req == min_merge_gap(72 * np.cos(np.radians(30)), 72, 72)


# -- whole-run properties over the nine volume pairs

def _bumper_gaps(trace):
    step = np.rint(trace.t / trace.dt).astype(np.int64)
    order = np.lexsort((trace.station, step, trace.in_main))
    same = (trace.in_main[order][1:] == trace.in_main[order][:-1]) & (step[order][1:] == step[order][:-1])
    f, lead = order[:-1][same], order[1:][same]
    return trace.station[lead] - 5.0 - trace.station[f]


@pytest.mark.parametrize("qm, qr", VOLUME_GRID)
def test_baseline_never_collides(grid_runs, qm, qr):
    _, trace = grid_runs[(qm, qr, "baseline")]
    assert trace.metadata["baseline_model"].startswith("Krauss-like")
    gaps = _bumper_gaps(trace)
    assert gaps.size > 0 and gaps.min() >= 0.0


@pytest.mark.parametrize("qm, qr", VOLUME_GRID)
def test_waiting_mergers_stop_before_lane_end(grid_runs, qm, qr):
    _, trace = grid_runs[(qm, qr, "baseline")]
    waiting = trace.is_ramp & ~trace.in_main
    assert trace.station[waiting].max() <= 200.0
    merged = [float(e.detail.split("=")[1]) for e in trace.merge_events()]
    assert merged and all(0.0 <= s <= 200.0 for s in merged)


@pytest.mark.parametrize("qm, qr", [p for p in VOLUME_GRID if p[0] >= 1200])
def test_baseline_delay_is_positive_under_congestion(grid_runs, qm, qr):
    from rampweave.cli import metrics_for
    cfg, trace = grid_runs[(qm, qr, "baseline")]
    rep = metrics_for(cfg, trace)
    assert rep.D_main > 0 and rep.D_ramp > 0
