import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import momentum_collision_accel as momentum_oracle
from rampweave.core import CONSTANTS
from rampweave.risk import (
    MassRatio, assess, collision_accel_surface, collision_acceleration, is_critical, severity_of,
    urgent_acceleration,
)


@pytest.mark.parametrize("dv, p, expected, tol", [(20, 0, 50.0, 1e-12), (0, 1.7, 0.0, 0),
                                                  (20, 3, 0.09990, 1e-5)])
def test_collision_acceleration_examples(dv, p, expected, tol):
    assert collision_acceleration(dv, p) == pytest.approx(expected, abs=tol)


@given(st.floats(0, 100), st.floats(-3, 3))
def test_collision_matches_momentum_balance(dv, p):
    k = 10.0**p
    assert collision_acceleration(dv, p) == pytest.approx(momentum_oracle(dv, k), rel=1e-9, abs=1e-12)


@given(st.floats(0.1, 100), st.floats(-3, 2.9))
def test_collision_decreasing_in_p_and_linear_in_dv(dv, p):
    assert collision_acceleration(dv, p + 0.1) < collision_acceleration(dv, p)
    assert collision_acceleration(dv / 2, p) == pytest.approx(collision_acceleration(dv, p) / 2)


def test_mass_ratio():
    assert MassRatio.from_k(1000).p == pytest.approx(3)
    assert collision_acceleration(20, MassRatio(0.0)) == 50.0
    with pytest.raises(ValueError):
        MassRatio(3.5)
    with pytest.raises(ValueError):
        collision_acceleration(101, 0)


@pytest.mark.parametrize("vf, vs, S, expected, tol", [(30, 20, 100, 2.5, 1e-12), (20, 20, 50, 0.0, 0),
                                                      (27.78, 16.67, 100, 2.469, 1e-3)])
def test_urgent_acceleration_examples(vf, vs, S, expected, tol):
    assert urgent_acceleration(vf, vs, S) == pytest.approx(expected, abs=tol)


@given(st.floats(0, 60), st.floats(0, 60), st.floats(0.5, 500))
def test_urgent_scales_inverse_with_spacing(a, b, S):
    fast, slow = max(a, b), min(a, b)
    assert urgent_acceleration(fast, slow, 2 * S) == pytest.approx(urgent_acceleration(fast, slow, S) / 2)


def test_urgent_rejects_bad_inputs():
    with pytest.raises(ValueError):
        urgent_acceleration(10, 20, 5)
    with pytest.raises(ValueError):
        urgent_acceleration(20, 10, 0)


def test_severity_examples():
    s = severity_of(50, 2.5)
    assert s.severity == 125 and s.critical
    s = assess(0, 0, 20, 20, 10)
    assert s.severity == 0 and not s.critical
    s = severity_of(2.94, 2.94)
    assert s.severity == pytest.approx(8.6436, abs=1e-12) and s.critical
    assert not is_critical(8.6435)


@given(st.floats(0, 100), st.floats(-3, 3), st.floats(0, 50), st.floats(0, 50), st.floats(0.1, 300))
def test_severity_is_product_and_nonnegative(dv, p, a, b, S):
    fast, slow = max(a, b), min(a, b)
    s = assess(dv, p, fast, slow, S)
    assert s.severity == s.collision_accel * s.urgent_accel
    assert s.severity >= 0
    assert s.critical == (s.severity >= CONSTANTS.J_crit)


def test_surface():
    dv = np.arange(101, dtype=float)
    p = np.linspace(-3, 3, 61)
    grid = collision_accel_surface(dv, p)
    assert grid.shape == (101, 61)
    assert grid[20, 30] == pytest.approx(50)
    assert np.all(grid[0] == 0)
    assert grid[100, 0] == pytest.approx(499.5005, abs=1e-3)
    with pytest.raises(ValueError):
        collision_accel_surface([], p)
    assert math.isclose(grid[7, 11], collision_acceleration(7, p[11]), rel_tol=1e-12)
