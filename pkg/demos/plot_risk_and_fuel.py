"""
Safety margins, collision severity and fuel
============================================

The three small models the planner and the metrics lean on, evaluated on a
few representative points.
"""

import numpy as np

from rampweave.metrics import fuel_rate
from rampweave.risk import assess, collision_accel_surface
from rampweave.safety import min_merge_gap, safe_following_distance

# Safe following distance grows only when the follower is faster.
for v_lead, v_follow in [(20, 20), (20, 15), (15, 20), (10, 25)]:
    d = safe_following_distance(v_lead, v_follow)
    print(f"leader {v_lead:>2} m/s, follower {v_follow:>2} m/s -> {d.total:.4f} m")

# Gap a merging car needs on a 72 km/h and a 100 km/h mainline.
for v0 in (72, 100):
    req = min_merge_gap(v0 * np.cos(np.radians(30)), v0, v0)
    print(f"v0 = {v0} km/h: minimum merge gap {req.min_gap:.4f} m")

# Collision acceleration over speed difference and log mass ratio.
surface = collision_accel_surface(np.array([5.0, 10.0, 20.0]), np.array([-1.0, 0.0, 1.0]))
print("collision acceleration (rows dv = 5, 10, 20 m/s; cols p = -1, 0, 1):")
print(np.round(surface, 3))

# A closing pair: is it critical?
res = assess(dv=8.0, p=0.0, v_fast=25.0, v_slow=17.0, S=30.0)
print(f"J = {res.collision_accel:.2f} * {res.urgent_accel:.2f} = {res.severity:.2f}, critical: {res.critical}")

# Fuel rate: cruising cost rises with speed, braking adds nothing.
v = np.array([0.0, 10.0, 17.5, 20.0, 30.0])
print("fuel rate at a = 0:", np.round(fuel_rate(v, np.zeros_like(v)), 4))
print("fuel rate at a = 1:", np.round(fuel_rate(v, np.ones_like(v)), 4))
print("fuel rate at a = -2:", np.round(fuel_rate(v, -2 * np.ones_like(v)), 4))
