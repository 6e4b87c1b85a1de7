"""
Planning one merge by hand
==========================

Seven mainline cars at 100 km/h and one ramp car at 60 km/h. The ramp car
would collide with the fifth mainline car if it simply accelerated at the
default 2 m/s^2, so the planner slots it into a gap instead.
"""

from pathlib import Path

import numpy as np

from rampweave.core import VehicleClass, VehicleState
from rampweave.kinematics import mainline_trajectory
from rampweave.planner import PlannerConfig, identify_conflict, plan
from rampweave.svg import spacetime_svg

cfg = PlannerConfig(v0_kmh=100)
v = 100 / 3.6
fleet = [VehicleState(k + 1, VehicleClass.MAINLINE, s, v)
         for k, s in enumerate(np.arange(-460.0, -821.0, -60.0))]
ramp = VehicleState(0, VehicleClass.RAMP, -400.0, 60 / 3.6)

# who is in the way at the default acceleration?
conflict = identify_conflict(ramp, fleet, 100, 60, cfg.default_ar)
print(f"conflict with car {conflict.mainline_id} at {conflict.t_merge:.2f} s, "
      f"ramp car at {conflict.ramp_station:.1f} m, mainline car at {conflict.mainline_station:.1f} m")

# the plan: which gap, which acceleration, where the merge happens
result = plan(ramp, fleet, cfg)
print(f"gap between cars {result.gap.front_id} and {result.gap.rear_id} ({result.gap.mode.value}), "
      f"a = {result.ramp_accel:.4f} m/s^2, merge at {result.merge_station:.1f} m "
      f"after {result.t_merge:.2f} s")

# sample every trajectory and draw the time-space diagram
t = np.arange(0.0, 40.0, 0.1)
cols = {"t": [], "id": [], "is_ramp": [], "station": []}
for car in fleet:
    s, _, _ = mainline_trajectory(car.station, 100).sample(t)
    keep = s <= 200
    cols["t"].append(t[keep]); cols["station"].append(s[keep])
    cols["id"].append(np.full(keep.sum(), car.id)); cols["is_ramp"].append(np.zeros(keep.sum(), bool))
s, _, _ = result.ramp_trajectory.sample(t)
keep = s <= 200
cols["t"].append(t[keep]); cols["station"].append(s[keep])
cols["id"].append(np.zeros(keep.sum(), int)); cols["is_ramp"].append(np.ones(keep.sum(), bool))
trace = {k: np.concatenate(v) for k, v in cols.items()}

out = Path("demo_output")
out.mkdir(exist_ok=True)
svg = spacetime_svg(trace, [(result.t_merge, result.merge_station)])
(out / "single_merge.svg").write_text(svg)
print(f"wrote {out / 'single_merge.svg'}")
