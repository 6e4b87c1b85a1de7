"""
Mainline priority against the car-following baseline
=====================================================

Runs one volume pair under both strategies and compares delay and fuel.
Pass ``--full`` to run all nine pairs instead (about ten seconds).
"""

import dataclasses
import sys
from pathlib import Path

from rampweave.cli import VOLUME_GRID, metrics_for
from rampweave.engine import ScenarioConfig, run
from rampweave.metrics import improvement_rate, speed_series
from rampweave.svg import speed_svg

pairs = VOLUME_GRID if "--full" in sys.argv else [(1800.0, 500.0)]

print(f"{'pair':>10} {'D_main b/p':>14} {'D_ramp b/p':>14} {'I_main':>7} {'I_ramp':>7} {'fuel':>7}")
for qm, qr in pairs:
    reports, traces = {}, {}
    for strategy in ("baseline", "mainline_priority"):
        cfg = dataclasses.replace(ScenarioConfig(), q_main_vph=qm, q_ramp_vph=qr, strategy=strategy)
        traces[strategy] = run(cfg)
        reports[strategy] = metrics_for(cfg, traces[strategy])
    b, p = reports["baseline"], reports["mainline_priority"]
    print(f"{qm:>5g}/{qr:<4g} {b.D_main:>6.2f}/{p.D_main:<6.2f} {b.D_ramp:>6.2f}/{p.D_ramp:<6.2f} "
          f"{improvement_rate(p.D_main, b.D_main):>6.1f}% {improvement_rate(p.D_ramp, b.D_ramp):>6.1f}% "
          f"{improvement_rate(p.fuel_total, b.fuel_total):>+6.2f}%")

# per-class mean speed of the last pair, one figure per strategy
out = Path("demo_output")
out.mkdir(exist_ok=True)
for strategy, trace in traces.items():
    s = {cls.value: d for cls, d in speed_series(trace).items()}
    (out / f"speed_{strategy}.svg").write_text(speed_svg(s))
print(f"wrote speed plots to {out}/")
