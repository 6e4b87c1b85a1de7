import dataclasses
import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from rampweave.engine import ScenarioConfig, run

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

VOLUME_GRID = [(qm, qr) for qm in (800.0, 1200.0, 1800.0) for qr in (200.0, 300.0, 500.0)]


@pytest.fixture(scope="session")
def grid_runs():
    """Default-seed 600 s traces for the nine volume pairs under both
    strategies, keyed by ``(q_main, q_ramp, strategy)``. Computed once."""
    base = ScenarioConfig()
    out = {}
    for qm, qr in VOLUME_GRID:
        for strategy in ("baseline", "mainline_priority"):
            cfg = dataclasses.replace(base, q_main_vph=qm, q_ramp_vph=qr, strategy=strategy)
            out[(qm, qr, strategy)] = (cfg, run(cfg))
    return out


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is not None and acceptance.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(acceptance.VERDICTS.items()):
            terminalreporter.write_line(line)
