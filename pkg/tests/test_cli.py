import csv
import json
import re
import xml.etree.ElementTree as ET

import pytest

from rampweave.cli import main
from rampweave.engine import ScenarioConfig, run_arrivals
from rampweave.serialize import (
    COMPARISON_COLUMNS, EVENT_COLUMNS, TRACE_COLUMNS, ConfigError, config_from_dict, write_events_csv,
    write_trace_csv,
)

SVG = "{http://www.w3.org/2000/svg}"


def write_config(path, **kw):
    doc = {"q_main_vph": 900, "q_ramp_vph": 300, "duration_s": 120, "warmup_s": 0}
    doc.update(kw)
    path.write_text(json.dumps(doc))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- run

def test_run_writes_three_files(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(write_config(tmp_path / "c.json")), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["events.csv", "summary.json", "trace.csv"]
    assert tuple(read_csv(out / "trace.csv")[0]) == TRACE_COLUMNS
    assert tuple(read_csv(out / "events.csv")[0]) == EVENT_COLUMNS
    assert b"\r\n" not in (out / "trace.csv").read_bytes()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["prng"] == "numpy.random.PCG64" and summary["seed"] == 20240611
    assert summary["config"]["q_main_vph"] == 900


def test_summary_reruns_identically(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    main(["run", "--config", str(write_config(tmp_path / "c.json")), "--out", str(first)])
    assert main(["run", "--config", str(first / "summary.json"), "--out", str(second)]) == 0
    for name in ("trace.csv", "events.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    cfg = write_config(tmp_path / "c.json")
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "5"])
    assert json.loads((tmp_path / "b" / "summary.json").read_text())["seed"] == 5
    assert (tmp_path / "a" / "trace.csv").read_bytes() != (tmp_path / "b" / "trace.csv").read_bytes()


def test_malformed_json_exits_2_without_outputs(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "out"
    assert main(["run", "--config", str(bad), "--out", str(out)]) == 2
    assert not out.exists()
    assert "malformed JSON" in capsys.readouterr().err


@pytest.mark.parametrize("doc, needle", [
    ({"q_main": 800}, "'q_main'"),
    ({"v0_kmh": "fast"}, "km/h"),
    ({"duration_s": True}, "(expected s)"),
    ({"strategy": "ramp_priority"}, "strategy"),
    ([1, 2], "JSON object"),
])
def test_config_errors_name_the_key(doc, needle):
    with pytest.raises(ConfigError, match=re.escape(needle)):
        config_from_dict(doc)


def test_config_round_trip():
    cfg = ScenarioConfig(q_main_vph=800, baseline_speed_range_kmh=(50, 70))
    parsed, extra = config_from_dict(json.loads(json.dumps({**cfg.to_dict(), "out_dir": "x"})))
    assert parsed == cfg and extra == {"out_dir": "x"}


def test_injected_fault_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", inject_fault=True)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 3
    err = capsys.readouterr().err
    assert re.search(r"t=\d+\.\d+ s: vehicle \d+ behind \d+", err)


# -- sweep

def test_short_sweep(tmp_path, monkeypatch):
    monkeypatch.setenv("RAMPWEAVE_THREADS", "1")
    assert main(["sweep", "--out", str(tmp_path), "--duration-s", "200"]) == 0
    rows = read_csv(tmp_path / "comparison.csv")
    assert tuple(rows[0]) == COMPARISON_COLUMNS
    body = [dict(zip(rows[0], r)) for r in rows[1:]]
    assert len(body) == 18
    keys = [(float(r["q_main"]), float(r["q_ramp"]), r["strategy"]) for r in body]
    assert keys == sorted(keys)
    for r in body:
        filled = all(r[c] != "" for c in ("I_main", "I_ramp", "fuel_improvement"))
        blank = all(r[c] == "" for c in ("I_main", "I_ramp", "fuel_improvement"))
        assert filled if r["strategy"] == "mainline_priority" else blank


# -- plots

@pytest.fixture
def eight_vehicle_run(tmp_path):
    """Seven mainline vehicles and one ramp vehicle that has to merge among them."""
    cfg = ScenarioConfig(duration_s=80.0, warmup_s=0.0)
    trace = run_arrivals(cfg, [k * 3.0 for k in range(7)], [1.0])
    write_trace_csv(trace, tmp_path / "trace.csv")
    write_events_csv(trace, tmp_path / "events.csv")
    return tmp_path


def test_spacetime_plot_counts(eight_vehicle_run):
    d = eight_vehicle_run
    assert main(["plot", "--kind", "spacetime", "--trace", str(d / "trace.csv"), "--out", str(d / "st.svg")]) == 0
    root = ET.parse(d / "st.svg").getroot()
    lines = root.findall(f"{SVG}polyline")
    assert len(lines) == 8
    assert sorted(p.get("class") for p in lines).count("ramp") == 1
    assert len(root.findall(f"{SVG}circle[@class='merge']")) == 1
    assert root.find(f"{SVG}g[@id='legend']") is not None
    assert root.find(f"{SVG}text[@id='xlabel']") is not None


def test_plots_are_byte_identical(eight_vehicle_run):
    d = eight_vehicle_run
    for name in ("a.svg", "b.svg"):
        main(["plot", "--kind", "spacetime", "--trace", str(d / "trace.csv"), "--out", str(d / name)])
    assert (d / "a.svg").read_bytes() == (d / "b.svg").read_bytes()


def test_empty_trace_plots_axes_only(tmp_path):
    (tmp_path / "trace.csv").write_text(",".join(TRACE_COLUMNS) + "\n")
    for kind in ("spacetime", "speed"):
        out = tmp_path / f"{kind}.svg"
        assert main(["plot", "--kind", kind, "--trace", str(tmp_path / "trace.csv"), "--out", str(out)]) == 0
        root = ET.parse(out).getroot()
        assert root.findall(f"{SVG}polyline") == []
        assert root.find(f"{SVG}g[@id='axes']") is not None


def test_constant_speed_plot_is_horizontal(tmp_path):
    rows = [",".join(TRACE_COLUMNS)]
    rows += [f"{k * 0.1:.6g},{vid},mainline,{20 * k * 0.1:.6g},20,0,0.8283" for k in range(50) for vid in (1, 2)]
    (tmp_path / "trace.csv").write_text("\n".join(rows) + "\n")
    out = tmp_path / "speed.svg"
    assert main(["plot", "--kind", "speed", "--trace", str(tmp_path / "trace.csv"), "--out", str(out)]) == 0
    (line,) = ET.parse(out).getroot().findall(f"{SVG}polyline")
    ys = {pt.split(",")[1] for pt in line.get("points").split()}
    assert len(ys) == 1


def test_unknown_plot_kind(tmp_path):
    assert main(["plot", "--kind", "heatmap", "--trace", "x.csv", "--out", str(tmp_path / "x.svg")]) == 2


# -- surfaces

def test_collision_surface(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["surface", "--kind", "collision", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["dv_ms", "p", "collision_accel_ms2"]
    assert len(rows) - 1 == 101 * 61
    cells = {(float(a), float(b)): float(c) for a, b, c in rows[1:]}
    assert cells[(20.0, 0.0)] == 50.0
    assert cells[(20.0, 3.0)] == pytest.approx(0.0999, abs=1e-4)


def test_fuel_surface(tmp_path):
    out = tmp_path / "f.csv"
    assert main(["surface", "--kind", "fuel", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) - 1 == 61 * 51
    cells = {(float(a), float(b)): float(c) for a, b, c in rows[1:]}
    assert cells[(0.0, 0.0)] == 0.1569
    assert cells[(20.0, 0.0)] == pytest.approx(0.8283, abs=1e-4)


def test_unknown_surface_kind(tmp_path):
    assert main(["surface", "--kind", "noise", "--out", str(tmp_path / "n.csv")]) == 2
    assert not (tmp_path / "n.csv").exists()
