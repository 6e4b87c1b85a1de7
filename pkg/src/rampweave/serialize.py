"""Run-config parsing and trace/report serialisation.

CSV files use ``.`` decimals, LF line endings and 6 significant digits.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .engine import PRNG_NAME, ScenarioConfig
from .metrics import FUEL_PARAMS, fuel_rate
from .records import SimulationTrace

TRACE_COLUMNS = ("t_s", "id", "class", "station_m", "speed_ms", "accel_ms2", "fuel_rate")
EVENT_COLUMNS = ("t_s", "kind", "id", "detail")
COMPARISON_COLUMNS = ("q_main", "q_ramp", "strategy", "D_main", "D_ramp", "I_main", "I_ramp",
                      "fuel_total", "fuel_improvement")

_UNITS = {"_vph": "veh/h", "_kmh": "km/h", "_ms2": "m/s^2", "_s": "s", "_m": "m"}
_EXTRA_KEYS = {"out_dir": str}


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    """6 significant digits, no exponent surprises for integers."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    out = f"{float(x):.6g}"
    return "0" if out == "-0" else out


def _unit(key: str) -> str:
    for suffix, unit in _UNITS.items():
        if key.endswith(suffix):
            return unit
    return ""


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def config_from_dict(doc: dict[str, Any]) -> tuple[ScenarioConfig, dict[str, Any]]:
    """Validate a config document; returns the scenario and the extra keys.

    A ``summary.json`` written by a previous run is accepted too: its
    ``config`` member is used.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]
    fields = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
    kwargs, extra = {}, {}
    for key, value in doc.items():
        if key in _EXTRA_KEYS:
            if not isinstance(value, _EXTRA_KEYS[key]):
                raise ConfigError(f"{key!r} must be a string")
            extra[key] = value
            continue
        if key not in fields:
            raise ConfigError(f"unknown key {key!r}")
        default = fields[key].default
        unit = _unit(key)
        where = f"{key!r} (expected {unit})" if unit else repr(key)
        if key == "strategy":
            if not isinstance(value, str):
                raise ConfigError(f"{where} must be a string")
        elif key == "seed":
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{where} must be an integer")
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{where} must be true or false")
        elif key == "baseline_speed_range_kmh":
            if not (isinstance(value, list) and len(value) == 2 and all(map(_is_number, value))):
                raise ConfigError(f"{where} must be a [low, high] pair of numbers")
            value = tuple(float(v) for v in value)
        elif key == "ramp_freeflow_s" and value is None:
            pass
        elif not _is_number(value):
            raise ConfigError(f"{where} must be a number")
        else:
            value = float(value)
        kwargs[key] = value
    try:
        return ScenarioConfig(**kwargs), extra
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> tuple[ScenarioConfig, dict[str, Any]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return config_from_dict(doc)


def _write_rows(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), newline="\n")


def write_trace_csv(trace: SimulationTrace, path: str | Path) -> None:
    rates = fuel_rate(trace.speed, trace.accel, FUEL_PARAMS) if len(trace) else np.zeros(0)
    cls = np.where(trace.is_ramp, "ramp", "mainline")
    rows = (
        (fmt(t), str(int(i)), c, fmt(s), fmt(v), fmt(a), fmt(r))
        for t, i, c, s, v, a, r in zip(trace.t.tolist(), trace.id.tolist(), cls.tolist(),
                                       trace.station.tolist(), trace.speed.tolist(),
                                       trace.accel.tolist(), rates.tolist())
    )
    _write_rows(Path(path), TRACE_COLUMNS, rows)


def write_events_csv(trace: SimulationTrace, path: str | Path) -> None:
    rows = ((fmt(e.t), e.kind, str(e.id), e.detail) for e in trace.events)
    _write_rows(Path(path), EVENT_COLUMNS, rows)


def read_trace_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected trace header {header}")
        rows = list(reader)
    cols = list(zip(*rows)) if rows else [()] * len(TRACE_COLUMNS)
    return {
        "t": np.array(cols[0], dtype=float),
        "id": np.array(cols[1], dtype=np.int64),
        "is_ramp": np.array([c == "ramp" for c in cols[2]], dtype=bool),
        "station": np.array(cols[3], dtype=float),
        "speed": np.array(cols[4], dtype=float),
        "accel": np.array(cols[5], dtype=float),
    }


def read_events_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def write_json(data: dict, path: str | Path) -> None:
    text = json.dumps(_json_safe(data), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", newline="\n")


def summary_document(cfg: ScenarioConfig, trace: SimulationTrace, metrics: dict) -> dict:
    return {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "prng": PRNG_NAME,
        "code_version": __version__,
        "metadata": trace.metadata,
        "metrics": metrics,
        "fuel_coefficients": {k: v for k, v in dataclasses.asdict(FUEL_PARAMS).items()},
    }


def write_comparison_csv(rows: list[dict], path: str | Path) -> None:
    out = ([fmt(r.get(c)) if c != "strategy" else r[c] for c in COMPARISON_COLUMNS] for r in rows)
    _write_rows(Path(path), COMPARISON_COLUMNS, out)
