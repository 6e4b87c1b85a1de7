"""Command line: run, sweep, plot, surface."""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .engine import AuditFailure, ScenarioConfig, run
from .metrics import FUEL_PARAMS, FreeFlowReference, fuel_rate, improvement_rate, report
from .records import SimulationTrace
from .risk import collision_accel_surface
from .serialize import (
    ConfigError, fmt, load_config, read_events_csv, read_trace_csv, summary_document,
    write_comparison_csv, write_events_csv, write_json, write_trace_csv, _write_rows,
)
from .svg import spacetime_svg, speed_svg

EXIT_OK, EXIT_CONFIG, EXIT_AUDIT = 0, 2, 3
VOLUME_GRID = [(qm, qr) for qm in (800.0, 1200.0, 1800.0) for qr in (200.0, 300.0, 500.0)]


def reference_for(cfg: ScenarioConfig) -> FreeFlowReference:
    return FreeFlowReference.from_speeds(cfg.v0_ms, cfg.vR0_ms, cfg.default_ar_ms2,
                                         ramp_override_s=cfg.ramp_freeflow_s)


def metrics_for(cfg: ScenarioConfig, trace: SimulationTrace):
    return report(trace, reference_for(cfg), cfg.warmup_s)


def cmd_run(config_path: str, out_dir: str, seed: int | None = None) -> int:
    try:
        cfg, _ = load_config(config_path)
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=seed)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        trace = run(cfg)
    except AuditFailure as exc:
        print(f"audit abort: {exc}", file=sys.stderr)
        return EXIT_AUDIT
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out / "trace.csv")
    write_events_csv(trace, out / "events.csv")
    write_json(summary_document(cfg, trace, metrics_for(cfg, trace).as_dict()), out / "summary.json")
    return EXIT_OK


def _sweep_job(cfg: ScenarioConfig) -> dict:
    try:
        trace = run(cfg)
    except AuditFailure as exc:
        return {"error": str(exc), "code": EXIT_AUDIT}
    rep = metrics_for(cfg, trace)
    return {"q_main": cfg.q_main_vph, "q_ramp": cfg.q_ramp_vph, "strategy": cfg.strategy,
            "D_main": rep.D_main, "D_ramp": rep.D_ramp, "fuel_total": rep.fuel_total}


def sweep_configs(seed: int | None = None, duration_s: float | None = None) -> list[ScenarioConfig]:
    base = ScenarioConfig()
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if duration_s is not None:
        overrides["duration_s"] = duration_s
    return [dataclasses.replace(base, q_main_vph=qm, q_ramp_vph=qr, strategy=s, **overrides)
            for qm, qr in VOLUME_GRID for s in ("baseline", "mainline_priority")]


def sweep_rows(configs: list[ScenarioConfig], workers: int | None = None) -> list[dict]:
    """Run every config and attach improvement columns to the
    mainline-priority rows. Raises ``RuntimeError`` carrying the exit code
    of the first failed run."""
    if workers is None:
        env = os.environ.get("RAMPWEAVE_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    workers = max(1, min(workers, len(configs)))
    if workers == 1:
        results = [_sweep_job(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, configs))
    for res in results:
        if "error" in res:
            err = RuntimeError(res["error"])
            err.exit_code = res["code"]
            raise err
    base = {(r["q_main"], r["q_ramp"]): r for r in results if r["strategy"] == "baseline"}
    for r in results:
        b = base.get((r["q_main"], r["q_ramp"]))
        if r["strategy"] == "mainline_priority" and b is not None:
            r["I_main"] = improvement_rate(r["D_main"], b["D_main"])
            r["I_ramp"] = improvement_rate(r["D_ramp"], b["D_ramp"])
            r["fuel_improvement"] = improvement_rate(r["fuel_total"], b["fuel_total"])
    return sorted(results, key=lambda r: (r["q_main"], r["q_ramp"], r["strategy"]))


def cmd_sweep(out_dir: str, seed: int | None = None, duration_s: float | None = None) -> int:
    try:
        configs = sweep_configs(seed, duration_s)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = sweep_rows(configs)
    except RuntimeError as exc:
        print(f"sweep aborted: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", 1)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_comparison_csv(rows, out / "comparison.csv")
    return EXIT_OK


def _merges_from_events(path: Path, trace: dict) -> list[tuple[float, float]]:
    if not path.exists():
        return []
    merges = []
    for row in read_events_csv(path):
        if row["kind"] != "merge":
            continue
        detail = dict(kv.split("=", 1) for kv in row["detail"].split() if "=" in kv)
        merges.append((float(row["t_s"]), float(detail.get("station", "nan"))))
    return merges


def cmd_plot(kind: str, trace_path: str, out_path: str, events_path: str | None = None) -> int:
    if kind not in ("spacetime", "speed"):
        print(f"unknown plot kind {kind!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        trace = read_trace_csv(trace_path)
    except (OSError, ValueError) as exc:
        print(f"cannot read trace: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if kind == "spacetime":
        events = Path(events_path) if events_path else Path(trace_path).with_name("events.csv")
        text = spacetime_svg(trace, _merges_from_events(events, trace))
    else:
        from .metrics import speed_series
        st = SimulationTrace(0.0, trace["t"], trace["id"], trace["is_ramp"], trace["station"],
                             trace["speed"], trace["accel"], np.ones(len(trace["t"]), bool))
        series = {cls.value: d for cls, d in speed_series(st).items()}
        text = speed_svg(series)
    Path(out_path).write_text(text, newline="\n")
    return EXIT_OK


def surface_rows(kind: str):
    if kind == "collision":
        dv = np.arange(101, dtype=float)
        p = np.round(np.linspace(-3.0, 3.0, 61), 10)
        grid = collision_accel_surface(dv, p)
        header = ("dv_ms", "p", "collision_accel_ms2")
        rows = [(fmt(d), fmt(pp), fmt(grid[i, j])) for i, d in enumerate(dv) for j, pp in enumerate(p)]
    elif kind == "fuel":
        v = np.round(np.arange(61) * 0.5, 10)
        a = np.round(np.arange(51) * 0.1, 10)
        header = ("v_ms", "a_ms2", "fuel_rate")
        rows = [(fmt(vv), fmt(aa), fmt(fuel_rate(float(vv), float(aa), FUEL_PARAMS)))
                for vv in v for aa in a]
    else:
        raise ValueError(f"unknown surface kind {kind!r}")
    return header, rows


def cmd_surface(kind: str, out_path: str) -> int:
    try:
        header, rows = surface_rows(kind)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    _write_rows(Path(out_path), header, rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rampweave", description="On-ramp merge simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("sweep", help="3x3 volume grid under both strategies")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--duration-s", type=float)

    p = sub.add_parser("plot", help="SVG figure from a trace")
    p.add_argument("--kind", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--events", help="events.csv for merge markers (default: next to the trace)")

    p = sub.add_parser("surface", help="tabulate the collision or fuel surface")
    p.add_argument("--kind", required=True)
    p.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out, args.seed)
    if args.command == "sweep":
        return cmd_sweep(args.out, args.seed, args.duration_s)
    if args.command == "plot":
        return cmd_plot(args.kind, args.trace, args.out, args.events)
    return cmd_surface(args.kind, args.out)


if __name__ == "__main__":
    sys.exit(main())
