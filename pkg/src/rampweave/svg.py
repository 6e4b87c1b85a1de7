"""Hand-written SVG figures: time-space diagrams and mean-speed plots."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 500
MARGIN = dict(left=70, right=150, top=30, bottom=55)
COLORS = {"mainline": "#1f77b4", "ramp": "#d62728"}


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    return [round(first + k * step, 10) for k in range(int((hi - first) / step + 1e-9) + 1)]


class _Canvas:
    def __init__(self, xlim, ylim, title, xlabel, ylabel):
        self.xlim, self.ylim = xlim, ylim
        self.parts: list[str] = []
        self.w = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        self._axes(title, xlabel, ylabel)

    def x(self, v):
        lo, hi = self.xlim
        return MARGIN["left"] + (v - lo) / (hi - lo) * self.w

    def y(self, v):
        lo, hi = self.ylim
        return MARGIN["top"] + self.h - (v - lo) / (hi - lo) * self.h

    def _axes(self, title, xlabel, ylabel):
        x0, y0 = MARGIN["left"], MARGIN["top"] + self.h
        p = self.parts
        p.append(f'<g id="axes" stroke="#000" stroke-width="1">'
                 f'<line x1="{x0}" y1="{y0}" x2="{x0 + self.w}" y2="{y0}"/>'
                 f'<line x1="{x0}" y1="{MARGIN["top"]}" x2="{x0}" y2="{y0}"/></g>')
        for tv in _nice_ticks(*self.xlim):
            px = self.x(tv)
            p.append(f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 5}" stroke="#000"/>'
                     f'<text x="{px:.2f}" y="{y0 + 18}" font-size="11" text-anchor="middle">{tv:g}</text>')
        for tv in _nice_ticks(*self.ylim):
            py = self.y(tv)
            p.append(f'<line x1="{x0 - 5}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" stroke="#000"/>'
                     f'<text x="{x0 - 8}" y="{py + 4:.2f}" font-size="11" text-anchor="end">{tv:g}</text>')
        p.append(f'<text id="xlabel" x="{x0 + self.w / 2}" y="{HEIGHT - 12}" font-size="13" '
                 f'text-anchor="middle">{escape(xlabel)}</text>')
        p.append(f'<text id="ylabel" x="16" y="{MARGIN["top"] + self.h / 2}" font-size="13" '
                 f'text-anchor="middle" transform="rotate(-90 16 {MARGIN["top"] + self.h / 2})">'
                 f'{escape(ylabel)}</text>')
        p.append(f'<text id="title" x="{x0 + self.w / 2}" y="18" font-size="14" '
                 f'text-anchor="middle">{escape(title)}</text>')

    def polyline(self, xs, ys, color, cls, width=1.2):
        pts = " ".join(f"{self.x(a):.2f},{self.y(b):.2f}" for a, b in zip(xs, ys))
        self.parts.append(f'<polyline class="{cls}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}" points="{pts}"/>')

    def marker(self, xv, yv, cls="merge"):
        self.parts.append(f'<circle class="{cls}" cx="{self.x(xv):.2f}" cy="{self.y(yv):.2f}" '
                          f'r="4" fill="none" stroke="#2ca02c" stroke-width="1.5"/>')

    def legend(self, entries):
        x0 = WIDTH - MARGIN["right"] + 15
        out = ['<g id="legend" font-size="12">']
        for k, (label, color, kind) in enumerate(entries):
            y = MARGIN["top"] + 10 + 20 * k
            if kind == "marker":
                out.append(f'<circle cx="{x0 + 10}" cy="{y}" r="4" fill="none" stroke="{color}" '
                           f'stroke-width="1.5"/>')
            else:
                out.append(f'<line x1="{x0}" y1="{y}" x2="{x0 + 20}" y2="{y}" stroke="{color}" '
                           f'stroke-width="2"/>')
            out.append(f'<text x="{x0 + 26}" y="{y + 4}">{escape(label)}</text>')
        out.append("</g>")
        self.parts.append("".join(out))

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
                f'viewBox="0 0 {WIDTH} {HEIGHT}">')
        bg = f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#fff"/>'
        return "\n".join([head, bg, *self.parts, "</svg>"]) + "\n"


def _limits(values, pad_default):
    if values.size == 0:
        return pad_default
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-9:
        lo, hi = lo - 1.0, hi + 1.0
    return lo, hi


def spacetime_svg(trace: dict, merges: list[tuple[float, float]] = ()) -> str:
    """Station against time, one polyline per vehicle; ``merges`` are
    ``(t, station)`` points to mark."""
    t = trace["t"]
    canvas = _Canvas(_limits(t, (0.0, 1.0)), _limits(trace["station"], (-600.0, 200.0)),
                     "Time-space diagram", "time (s)", "station (m)")
    for vid in np.unique(trace["id"]):
        m = trace["id"] == vid
        cls = "ramp" if trace["is_ramp"][m][0] else "mainline"
        canvas.polyline(t[m], trace["station"][m], COLORS[cls], cls)
    for tm, sm in merges:
        canvas.marker(tm, sm)
    canvas.legend([("mainline", COLORS["mainline"], "line"), ("ramp", COLORS["ramp"], "line"),
                   ("merge", "#2ca02c", "marker")])
    return canvas.render()


def speed_svg(series: dict[str, dict[int, float]]) -> str:
    """Per-class mean speed per second."""
    xs = np.array([s for d in series.values() for s in d], dtype=float)
    ys = np.array([v for d in series.values() for v in d.values()], dtype=float)
    ylim = _limits(ys, (0.0, 30.0))
    canvas = _Canvas(_limits(xs, (0.0, 1.0)), (min(0.0, ylim[0]), ylim[1] + 1.0),
                     "Mean speed", "time (s)", "mean speed (m/s)")
    for cls in ("mainline", "ramp"):
        data = series.get(cls)
        if data:
            secs = sorted(data)
            canvas.polyline(secs, [data[s] for s in secs], COLORS[cls], cls, width=1.5)
    canvas.legend([("mainline", COLORS["mainline"], "line"), ("ramp", COLORS["ramp"], "line")])
    return canvas.render()
