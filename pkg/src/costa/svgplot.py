"""Tiny deterministic SVG line plots (axes, optional log-y, legend)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 20, 40, 60
COLORS = {"Exact": "#000000", "PBM": "#d62728", "DDM": "#1f77b4", "HAM": "#2ca02c"}
FALLBACK = ("#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _num(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, count))


def line_plot(
    series: dict[str, tuple[np.ndarray, np.ndarray]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    log_y: bool = False,
    max_points: int | None = None,
    markers: bool = False,
) -> str:
    """Render named ``(x, y)`` curves. Long curves are decimated to ``max_points``.

    On a log axis non-positive values are dropped (exact zeros cannot be drawn).
    """
    prepared = {}
    decimation = 1
    for name, (x, y) in series.items():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if max_points and len(x) > max_points:
            step = math.ceil(len(x) / max_points)
            decimation = max(decimation, step)
            keep = np.unique(np.r_[np.arange(0, len(x), step), len(x) - 1])
            x, y = x[keep], y[keep]
        ok = np.isfinite(y) & (y > 0 if log_y else True)
        prepared[name] = (x[ok], np.log10(y[ok]) if log_y else y[ok])

    xs = np.concatenate([p[0] for p in prepared.values()] or [np.zeros(1)])
    ys = np.concatenate([p[1] for p in prepared.values()] or [np.zeros(1)])
    if xs.size == 0:
        xs = np.zeros(1)
    if ys.size == 0:
        ys = np.zeros(1)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if log_y:
        y0, y1 = math.floor(y0), math.ceil(y1)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        pad = abs(y0) * 0.05 or 1.0
        y0, y1 = y0 - pad, y1 + pad

    pw = WIDTH - LEFT - RIGHT
    ph = HEIGHT - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f"<!-- decimation factor: {decimation} -->",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{TOP - 15}" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="20" y="{TOP + ph / 2}" text-anchor="middle" transform="rotate(-90 20 {TOP + ph / 2})">'
        f"{escape(ylabel)}</text>",
    ]
    for v in _ticks(x0, x1):
        out.append(f'<line x1="{_num(px(v))}" y1="{TOP + ph}" x2="{_num(px(v))}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_num(px(v))}" y="{TOP + ph + 20}" text-anchor="middle">{v:.4g}</text>')
    yticks = [float(v) for v in range(int(y0), int(y1) + 1)] if log_y else _ticks(y0, y1)
    for v in yticks:
        label = f"1e{int(v)}" if log_y else f"{v:.4g}"
        out.append(f'<line x1="{LEFT - 5}" y1="{_num(py(v))}" x2="{LEFT}" y2="{_num(py(v))}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_num(py(v) + 4)}" text-anchor="end">{label}</text>')

    curves = []
    legend = [
        f'<rect x="{LEFT + pw - 100}" y="{TOP + 4}" width="96" height="{16 * len(prepared) + 6}" '
        f'fill="white" fill-opacity="0.85" stroke="#999999"/>'
    ]
    for i, (name, (x, y)) in enumerate(prepared.items()):
        color = COLORS.get(name, FALLBACK[i % len(FALLBACK)])
        if len(x):
            pts = " ".join(f"{_num(px(a))},{_num(py(b))}" for a, b in zip(x, y))
            curves.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
            if markers and name != "Exact":
                curves += [f'<circle cx="{_num(px(a))}" cy="{_num(py(b))}" r="2.5" fill="none" stroke="{color}"/>'
                        for a, b in zip(x, y)]
        ly = TOP + 15 + 16 * i
        legend.append(f'<line x1="{LEFT + pw - 90}" y1="{ly}" x2="{LEFT + pw - 70}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        legend.append(f'<text x="{LEFT + pw - 65}" y="{ly + 4}">{escape(name)}</text>')
    out += curves + legend
    out.append("</svg>")
    return "\n".join(out) + "\n"
