"""Minimal self-contained SVG line charts."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * abs(step):
        ticks.append(round(t, 12))
        t += step
    return ticks


def line_chart(series: dict, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Render ``{name: (xs, ys)}`` as one polyline per series.

    Non-finite points are dropped. Returns the SVG document as a string.
    """
    clean = {}
    for name, (xs, ys) in series.items():
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        keep = np.isfinite(xs) & np.isfinite(ys)
        clean[name] = (xs[keep], ys[keep])
    all_x = np.concatenate([xs for xs, _ in clean.values()] or [np.zeros(1)])
    all_y = np.concatenate([ys for _, ys in clean.values()] or [np.zeros(1)])
    if all_x.size == 0:
        all_x = all_y = np.zeros(1)
    x0, x1 = float(all_x.min()), float(all_x.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<g stroke="black" stroke-width="1">'
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T + ph}" x2="{MARGIN_L + pw}" y2="{MARGIN_T + ph}"/>'
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{MARGIN_T + ph}"/></g>',
    ]
    for t in _nice_ticks(x0, x1):
        px = sx(t)
        out.append(
            f'<line x1="{px:.2f}" y1="{MARGIN_T + ph}" x2="{px:.2f}" y2="{MARGIN_T + ph + 4}" stroke="black"/>'
            f'<text x="{px:.2f}" y="{MARGIN_T + ph + 16}" text-anchor="middle">{t:g}</text>'
        )
    for t in _nice_ticks(y0, y1):
        py = sy(t)
        out.append(
            f'<line x1="{MARGIN_L - 4}" y1="{py:.2f}" x2="{MARGIN_L}" y2="{py:.2f}" stroke="black"/>'
            f'<text x="{MARGIN_L - 6}" y="{py + 4:.2f}" text-anchor="end">{t:.6g}</text>'
        )
    out.append(
        f'<text x="{MARGIN_L + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>'
        f'<text x="15" y="{MARGIN_T + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 15 {MARGIN_T + ph / 2})">{escape(ylabel)}</text>'
    )
    for i, (name, (xs, ys)) in enumerate(clean.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN_T + 14 * (i + 1)
        out.append(
            f'<line x1="{MARGIN_L + pw - 120}" y1="{ly - 4}" x2="{MARGIN_L + pw - 100}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
            f'<text x="{MARGIN_L + pw - 95}" y="{ly}">{escape(str(name))}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
