"""Static SVG 1.1 line charts."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#c0392b", "#2471a3", "#1e8449", "#7d3c98", "#b9770e", "#424949")
WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=40, bottom=55)


def _ticks(lo, hi, log):
    if log:
        a, b = int(np.floor(lo)), int(np.ceil(hi))
        step = max(1, (b - a) // 6)
        return [float(v) for v in range(a, b + 1, step)]
    return list(np.linspace(lo, hi, 6))


def line_chart(path, series, title="", xlabel="", ylabel="", logx=False, logy=False, dashed=()):
    """Write a line chart.

    Parameters
    ----------
    series : list of (x, y, label)
        Non-finite points (and non-positive ones on log axes) are dropped.
    dashed : labels drawn as dashed reference lines
    """
    cleaned = []
    for x, y, label in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        x, y = x[ok], y[ok]
        cleaned.append((np.log10(x) if logx else x, np.log10(y) if logy else y, label))
    allx = np.concatenate([c[0] for c in cleaned]) if cleaned else np.array([0.0])
    ally = np.concatenate([c[1] for c in cleaned]) if cleaned else np.array([0.0])
    if allx.size == 0:
        allx, ally = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = allx.min(), allx.max()
    y0, y1 = ally.min(), ally.max()
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN["top"] + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1, logx):
        if x0 <= v <= x1:
            lab = f"1e{int(v)}" if logx else f"{v:.3g}"
            out.append(f'<line x1="{px(v):.2f}" y1="{MARGIN["top"] + ph}" x2="{px(v):.2f}" '
                       f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{px(v):.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{lab}</text>')
    for v in _ticks(y0, y1, logy):
        if y0 <= v <= y1:
            lab = f"1e{int(v)}" if logy else f"{v:.3g}"
            out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{py(v):.2f}" x2="{MARGIN["left"]}" '
                       f'y2="{py(v):.2f}" stroke="black"/>')
            out.append(f'<text x="{MARGIN["left"] - 8}" y="{py(v) + 4:.2f}" text-anchor="end">{lab}</text>')
    for k, (x, y, label) in enumerate(cleaned):
        if x.size == 0:
            continue
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        dash = ' stroke-dasharray="6,4"' if label in dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        ly = MARGIN["top"] + 16 * (k + 1)
        lx = WIDTH - MARGIN["right"] + 10
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}"{dash}/>')
        out.append(f'<text x="{lx + 25}" y="{ly}">{escape(str(label))}</text>')
    cx = MARGIN["left"] + pw / 2
    out.append(f'<text x="{cx}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    cy = MARGIN["top"] + ph / 2
    out.append(f'<text x="16" y="{cy}" text-anchor="middle" transform="rotate(-90 16 {cy})">{escape(ylabel)}</text>')
    out.append(f'<text x="{cx}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
