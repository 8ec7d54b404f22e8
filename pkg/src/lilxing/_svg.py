"""Minimal deterministic SVG scatter/line plots (no plotting toolchain)."""

from __future__ import annotations

import math

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-12 * abs(step):
        ticks.append(0.0 if abs(v) < 1e-12 * abs(step) else v)
        v += step
    return ticks


class Plot:
    """Accumulates scatter series and lines, renders one SVG string."""

    def __init__(self, title: str, xlabel: str, ylabel: str):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.series = []  # (kind, points, color, label)

    def scatter(self, xs, ys, color: str = "#1f6fb2", label: str = ""):
        self.series.append(("scatter", list(zip(xs, ys)), color, label))

    def line(self, xs, ys, color: str = "#c44e52", label: str = ""):
        self.series.append(("line", list(zip(xs, ys)), color, label))

    def _bounds(self):
        xs = [p[0] for _, pts, _, _ in self.series for p in pts]
        ys = [p[1] for _, pts, _, _ in self.series for p in pts]
        if not xs:
            return 0.0, 1.0, 0.0, 1.0
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys), max(ys)
        x_pad = 0.05 * (x_hi - x_lo or 1.0)
        y_pad = 0.05 * (y_hi - y_lo or 1.0)
        return x_lo - x_pad, x_hi + x_pad, y_lo - y_pad, y_hi + y_pad

    def render(self) -> str:
        x_lo, x_hi, y_lo, y_hi = self._bounds()
        pw, ph = _W - _ML - _MR, _H - _MT - _MB

        def sx(x):
            return _ML + (x - x_lo) / (x_hi - x_lo) * pw

        def sy(y):
            return _MT + (y_hi - y) / (y_hi - y_lo) * ph

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
            f'<text x="{_W/2:.1f}" y="18" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{self.title}</text>',
            f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" '
            f'fill="none" stroke="#333" stroke-width="1"/>',
        ]
        for tx in _ticks(x_lo, x_hi):
            parts.append(f'<line x1="{sx(tx):.1f}" y1="{_MT+ph}" x2="{sx(tx):.1f}" '
                         f'y2="{_MT+ph+5}" stroke="#333"/>')
            parts.append(f'<text x="{sx(tx):.1f}" y="{_MT+ph+18}" text-anchor="middle" '
                         f'font-family="sans-serif" font-size="11">{tx:.4g}</text>')
        for ty in _ticks(y_lo, y_hi):
            parts.append(f'<line x1="{_ML-5}" y1="{sy(ty):.1f}" x2="{_ML}" '
                         f'y2="{sy(ty):.1f}" stroke="#333"/>')
            parts.append(f'<text x="{_ML-8}" y="{sy(ty)+4:.1f}" text-anchor="end" '
                         f'font-family="sans-serif" font-size="11">{ty:.4g}</text>')
        parts.append(f'<text x="{_ML+pw/2:.1f}" y="{_H-12}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12">{self.xlabel}</text>')
        parts.append(f'<text x="16" y="{_MT+ph/2:.1f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12" '
                     f'transform="rotate(-90 16 {_MT+ph/2:.1f})">{self.ylabel}</text>')

        legend_y = _MT + 14
        for kind, pts, color, label in self.series:
            if kind == "line":
                path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
                parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                             f'stroke-width="1.5"/>')
            else:
                for x, y in pts:
                    parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" '
                                 f'fill="{color}" fill-opacity="0.8"/>')
            if label:
                parts.append(f'<rect x="{_ML+pw-150}" y="{legend_y-9}" width="10" '
                             f'height="10" fill="{color}"/>')
                parts.append(f'<text x="{_ML+pw-136}" y="{legend_y}" '
                             f'font-family="sans-serif" font-size="11">{label}</text>')
                legend_y += 16
        parts.append("</svg>")
        return "\n".join(parts)
