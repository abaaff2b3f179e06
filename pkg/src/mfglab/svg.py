"""Dependency-free SVG line plots (optionally log-log) for CLI artifacts."""
from __future__ import annotations

import math
from pathlib import Path

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _ticks(lo: float, hi: float, logscale: bool):
    if logscale:
        k0, k1 = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0**k for k in range(k0, k1 + 1)]
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / 4 if span > 0 else 1.0))
    if span / step > 8:
        step *= 2
    t0 = math.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-12 * abs(hi):
        out.append(t)
        t += step
    return out


def polyline_plot(
    path: str | Path,
    series: list[tuple[str, list[float], list[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    loglog: bool = False,
    size: tuple[int, int] = (640, 480),
) -> None:
    W, H = size
    mx, my = 70, 50
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if loglog and (min(xs_all) <= 0 or min(ys_all) <= 0):
        raise ValueError("log-log plot needs positive data")

    def tx(v):
        return math.log10(v) if loglog else v

    x_lo, x_hi = min(map(tx, xs_all)), max(map(tx, xs_all))
    y_lo, y_hi = min(map(tx, ys_all)), max(map(tx, ys_all))
    for pair in ((x_lo, x_hi), (y_lo, y_hi)):
        if pair[0] == pair[1]:
            x_lo -= 0.5
            x_hi += 0.5
            break

    def px(v):
        return mx + (tx(v) - x_lo) / (x_hi - x_lo) * (W - 2 * mx)

    def py(v):
        return H - my - (tx(v) - y_lo) / (y_hi - y_lo) * (H - 2 * my)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W/2:.0f}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{W/2:.0f}" y="{H-8}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="16" y="{H/2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {H/2:.0f})">{ylabel}</text>',
        f'<rect x="{mx}" y="{my}" width="{W-2*mx}" height="{H-2*my}" '
        f'fill="none" stroke="#333"/>',
    ]
    for t in _ticks(10.0**x_lo if loglog else x_lo, 10.0**x_hi if loglog else x_hi, loglog):
        x = px(t)
        if mx - 1 <= x <= W - mx + 1:
            parts.append(f'<line x1="{x:.1f}" y1="{H-my}" x2="{x:.1f}" y2="{H-my+5}" stroke="#333"/>')
            parts.append(f'<text x="{x:.1f}" y="{H-my+18}" text-anchor="middle" font-size="10">{t:g}</text>')
    for t in _ticks(10.0**y_lo if loglog else y_lo, 10.0**y_hi if loglog else y_hi, loglog):
        y = py(t)
        if my - 1 <= y <= H - my + 1:
            parts.append(f'<line x1="{mx-5}" y1="{y:.1f}" x2="{mx}" y2="{y:.1f}" stroke="#333"/>')
            parts.append(f'<text x="{mx-8}" y="{y+3:.1f}" text-anchor="end" font-size="10">{t:g}</text>')
    for k, (label, xs, ys) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" fill="{color}"/>')
        parts.append(
            f'<text x="{W-mx-6}" y="{my+16+14*k}" text-anchor="end" font-size="11" '
            f'fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))
