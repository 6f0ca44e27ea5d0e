"""Minimal deterministic SVG line charts.

Plots are a convenience artifact; the CSV files are the contract. The
emitter is self-contained and fully deterministic: same series in, same
bytes out. Output is a single-series line chart with a handful of axis
ticks, optionally with a log-scaled y axis.
"""

from __future__ import annotations

import math

__all__ = ["line_chart"]

_W, _H = 800, 500
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    """Round tick positions covering [lo, hi], at most n of them."""
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            stride = mult * mag
            break
    first = math.ceil(lo / stride) * stride
    out = []
    v = first
    while v <= hi + 1e-9 * stride:
        out.append(0.0 if abs(v) < 1e-12 * stride else v)
        v += stride
    return out or [lo]


def _fmt(x: float) -> str:
    return f"{x:g}"


def line_chart(
    x,
    y,
    title: str,
    x_label: str = "t",
    y_label: str = "",
    log_y: bool = False,
) -> str:
    """Render one series as an SVG document string."""
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    if len(xs) != len(ys) or not xs:
        raise ValueError("x and y must be equal-length and nonempty")

    if log_y:
        positive = [v for v in ys if v > 0]
        floor = min(positive) if positive else 1.0
        ys_t = [math.log10(max(v, floor)) for v in ys]
    else:
        ys_t = ys

    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys_t), max(ys_t)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_lo -= 0.5
        y_hi += 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB

    def px(v: float) -> float:
        return _ML + plot_w * (v - x_lo) / (x_hi - x_lo)

    def py(v: float) -> float:
        return _MT + plot_h * (1.0 - (v - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
    ]

    for tx in _ticks(x_lo, x_hi):
        X = px(tx)
        parts.append(
            f'<line x1="{X:.2f}" y1="{_MT}" x2="{X:.2f}" y2="{_H - _MB}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{X:.2f}" y="{_H - _MB + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{_fmt(tx)}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        Y = py(ty)
        label = f"1e{ty:g}" if log_y else _fmt(ty)
        parts.append(
            f'<line x1="{_ML}" y1="{Y:.2f}" x2="{_W - _MR}" y2="{Y:.2f}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{Y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{label}</text>'
        )

    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{_W / 2:.0f}" y="{_H - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{x_label}</text>'
    )
    if y_label:
        parts.append(
            f'<text x="18" y="{_H / 2:.0f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" '
            f'transform="rotate(-90 18 {_H / 2:.0f})">{y_label}</text>'
        )

    coords = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, ys_t))
    parts.append(
        f'<polyline points="{coords}" fill="none" stroke="#1f6fb2" stroke-width="1.5"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
