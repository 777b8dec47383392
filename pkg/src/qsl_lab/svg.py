"""Tiny self-contained SVG charts; keeps artifact output dependency-free.

Byte output is a pure function of the data, so rendered files diff cleanly
across runs.
"""

from __future__ import annotations

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#000000")
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 36, 48


def _limits(arrays, pad=0.05):
    lo = min(float(np.min(a)) for a in arrays if len(a))
    hi = max(float(np.max(a)) for a in arrays if len(a))
    if hi == lo:
        hi = lo + 1.0
    span = hi - lo
    return lo - pad * span, hi + pad * span


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_chart(
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    lines=(),
    points=(),
    vlines=(),
    width: int = 720,
    height: int = 480,
) -> str:
    """Render line series, scatter groups and vertical markers to SVG text.

    lines: iterable of (label, xs, ys, color)
    points: iterable of (label, xs, ys, color, yerr-or-None)
    vlines: iterable of (label, x, color)
    """
    xs_all = [np.asarray(s[1], dtype=float) for s in lines] + [
        np.asarray(p[1], dtype=float) for p in points
    ]
    ys_all = [np.asarray(s[2], dtype=float) for s in lines] + [
        np.asarray(p[2], dtype=float) for p in points
    ]
    for _, xs, ys, _, yerr in points:
        if yerr is not None:
            ys = np.asarray(ys, dtype=float)
            err = np.asarray(yerr, dtype=float)
            ys_all.extend([ys + err, ys - err])
    for _, x, _ in vlines:
        xs_all.append(np.array([x], dtype=float))
    if not xs_all:
        raise ValueError("nothing to plot")
    x_lo, x_hi = _limits(xs_all)
    y_lo, y_hi = _limits(ys_all)
    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B

    def px(x):
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return _MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333333"/>',
    ]
    if title:
        out.append(
            f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>'
        )
    for tick in np.linspace(x_lo, x_hi, 6):
        x = px(tick)
        out.append(
            f'<line x1="{_fmt(x)}" y1="{_MARGIN_T + plot_h}" x2="{_fmt(x)}" '
            f'y2="{_MARGIN_T + plot_h + 5}" stroke="#333333"/>'
        )
        out.append(
            f'<text x="{_fmt(x)}" y="{_MARGIN_T + plot_h + 18}" text-anchor="middle">{tick:.4g}</text>'
        )
    for tick in np.linspace(y_lo, y_hi, 6):
        y = py(tick)
        out.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{_fmt(y)}" x2="{_MARGIN_L}" y2="{_fmt(y)}" stroke="#333333"/>'
        )
        out.append(
            f'<text x="{_MARGIN_L - 8}" y="{_fmt(y + 4)}" text-anchor="end">{tick:.4g}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{_MARGIN_L + plot_w / 2:.0f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="16" y="{_MARGIN_T + plot_h / 2:.0f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {_MARGIN_T + plot_h / 2:.0f})">{ylabel}</text>'
        )
    legend_y = _MARGIN_T + 14
    for label, x, color in vlines:
        out.append(
            f'<line x1="{_fmt(px(x))}" y1="{_MARGIN_T}" x2="{_fmt(px(x))}" '
            f'y2="{_MARGIN_T + plot_h}" stroke="{color}" stroke-dasharray="5,4"/>'
        )
        out.append(
            f'<text x="{_fmt(px(x) + 4)}" y="{_MARGIN_T + 14}" fill="{color}">{label}</text>'
        )
    for label, xs, ys, color in lines:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if label:
            out.append(
                f'<text x="{width - _MARGIN_R - 6}" y="{legend_y}" text-anchor="end" '
                f'fill="{color}">{label}</text>'
            )
            legend_y += 16
    for label, xs, ys, color, yerr in points:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if yerr is not None:
            err = np.asarray(yerr, dtype=float)
            for x, y, e in zip(xs, ys, err):
                out.append(
                    f'<line x1="{_fmt(px(x))}" y1="{_fmt(py(y - e))}" x2="{_fmt(px(x))}" '
                    f'y2="{_fmt(py(y + e))}" stroke="{color}" stroke-width="1"/>'
                )
        for x, y in zip(xs, ys):
            out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="2.2" fill="{color}"/>')
        if label:
            out.append(
                f'<text x="{width - _MARGIN_R - 6}" y="{legend_y}" text-anchor="end" '
                f'fill="{color}">{label}</text>'
            )
            legend_y += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"
