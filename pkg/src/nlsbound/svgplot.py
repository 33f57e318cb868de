"""Minimal static SVG emission for the energy-landscape heatmaps.

Hand-rolled rather than pulling in a plotting stack: the output must be
byte-for-byte reproducible across runs, and all we need is a colored
cell grid with axes and a colorbar.
"""

from __future__ import annotations

import numpy as np

# piecewise-linear colormap anchors (dark blue -> green -> yellow)
_ANCHORS = [
    (0.0, (68, 1, 84)),
    (0.25, (59, 82, 139)),
    (0.5, (33, 145, 140)),
    (0.75, (94, 201, 98)),
    (1.0, (253, 231, 37)),
]


def _color(x: float) -> str:
    x = min(max(x, 0.0), 1.0)
    for (x0, c0), (x1, c1) in zip(_ANCHORS[:-1], _ANCHORS[1:]):
        if x <= x1:
            f = 0.0 if x1 == x0 else (x - x0) / (x1 - x0)
            rgb = tuple(int(round(a + f * (b - a))) for a, b in zip(c0, c1))
            return "#%02x%02x%02x" % rgb
    return "#fde725"


def heatmap_svg(values, x_ticks, y_ticks, x_label: str, y_label: str,
                title: str) -> str:
    """SVG heatmap of a 2-D array (rows = y, columns = x)."""
    vals = np.asarray(values, dtype=float)
    ny, nx = vals.shape
    vmin, vmax = float(vals.min()), float(vals.max())
    span = vmax - vmin if vmax > vmin else 1.0

    cw, ch = 14, 14
    left, top, right, bottom = 70, 40, 90, 50
    width = left + nx * cw + right
    height = top + ny * ch + bottom

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" '
        f'font-family="monospace" font-size="13">{title}</text>',
    ]
    for iy in range(ny):
        for ix in range(nx):
            c = _color((vals[iy, ix] - vmin) / span)
            x = left + ix * cw
            y = top + (ny - 1 - iy) * ch
            parts.append(f'<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="{c}"/>')

    def fmt(v):
        return f"{v:.3g}"

    step_x = max(1, nx // 8)
    for ix in range(0, nx, step_x):
        x = left + ix * cw + cw / 2
        parts.append(
            f'<text x="{x:.0f}" y="{top + ny * ch + 16}" text-anchor="middle" '
            f'font-family="monospace" font-size="10">{fmt(x_ticks[ix])}</text>'
        )
    step_y = max(1, ny // 8)
    for iy in range(0, ny, step_y):
        y = top + (ny - 1 - iy) * ch + ch / 2 + 3
        parts.append(
            f'<text x="{left - 6}" y="{y:.0f}" text-anchor="end" '
            f'font-family="monospace" font-size="10">{fmt(y_ticks[iy])}</text>'
        )
    parts.append(
        f'<text x="{left + nx * cw / 2:.0f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="monospace" font-size="11">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{top + ny * ch / 2:.0f}" text-anchor="middle" '
        f'font-family="monospace" font-size="11" '
        f'transform="rotate(-90 16 {top + ny * ch / 2:.0f})">{y_label}</text>'
    )

    # colorbar
    bar_x = left + nx * cw + 20
    bar_h = ny * ch
    for k in range(bar_h):
        f = 1.0 - k / max(bar_h - 1, 1)
        parts.append(
            f'<rect x="{bar_x}" y="{top + k}" width="14" height="1.5" fill="{_color(f)}"/>'
        )
    parts.append(
        f'<text x="{bar_x + 18}" y="{top + 8}" font-family="monospace" '
        f'font-size="10">{fmt(vmax)}</text>'
    )
    parts.append(
        f'<text x="{bar_x + 18}" y="{top + bar_h}" font-family="monospace" '
        f'font-size="10">{fmt(vmin)}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
