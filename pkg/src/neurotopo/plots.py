"""Minimal static SVG emission for the three standard plots.

Hand-written markup, no interactivity: scatter of layer means colored by
accuracy, grouped occurrence bars, and a correlation heatmap.
"""

import math

import numpy as np

_W, _H = 640, 480
_MARGIN = 60


def _color(t):
    # blue (low) -> red (high)
    t = min(max(t, 0.0), 1.0)
    r = int(40 + 215 * t)
    b = int(255 - 215 * t)
    return f"rgb({r},60,{b})"


def _axis_scale(values, lo_pix, hi_pix):
    finite = [v for v in values if math.isfinite(v)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1.0
    span = hi - lo

    def scale(v):
        return lo_pix + (v - lo) / span * (hi_pix - lo_pix)

    return scale, lo, hi


def _doc(body, title):
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">\n'
        f'<rect width="{_W}" height="{_H}" fill="white"/>\n'
        f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>\n'
    )
    return head + body + "</svg>\n"


def svg_scatter(points, title, xlabel, ylabel):
    """Scatter of (x, y) points colored by their accuracy tag."""
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    accs = [p.test_acc for p in points]
    sx, xlo, xhi = _axis_scale(xs, _MARGIN, _W - _MARGIN)
    sy, ylo, yhi = _axis_scale(ys, _H - _MARGIN, _MARGIN)
    amin = min((a for a in accs if math.isfinite(a)), default=0.0)
    amax = max((a for a in accs if math.isfinite(a)), default=1.0)
    aspan = (amax - amin) or 1.0
    parts = [
        f'<line x1="{_MARGIN}" y1="{_H - _MARGIN}" x2="{_W - _MARGIN}" y2="{_H - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" y2="{_H - _MARGIN}" stroke="black"/>',
        f'<text x="{_W / 2:.0f}" y="{_H - 15}" text-anchor="middle">{xlabel} [{xlo:.4g}, {xhi:.4g}]</text>',
        f'<text x="18" y="{_H / 2:.0f}" text-anchor="middle" transform="rotate(-90 18 {_H / 2:.0f})">'
        f"{ylabel} [{ylo:.4g}, {yhi:.4g}]</text>",
    ]
    for p in points:
        if not (math.isfinite(p.x) and math.isfinite(p.y)):
            continue
        t = (p.test_acc - amin) / aspan if math.isfinite(p.test_acc) else 0.5
        parts.append(
            f'<circle cx="{sx(p.x):.2f}" cy="{sy(p.y):.2f}" r="4" fill="{_color(t)}" fill-opacity="0.8"/>'
        )
    return _doc("\n".join(parts) + "\n", title)


def svg_group_bars(group_names, frequencies, title):
    """Grouped bars: one cluster per neuron type, one bar per accuracy group."""
    freqs = np.asarray(frequencies, dtype=np.float64)
    n_groups, k = freqs.shape
    colors = ["#c03030", "#3060c0", "#30a040", "#a070d0", "#c0a030"]
    top = max(freqs.max(), 1e-9)
    plot_w = _W - 2 * _MARGIN
    cluster_w = plot_w / k
    bar_w = cluster_w * 0.8 / n_groups
    parts = [
        f'<line x1="{_MARGIN}" y1="{_H - _MARGIN}" x2="{_W - _MARGIN}" y2="{_H - _MARGIN}" stroke="black"/>'
    ]
    for j in range(k):
        x0 = _MARGIN + j * cluster_w + cluster_w * 0.1
        parts.append(
            f'<text x="{x0 + cluster_w * 0.4:.1f}" y="{_H - _MARGIN + 16}" text-anchor="middle">t{j + 1}</text>'
        )
        for g in range(n_groups):
            h = freqs[g, j] / top * (_H - 2 * _MARGIN)
            parts.append(
                f'<rect x="{x0 + g * bar_w:.1f}" y="{_H - _MARGIN - h:.1f}" width="{bar_w:.1f}" '
                f'height="{h:.1f}" fill="{colors[g % len(colors)]}"/>'
            )
    for g, name in enumerate(group_names):
        parts.append(
            f'<rect x="{_W - _MARGIN - 120}" y="{_MARGIN + 18 * g}" width="12" height="12" '
            f'fill="{colors[g % len(colors)]}"/>'
            f'<text x="{_W - _MARGIN - 103}" y="{_MARGIN + 18 * g + 10}">{name}</text>'
        )
    return _doc("\n".join(parts) + "\n", title)


def svg_heatmap(matrix, labels, title):
    """Correlation heatmap with cell values printed."""
    m = np.asarray(matrix, dtype=np.float64)
    k = m.shape[0]
    cell = min((_W - 2 * _MARGIN) / k, (_H - 2 * _MARGIN) / k)
    parts = []
    for i in range(k):
        parts.append(
            f'<text x="{_MARGIN - 6}" y="{_MARGIN + i * cell + cell / 2 + 4:.1f}" '
            f'text-anchor="end">{labels[i]}</text>'
            f'<text x="{_MARGIN + i * cell + cell / 2:.1f}" y="{_MARGIN - 8}" '
            f'text-anchor="middle">{labels[i]}</text>'
        )
        for j in range(k):
            v = m[i, j]
            if math.isnan(v):
                fill, text = "#dddddd", "n/a"
            else:
                fill, text = _color((v + 1.0) / 2.0), f"{v:.2f}"
            x, y = _MARGIN + j * cell, _MARGIN + i * cell
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{cell:.1f}" height="{cell:.1f}" '
                f'fill="{fill}" stroke="white"/>'
                f'<text x="{x + cell / 2:.1f}" y="{y + cell / 2 + 4:.1f}" text-anchor="middle" '
                f'fill="white">{text}</text>'
            )
    return _doc("\n".join(parts) + "\n", title)
