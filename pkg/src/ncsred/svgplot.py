"""Minimal self-contained SVG line plots for run artifacts.

Hand-rolled rather than delegating to a plotting stack so emitted files are
byte-stable across runs and environments.
"""
from __future__ import annotations

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
           "#393b79", "#637939", "#8c6d31", "#843c39", "#7b4173"]

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 36, 48


def _bounds(series):
    xs_min = min(min(xs) for xs, _, _, _ in series if len(xs))
    xs_max = max(max(xs) for xs, _, _, _ in series if len(xs))
    ys_min = min(min(ys) for _, ys, _, _ in series if len(ys))
    ys_max = max(max(ys) for _, ys, _, _ in series if len(ys))
    if xs_max == xs_min:
        xs_max = xs_min + 1.0
    if ys_max == ys_min:
        ys_max = ys_min + 1.0
    pad_x = 0.04 * (xs_max - xs_min)
    pad_y = 0.06 * (ys_max - ys_min)
    return xs_min - pad_x, xs_max + pad_x, ys_min - pad_y, ys_max + pad_y


def _fmt(v):
    if v == 0:
        return "0"
    mag = abs(v)
    if mag >= 1e4 or mag < 1e-3:
        return f"{v:.2e}"
    return f"{v:.4g}"


def line_plot(series, title="", xlabel="", ylabel="", dashed=()):
    """Render series [(xs, ys, color, label), ...] into an SVG string."""
    series = [s for s in series if len(s[0])]
    if not series:
        return ('<svg xmlns="http://www.w3.org/2000/svg" width="10" height="10">'
                "</svg>\n")
    x0, x1, y0, y1 = _bounds(series)
    iw = WIDTH - MARGIN_L - MARGIN_R
    ih = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * iw

    def sy(y):
        return MARGIN_T + ih - (y - y0) / (y1 - y0) * ih

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
           f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" '
           f'font-family="sans-serif" font-size="14">{title}</text>']
    # axes box and ticks
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{iw}" height="{ih}" '
               'fill="none" stroke="#333" stroke-width="1"/>')
    for t in range(6):
        xv = x0 + t * (x1 - x0) / 5
        yv = y0 + t * (y1 - y0) / 5
        out.append(f'<line x1="{sx(xv):.1f}" y1="{MARGIN_T + ih}" '
                   f'x2="{sx(xv):.1f}" y2="{MARGIN_T + ih + 5}" stroke="#333"/>')
        out.append(f'<text x="{sx(xv):.1f}" y="{MARGIN_T + ih + 18}" '
                   'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="10">{_fmt(xv)}</text>')
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{sy(yv):.1f}" '
                   f'x2="{MARGIN_L}" y2="{sy(yv):.1f}" stroke="#333"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{sy(yv) + 3:.1f}" '
                   'text-anchor="end" font-family="sans-serif" '
                   f'font-size="10">{_fmt(yv)}</text>')
    out.append(f'<text x="{MARGIN_L + iw / 2:.1f}" y="{HEIGHT - 10}" '
               'text-anchor="middle" font-family="sans-serif" '
               f'font-size="12">{xlabel}</text>')
    out.append(f'<text x="16" y="{MARGIN_T + ih / 2:.1f}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12" '
               f'transform="rotate(-90 16 {MARGIN_T + ih / 2:.1f})">{ylabel}</text>')

    for idx, (xs, ys, color, label) in enumerate(series):
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        dash = ' stroke-dasharray="6 4"' if label in dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"{dash}/>')
    # legend
    ly = MARGIN_T + 8
    for idx, (_, _, color, label) in enumerate(series):
        if not label:
            continue
        out.append(f'<line x1="{MARGIN_L + 10}" y1="{ly + 12 * idx:.1f}" '
                   f'x2="{MARGIN_L + 34}" y2="{ly + 12 * idx:.1f}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{MARGIN_L + 40}" y="{ly + 12 * idx + 3:.1f}" '
                   f'font-family="sans-serif" font-size="10">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
