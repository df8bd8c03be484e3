"""Minimal static SVG line plots.

The documents are assembled by hand (no plotting library) and contain no
timestamp, so the same data always gives the same bytes.
"""

import math

from .io import fmt

WIDTH, HEIGHT, PAD = 480, 320, 48


def _num(x):
    return f"{x:.2f}"


def line_plot(ys, title="", xlabel="", ylabel="", logy=False, xs=None, markers=False):
    """SVG document drawing ``ys`` against ``xs`` (default ``0..len-1``).

    With ``logy`` nonpositive values are dropped before taking logs.
    """
    ys = [float(y) for y in ys]
    xs = list(range(len(ys))) if xs is None else [float(x) for x in xs]
    pts = [(x, math.log10(y) if logy else y) for x, y in zip(xs, ys)
           if math.isfinite(y) and (y > 0 or not logy)]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
             f'viewBox="0 0 {WIDTH} {HEIGHT}">',
             f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
             f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" font-size="14">{_esc(title)}</text>',
             f'<text x="{WIDTH // 2}" y="{HEIGHT - 8}" text-anchor="middle" font-size="12">{_esc(xlabel)}</text>',
             f'<text x="14" y="{HEIGHT // 2}" text-anchor="middle" font-size="12" '
             f'transform="rotate(-90 14 {HEIGHT // 2})">{_esc(ylabel)}{" (log10)" if logy else ""}</text>',
             f'<rect x="{PAD}" y="{PAD}" width="{WIDTH - 2 * PAD}" height="{HEIGHT - 2 * PAD}" '
             f'fill="none" stroke="black"/>']
    if pts:
        x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
        y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 == y0:
            y0, y1 = y0 - 1, y1 + 1

        def sx(x):
            return PAD + (x - x0) / (x1 - x0) * (WIDTH - 2 * PAD)

        def sy(y):
            return HEIGHT - PAD - (y - y0) / (y1 - y0) * (HEIGHT - 2 * PAD)

        coords = " ".join(f"{_num(sx(x))},{_num(sy(y))}" for x, y in pts)
        parts.append(f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{coords}"/>')
        if markers:
            parts += [f'<circle cx="{_num(sx(x))}" cy="{_num(sy(y))}" r="2.5" fill="steelblue"/>'
                      for x, y in pts]
        for val, y in ((y0, HEIGHT - PAD), (y1, PAD)):
            parts.append(f'<text x="{PAD - 4}" y="{y + 4}" text-anchor="end" font-size="10">'
                         f'{_esc(_tick(val))}</text>')
        for val, x in ((x0, PAD), (x1, WIDTH - PAD)):
            parts.append(f'<text x="{x}" y="{HEIGHT - PAD + 14}" text-anchor="middle" '
                         f'font-size="10">{_esc(_tick(val))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _tick(v):
    return f"{v:.4g}" if abs(v) < 1e5 else fmt(v)


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_plot(path, *args, **kw):
    with open(path, "w") as fh:
        fh.write(line_plot(*args, **kw))
