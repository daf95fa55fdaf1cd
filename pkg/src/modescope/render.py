"""Static SVG rendering of planar monotonicity maps.

Each whole wedge is drawn as a triangle at its grid vertex.  Wedges where
"increasing" is rejected are cross-hatched, those where "decreasing" is
rejected are dotted, the rest are left unmarked.  Output bytes depend only
on the map.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .inference import DECREASE_REJECTED, INCREASE_REJECTED

STYLES = {
    INCREASE_REJECTED: ("url(#hatch)", "increase rejected (density not increasing)"),
    DECREASE_REJECTED: ("url(#dots)", "decrease rejected (density not decreasing)"),
    "none": ("none", "no rejection"),
}

_DEFS = """<defs>
<pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6">
<path d="M0,0 L6,6 M6,0 L0,6" stroke="#b2182b" stroke-width="0.8"/>
</pattern>
<pattern id="dots" patternUnits="userSpaceOnUse" width="5" height="5">
<circle cx="2.5" cy="2.5" r="1" fill="#2166ac"/>
</pattern>
</defs>"""


def _f(x: float) -> str:
    return f"{x:.3f}"


def wedge_triangle(vertex, direction, angle: float, length: float) -> np.ndarray:
    """Corners of a planar wedge: vertex and the two far corners."""
    v = np.asarray(vertex, dtype=float)
    e = np.asarray(direction, dtype=float)
    perp = np.array([-e[1], e[0]])
    far = v + length * e
    w = length * math.tan(angle)
    return np.array([v, far + w * perp, far - w * perp])


def render_svg(mp, width: int = 640, margin: int = 40) -> str:
    """SVG 1.1 text for a 2-d ``MonotonicityMap``."""
    layout, grid = mp.layout, mp.grid
    if layout.dim != 2:
        raise InvalidInputError(f"maps render only for d=2, got d={layout.dim}")
    reach = layout.length / math.cos(layout.angle)
    lo = grid.lower - reach
    hi = grid.upper + reach
    span = hi - lo
    scale = (width - 2 * margin) / max(span)
    height = int(math.ceil(span[1] * scale)) + 2 * margin + 70

    def px(p):
        return margin + (p[0] - lo[0]) * scale, margin + (hi[1] - p[1]) * scale

    verdicts = {k: w.verdict for k, w in mp.whole_wedge().items()}
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        _DEFS,
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    for vi, v in enumerate(grid.vertices):
        for di, e in enumerate(layout.directions):
            fill, _ = STYLES.get(verdicts.get((vi, di), "none"), STYLES["none"])
            pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in map(px, wedge_triangle(v, e, layout.angle, layout.length)))
            out.append(f'<polygon points="{pts}" fill="{fill}" stroke="black" stroke-width="0.5"/>')
        cx, cy = px(v)
        out.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="1.5" fill="black"/>')
    y = height - 60
    for i, (fill, label) in enumerate(STYLES.values()):
        yy = y + 18 * i
        out.append(f'<rect x="{margin}" y="{yy}" width="14" height="12" fill="{fill}" stroke="black" '
                   f'stroke-width="0.5"/>')
        out.append(f'<text x="{margin + 20}" y="{yy + 10}" font-family="sans-serif" font-size="11">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_map(mp, path) -> None:
    Path(path).write_text(render_svg(mp), encoding="utf-8")
