"""Hand-emitted SVG line plot of a driven trajectory.

No plotting library: the file is assembled from strings so that identical
inputs give byte-identical output.  The drawing is a fixed 900x600 viewBox
with exactly three polyline series (the x, y, z components of the driven
vector against the step index) plus an axes group and a legend block naming
the seven experiment parameters.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence

import numpy as np

WIDTH, HEIGHT = 900, 600
PLOT = {"left": 70.0, "right": 640.0, "top": 40.0, "bottom": 540.0}
Y_MIN, Y_MAX = -1.05, 1.05

SERIES = (("s_x", "#1f77b4"), ("s_y", "#d62728"), ("s_z", "#2ca02c"))


def _fx(step: float, last: float) -> float:
    span = PLOT["right"] - PLOT["left"]
    return PLOT["left"] + (span * step / last if last > 0 else 0.0)


def _fy(value: float) -> float:
    frac = (value - Y_MIN) / (Y_MAX - Y_MIN)
    return PLOT["bottom"] - frac * (PLOT["bottom"] - PLOT["top"])


def _num(x: float) -> str:
    return f"{x:.2f}"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _param_text(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_trajectory_svg(trajectory: Sequence[Sequence[float]],
                          params: Mapping[str, object],
                          title: str = "blind-targeting trajectory") -> str:
    """Render the (N, 3) trajectory; params appear verbatim in the legend."""
    pts = np.asarray(trajectory, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
        raise ValueError("trajectory must be an (N >= 2, 3) array")
    n = pts.shape[0]
    last = float(n - 1)
    tick_step = max(1, n // 10)

    out: list[str] = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
               f'font-family="monospace" font-size="13">')
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>')
    out.append(f'<text x="{_num(PLOT["left"])}" y="24" font-size="16">{_esc(title)}</text>')

    out.append('<g id="axes" stroke="#000000" fill="none">')
    out.append(f'<rect x="{_num(PLOT["left"])}" y="{_num(PLOT["top"])}" '
               f'width="{_num(PLOT["right"] - PLOT["left"])}" '
               f'height="{_num(PLOT["bottom"] - PLOT["top"])}"/>')
    for step in range(0, n, tick_step):
        x = _fx(step, last)
        out.append(f'<line x1="{_num(x)}" y1="{_num(PLOT["bottom"])}" '
                   f'x2="{_num(x)}" y2="{_num(PLOT["bottom"] + 6)}"/>')
    out.append('</g>')

    out.append('<g id="tick-labels" fill="#000000">')
    for step in range(0, n, tick_step):
        x = _fx(step, last)
        out.append(f'<text x="{_num(x)}" y="{_num(PLOT["bottom"] + 22)}" '
                   f'text-anchor="middle">{step}</text>')
    for val in (-1.0, -0.5, 0.0, 0.5, 1.0):
        y = _fy(val)
        out.append(f'<text x="{_num(PLOT["left"] - 8)}" y="{_num(y + 4)}" '
                   f'text-anchor="end">{val:g}</text>')
    out.append(f'<text x="{_num((PLOT["left"] + PLOT["right"]) / 2)}" '
               f'y="{_num(PLOT["bottom"] + 44)}" text-anchor="middle">step j</text>')
    out.append('</g>')

    out.append('<g id="series" fill="none" stroke-width="1.5">')
    for col, (name, color) in enumerate(SERIES):
        coords = " ".join(f"{_num(_fx(j, last))},{_num(_fy(float(pts[j, col])))}"
                          for j in range(n))
        out.append(f'<polyline id="{name}" stroke="{color}" points="{coords}"/>')
    out.append('</g>')

    lx = PLOT["right"] + 20.0
    out.append('<g id="legend" fill="#000000">')
    y = PLOT["top"] + 10.0
    for name, color in SERIES:
        out.append(f'<rect x="{_num(lx)}" y="{_num(y - 10)}" width="18" height="4" '
                   f'fill="{color}"/>')
        out.append(f'<text x="{_num(lx + 26)}" y="{_num(y)}">{name}</text>')
        y += 22.0
    y += 8.0
    for key, value in params.items():
        out.append(f'<text x="{_num(lx)}" y="{_num(y)}" class="param">'
                   f'{_esc(str(key))} = {_esc(_param_text(value))}</text>')
        y += 22.0
    out.append('</g>')

    out.append('</svg>')
    return "\n".join(out) + "\n"
