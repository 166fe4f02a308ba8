"""Plain-SVG plot emitters with byte-stable output."""

from __future__ import annotations

from typing import List, Sequence, Tuple
from xml.sax.saxutils import escape

from ..errors import LengthMismatch
from ..motion import Trajectory

SIZE = 400  # square plot area, px
MARGIN = 50
LOW_COLOR = (44, 123, 182)
HIGH_COLOR = (216, 25, 28)

Color = Tuple[int, int, int]


def _f(v: float) -> str:
    return f"{v:.3f}"


def _range(values: Sequence[float]) -> Tuple[float, float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        return lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _header(width: int, height: int, title: str) -> List[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]


def emit_scatter(pred: Sequence[float], gt: Sequence[float], axis_label: str) -> str:
    """Ground truth (x) against prediction (y) with the y = x reference line."""
    if len(pred) != len(gt):
        raise LengthMismatch(f"pred has {len(pred)} values, gt has {len(gt)}")
    lo, hi = _range(list(pred) + list(gt)) if pred else (0.0, 1.0)
    span = hi - lo

    def px(v: float) -> float:
        return MARGIN + (v - lo) / span * SIZE

    def py(v: float) -> float:
        return MARGIN + SIZE - (v - lo) / span * SIZE

    w = h = SIZE + 2 * MARGIN
    out = _header(w, h, axis_label)
    out.append(
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>'
    )
    out.append(
        f'<line class="reference" x1="{_f(px(lo))}" y1="{_f(py(lo))}" '
        f'x2="{_f(px(hi))}" y2="{_f(py(hi))}" stroke="red" stroke-width="1.5"/>'
    )
    for p, g in zip(pred, gt):
        out.append(
            f'<circle class="marker" cx="{_f(px(g))}" cy="{_f(py(p))}" r="3" '
            f'fill="steelblue" fill-opacity="0.7" data-gt="{float(g)!r}" data-pred="{float(p)!r}"/>'
        )
    label = escape(axis_label)
    out.append(f'<text x="{w / 2:.1f}" y="{h - 12}" text-anchor="middle">ground truth {label}</text>')
    out.append(
        f'<text x="14" y="{h / 2:.1f}" text-anchor="middle" transform="rotate(-90 14 {h / 2:.1f})">'
        f"predicted {label}</text>"
    )
    out.append(f'<text x="{MARGIN}" y="{MARGIN + SIZE + 16}" font-size="11">{_f(lo)}</text>')
    out.append(
        f'<text x="{MARGIN + SIZE}" y="{MARGIN + SIZE + 16}" font-size="11" text-anchor="end">{_f(hi)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def lerp_color(fraction: float) -> Color:
    f = min(max(fraction, 0.0), 1.0)
    return tuple(round(a + (b - a) * f) for a, b in zip(LOW_COLOR, HIGH_COLOR))  # type: ignore[return-value]


def hex_color(color: Color) -> str:
    return "#{:02x}{:02x}{:02x}".format(*color)


def emit_heatmap(trajectory, values: Sequence[float], label: str) -> str:
    """Draw a path with each segment coloured by the mean of its endpoint values.

    ``trajectory`` is a :class:`Trajectory` or a sequence of (x, y) points.
    Colours interpolate linearly from the low to the high colour over
    [min(values), max(values)]; a constant series uses the low colour.
    """
    points = trajectory.xy() if isinstance(trajectory, Trajectory) else [(float(p[0]), float(p[1])) for p in trajectory]
    if len(values) != len(points):
        raise LengthMismatch(f"{len(values)} values for {len(points)} waypoints")
    vmin, vmax = (min(values), max(values)) if values else (0.0, 0.0)
    vspan = vmax - vmin

    def frac(v: float) -> float:
        return 0.0 if vspan == 0 else (v - vmin) / vspan

    if points:
        xs, ys = [p[0] for p in points], [p[1] for p in points]
        # Equal scale on both axes so path geometry is not distorted.
        cx, cy = (min(xs) + max(xs)) / 2, (min(ys) + max(ys)) / 2
        half = max(max(xs) - min(xs), max(ys) - min(ys), 1e-9) / 2 * 1.05
    else:
        cx = cy = 0.0
        half = 1.0
    scale = SIZE / (2 * half)

    def sx(x: float) -> float:
        return MARGIN + (x - cx) * scale + SIZE / 2

    def sy(y: float) -> float:
        return MARGIN + SIZE / 2 - (y - cy) * scale

    bar_x = MARGIN + SIZE + 20
    w, h = SIZE + 2 * MARGIN + 80, SIZE + 2 * MARGIN
    out = _header(w, h, label)
    out += [
        "<defs>",
        '<linearGradient id="colorbar" x1="0" y1="1" x2="0" y2="0">',
        f'<stop offset="0" stop-color="{hex_color(LOW_COLOR)}"/>',
        f'<stop offset="1" stop-color="{hex_color(HIGH_COLOR)}"/>',
        "</linearGradient>",
        "</defs>",
    ]
    for i in range(len(points) - 1):
        (x0, y0), (x1, y1) = points[i], points[i + 1]
        color = hex_color(lerp_color(frac((values[i] + values[i + 1]) / 2)))
        out.append(
            f'<line class="segment" x1="{_f(sx(x0))}" y1="{_f(sy(y0))}" x2="{_f(sx(x1))}" '
            f'y2="{_f(sy(y1))}" stroke="{color}" stroke-width="4" stroke-linecap="round"/>'
        )
    if len(points) == 1:
        color = hex_color(lerp_color(0.0))
        out.append(f'<circle class="segment" cx="{_f(sx(points[0][0]))}" cy="{_f(sy(points[0][1]))}" r="4" fill="{color}"/>')
    out += [
        f'<rect class="colorbar" x="{bar_x}" y="{MARGIN}" width="16" height="{SIZE}" fill="url(#colorbar)" stroke="black"/>',
        f'<text x="{bar_x + 20}" y="{MARGIN + SIZE}" font-size="11">{_f(vmin)}</text>',
        f'<text x="{bar_x + 20}" y="{MARGIN + 10}" font-size="11">{_f(vmax)}</text>',
        f'<text x="{w / 2:.1f}" y="{h - 12}" text-anchor="middle">{escape(label)}</text>',
        "</svg>",
    ]
    return "\n".join(out) + "\n"
