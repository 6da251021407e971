"""Plain-text artifacts: support plots as SVG and labelled couplings as CSV."""

from __future__ import annotations

import csv
import io
from typing import NamedTuple, Optional

from .scalars import format_scalar
from .structure import SupportStructure

SIZE = 640
MARGIN = 10
BRANCH_STYLE = {
    "upper": "#1f77b4",
    "lower": "#d62728",
    "diagonal": "#2ca02c",
    "residual": "#7f7f7f",
}


class PlotBox(NamedTuple):
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @classmethod
    def around(cls, struct: SupportStructure, pad: float = 0.05) -> "PlotBox":
        xs = [float(r[0]) for r in struct.labelled]
        ys = [float(r[1]) for r in struct.labelled]
        if not xs:
            return cls(-1.0, 1.0, -1.0, 1.0)
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
        dx = (x1 - x0) or 1.0
        dy = (y1 - y0) or 1.0
        return cls(x0 - pad * dx, x1 + pad * dx, y0 - pad * dy, y1 + pad * dy)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def emit_support_svg(struct: SupportStructure, box: Optional[PlotBox] = None) -> str:
    """Scatter of the support in the x-y plane, one colour group per branch.

    The guides ``y = x`` and ``y = -x`` are dotted; the coordinate axes are
    drawn when they cross the box.  Output is a pure function of the input.
    """
    box = box or PlotBox.around(struct)
    inner = SIZE - 2 * MARGIN

    def px(x):
        return MARGIN + (x - box.x_min) / (box.x_max - box.x_min) * inner

    def py(y):
        return MARGIN + (box.y_max - y) / (box.y_max - box.y_min) * inner

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f'<defs><clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{inner}" height="{inner}"/></clipPath></defs>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{inner}" height="{inner}" fill="white" stroke="black"/>',
        '<g id="axes" stroke="black" stroke-width="1">',
    ]
    if box.x_min <= 0 <= box.x_max:
        out.append(f'<line x1="{_fmt(px(0))}" y1="{MARGIN}" x2="{_fmt(px(0))}" y2="{SIZE - MARGIN}"/>')
    if box.y_min <= 0 <= box.y_max:
        out.append(f'<line x1="{MARGIN}" y1="{_fmt(py(0))}" x2="{SIZE - MARGIN}" y2="{_fmt(py(0))}"/>')
    out.append("</g>")
    out.append('<g id="guides" clip-path="url(#plot)" stroke="black" stroke-dasharray="2,4" fill="none">')
    for sign, name in ((1, "y=x"), (-1, "y=-x")):
        out.append(f'<line class="{name}" x1="{_fmt(px(box.x_min))}" y1="{_fmt(py(sign * box.x_min))}" '
                   f'x2="{_fmt(px(box.x_max))}" y2="{_fmt(py(sign * box.x_max))}"/>')
    out.append("</g>")
    rows = [(float(x), float(y), float(m), b) for x, y, m, b in struct.labelled]
    top = max((m for *_, m, _ in rows), default=1.0)
    for branch, colour in BRANCH_STYLE.items():
        pts = sorted((x, y, m) for x, y, m, b in rows if b == branch)
        if not pts:
            continue
        out.append(f'<g id="branch-{branch}" fill="{colour}" clip-path="url(#plot)">')
        for x, y, m in pts:
            # area proportional to mass, with a visible floor
            r = 1.0 + 2.0 * (m / top) ** 0.5
            out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="{_fmt(r)}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def coupling_csv(struct: SupportStructure) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "mass", "branch"])
    for x, y, m, b in sorted(struct.labelled, key=lambda r: (r[0], r[1])):
        w.writerow([format_scalar(x), format_scalar(y), format_scalar(m), b])
    return buf.getvalue()
