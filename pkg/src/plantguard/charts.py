"""Minimal SVG line-chart emitter for telemetry and control-chart exports.

Hand-rolled on purpose: the only consumers are the CLI's export-chart
command and CI artifacts, so a plotting dependency is not worth it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

__all__ = ["ChartSpec", "Series", "render_svg", "write_svg"]

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]


@dataclass(frozen=True)
class Series:
    name: str
    x: list[float]
    y: list[float]
    color: str | None = None
    dashed: bool = False

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError(f"series {self.name!r}: x/y length mismatch")


@dataclass
class ChartSpec:
    title: str
    series: list[Series] = field(default_factory=list)
    hlines: list[tuple[str, float]] = field(default_factory=list)  # (label, y)
    width: int = 720
    height: int = 320
    margin: int = 48
    x_label: str = "t"
    y_label: str = ""


def _bounds(spec: ChartSpec) -> tuple[float, float, float, float]:
    xs = [v for s in spec.series for v in s.x]
    ys = [v for s in spec.series for v in s.y if math.isfinite(v)]
    ys += [y for _, y in spec.hlines]
    if not xs or not ys:
        return 0.0, 1.0, 0.0, 1.0
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    return x0, x1, y0 - pad, y1 + pad


def render_svg(spec: ChartSpec) -> str:
    x0, x1, y0, y1 = _bounds(spec)
    m = spec.margin
    pw, ph = spec.width - 2 * m, spec.height - 2 * m

    def px(x: float) -> float:
        return m + (x - x0) / (x1 - x0) * pw

    def py(y: float) -> float:
        return m + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" '
        f'height="{spec.height}" viewBox="0 0 {spec.width} {spec.height}">',
        f'<rect width="{spec.width}" height="{spec.height}" fill="white"/>',
        f'<text x="{spec.width / 2:.1f}" y="{m / 2:.1f}" text-anchor="middle" '
        f'font-size="14">{escape(spec.title)}</text>',
        f'<rect x="{m}" y="{m}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333" stroke-width="1"/>',
    ]
    # axis ticks: 5 per axis, value labels only
    for i in range(6):
        xv = x0 + i * (x1 - x0) / 5
        yv = y0 + i * (y1 - y0) / 5
        out.append(
            f'<text x="{px(xv):.1f}" y="{m + ph + 16:.1f}" text-anchor="middle" '
            f'font-size="10">{xv:g}</text>'
        )
        out.append(
            f'<text x="{m - 6:.1f}" y="{py(yv) + 3:.1f}" text-anchor="end" '
            f'font-size="10">{yv:.4g}</text>'
        )
    out.append(
        f'<text x="{spec.width / 2:.1f}" y="{spec.height - 8:.1f}" '
        f'text-anchor="middle" font-size="11">{escape(spec.x_label)}</text>'
    )
    if spec.y_label:
        out.append(
            f'<text x="12" y="{spec.height / 2:.1f}" font-size="11" '
            f'transform="rotate(-90 12 {spec.height / 2:.1f})" '
            f'text-anchor="middle">{escape(spec.y_label)}</text>'
        )
    for label, yv in spec.hlines:
        out.append(
            f'<line x1="{m}" y1="{py(yv):.1f}" x2="{m + pw}" y2="{py(yv):.1f}" '
            f'stroke="#888" stroke-width="1" stroke-dasharray="6 3"/>'
        )
        out.append(
            f'<text x="{m + pw - 4:.1f}" y="{py(yv) - 4:.1f}" text-anchor="end" '
            f'font-size="10" fill="#555">{escape(label)}</text>'
        )
    for i, series in enumerate(spec.series):
        color = series.color or _PALETTE[i % len(_PALETTE)]
        points = " ".join(
            f"{px(x):.1f},{py(y):.1f}"
            for x, y in zip(series.x, series.y)
            if math.isfinite(y)
        )
        dash = ' stroke-dasharray="4 3"' if series.dashed else ""
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.2"{dash} '
            f'points="{points}"/>'
        )
        out.append(
            f'<text x="{m + 6}" y="{m + 14 + 13 * i}" font-size="11" '
            f'fill="{color}">{escape(series.name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(spec: ChartSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_svg(spec))
