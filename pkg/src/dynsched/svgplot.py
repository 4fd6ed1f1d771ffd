"""Static SVG line charts for sweep tables.

Hand-rolled SVG so figures are deterministic artifacts: no timestamps and no
library drift; the same table always produces a byte-identical file.  The y
axis is always mean normalized communication; rows whose analysis_pred is set
additionally contribute to a dashed overlay series named "analysis:<series>".
"""
from __future__ import annotations

from pathlib import Path
from typing import IO, Sequence
from xml.sax.saxutils import escape

from .experiments import CSV_COLUMNS, SweepRow

_WIDTH, _HEIGHT = 720, 480
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 170, 30, 50
_PLOT_W = _WIDTH - _LEFT - _RIGHT
_PLOT_H = _HEIGHT - _TOP - _BOTTOM
_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)
_CATEGORICAL = ("kernel", "strategy", "scenario")


def infer_x_axis(table: Sequence[SweepRow]) -> str:
    """Pick the column the table actually sweeps over."""
    for column in ("p", "n", "beta", "scenario"):
        values = {getattr(r, column) for r in table} - {None}
        if len(values) > 1:
            return column
    return "p"


def _column_value(row: SweepRow, column: str):
    value = getattr(row, column)
    if value is None:
        raise ValueError(f"row has empty {column!r}: {row}")
    return value


def _pad(lo: float, hi: float) -> tuple[float, float]:
    # 5% margin on each side; degenerate span falls back to a unit pad
    span = hi - lo
    margin = 0.05 * span if span > 0 else max(1.0, abs(lo) * 0.05)
    return lo - margin, hi + margin


def _sx(v: float, lo: float, hi: float) -> float:
    return _LEFT + (v - lo) / (hi - lo) * _PLOT_W


def _sy(v: float, lo: float, hi: float) -> float:
    return _TOP + _PLOT_H - (v - lo) / (hi - lo) * _PLOT_H


def emit_svg_plot(
    table: Sequence[SweepRow],
    x_axis: str,
    series: str,
    destination: str | Path | IO[str],
) -> None:
    """Render the table as a line chart, one polyline per series value."""
    for column in (x_axis, series):
        if column not in CSV_COLUMNS:
            raise ValueError(f"unknown column: {column!r}")
    if not table:
        raise ValueError("empty table")

    categorical = x_axis in _CATEGORICAL
    categories: list[str] = []
    if categorical:
        for row in table:
            value = str(_column_value(row, x_axis))
            if value not in categories:
                categories.append(value)

    def x_of(row: SweepRow) -> float:
        if categorical:
            return float(categories.index(str(_column_value(row, x_axis))))
        return float(_column_value(row, x_axis))

    # base series in first-appearance order, analysis overlays after
    points: dict[str, list[tuple[float, float]]] = {}
    for row in table:
        label = str(_column_value(row, series))
        points.setdefault(label, []).append((x_of(row), row.mean_norm_comm))
    for row in table:
        if row.analysis_pred is not None:
            label = f"analysis:{_column_value(row, series)}"
            points.setdefault(label, []).append((x_of(row), row.analysis_pred))
    for pts in points.values():
        pts.sort()

    xs = [x for pts in points.values() for x, _ in pts]
    ys = [y for pts in points.values() for _, y in pts]
    xlo, xhi = _pad(min(xs), max(xs))
    ylo, yhi = _pad(min(ys), max(ys))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="sans-serif">',
        f"<desc>x={x_axis} series={series} xrange=[{xlo!r},{xhi!r}] "
        f"yrange=[{ylo!r},{yhi!r}]</desc>",
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{_PLOT_W}" height="{_PLOT_H}" '
        f'fill="none" stroke="black"/>',
    ]

    # x ticks: one per category, or 5 evenly spaced over the padded range
    if categorical:
        ticks = [(float(i), label) for i, label in enumerate(categories)]
    else:
        ticks = [
            (v, f"{v:.4g}")
            for v in (xlo + i * (xhi - xlo) / 4 for i in range(5))
        ]
    for value, label in ticks:
        x = _sx(value, xlo, xhi)
        out.append(
            f'<line x1="{x:.2f}" y1="{_TOP + _PLOT_H}" x2="{x:.2f}" '
            f'y2="{_TOP + _PLOT_H + 5}" stroke="black"/>'
        )
        out.append(
            f'<text x="{x:.2f}" y="{_TOP + _PLOT_H + 18}" font-size="10" '
            f'text-anchor="middle">{escape(label)}</text>'
        )
    for i in range(5):
        value = ylo + i * (yhi - ylo) / 4
        y = _sy(value, ylo, yhi)
        out.append(
            f'<line x1="{_LEFT - 5}" y1="{y:.2f}" x2="{_LEFT}" y2="{y:.2f}" '
            f'stroke="black"/>'
        )
        out.append(
            f'<text x="{_LEFT - 8}" y="{y + 3:.2f}" font-size="10" '
            f'text-anchor="end">{value:.4g}</text>'
        )
    out.append(
        f'<text x="{_LEFT + _PLOT_W / 2:.2f}" y="{_HEIGHT - 12}" font-size="12" '
        f'text-anchor="middle">{escape(x_axis)}</text>'
    )
    out.append(
        f'<text x="16" y="{_TOP + _PLOT_H / 2:.2f}" font-size="12" '
        f'text-anchor="middle" transform="rotate(-90 16 {_TOP + _PLOT_H / 2:.2f})">'
        f"mean_norm_comm</text>"
    )

    legend_x = _LEFT + _PLOT_W + 14
    for index, (label, pts) in enumerate(points.items()):
        color = _PALETTE[index % len(_PALETTE)]
        dash = ' stroke-dasharray="5,3"' if label.startswith("analysis:") else ""
        coords = [(_sx(x, xlo, xhi), _sy(y, ylo, yhi)) for x, y in pts]
        if len(coords) > 1:
            joined = " ".join(f"{x:.2f},{y:.2f}" for x, y in coords)
            out.append(
                f'<polyline points="{joined}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"{dash}/>'
            )
        for x, y in coords:
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{color}"/>')
        ly = _TOP + 10 + 18 * index
        out.append(
            f'<line x1="{legend_x}" y1="{ly}" x2="{legend_x + 20}" y2="{ly}" '
            f'stroke="{color}" stroke-width="1.5"{dash}/>'
        )
        out.append(
            f'<text x="{legend_x + 26}" y="{ly + 4}" font-size="10">'
            f"{escape(label)}</text>"
        )

    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text, encoding="utf-8")
