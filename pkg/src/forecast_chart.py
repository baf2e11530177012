"""
Deterministic SVG chart of an observed series, its forecast and the interval band.

The document holds exactly two polylines (observed, forecast) and one polygon
(the band); axes, ticks and the legend use lines, rects and text so the
structure stays easy to check. Numbers are written with fixed precision, so
the same inputs always give the same bytes.
"""

import html
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from errors import ArgumentError
from series_core import Forecast, TimeSeries


@dataclass(frozen=True)
class ChartStyle:
    width: int = 800
    height: int = 450
    margin_left: int = 90
    margin_right: int = 30
    margin_top: int = 50
    margin_bottom: int = 60
    observed_color: str = "#1f4e79"
    forecast_color: str = "#d62728"
    band_color: str = "#9e9e9e"
    band_opacity: float = 0.35
    font_family: str = "Helvetica, Arial, sans-serif"
    font_size: int = 12
    unit_label: str = "trillion Btu"
    y_ticks: int = 5
    max_x_ticks: int = 10

    def __post_init__(self):
        if self.width <= self.margin_left + self.margin_right or self.height <= self.margin_top + self.margin_bottom:
            raise ArgumentError(f"chart {self.width}x{self.height} leaves no plotting area")
        if self.y_ticks < 2 or self.max_x_ticks < 2:
            raise ArgumentError("charts need at least two ticks per axis")


def _fmt(value: float) -> str:
    text = f"{value:.2f}"
    return "0.00" if text == "-0.00" else text


def _tick_label(value: float, span: float) -> str:
    if span >= 100:
        return f"{value:,.0f}"
    if span >= 1:
        return f"{value:,.2f}"
    return f"{value:.4g}"


def _padded(low: float, high: float) -> Tuple[float, float]:
    if high > low:
        pad = 0.05 * (high - low)
        return low - pad, high + pad
    pad = max(abs(low) * 0.05, 1.0)
    return low - pad, high + pad


class _Frame:
    """Maps (year, value) to pixel coordinates"""

    def __init__(self, style: ChartStyle, x_range: Tuple[float, float], y_range: Tuple[float, float]):
        self.style = style
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        self.left = style.margin_left
        self.right = style.width - style.margin_right
        self.top = style.margin_top
        self.bottom = style.height - style.margin_bottom

    def x(self, year: float) -> float:
        return self.left + (year - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def y(self, value: float) -> float:
        return self.bottom - (value - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)

    def points(self, years: Sequence[float], values: Sequence[float]) -> str:
        return " ".join(f"{_fmt(self.x(a))},{_fmt(self.y(b))}" for a, b in zip(years, values))


def _text(x: float, y: float, content: str, style: ChartStyle, anchor: str = "middle", extra: str = "") -> str:
    return (f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" font-family="{html.escape(style.font_family)}" '
            f'font-size="{style.font_size}"{extra}>{html.escape(content)}</text>')


def _x_ticks(first: int, last: int, max_ticks: int) -> List[int]:
    step = max(1, math.ceil((last - first) / (max_ticks - 1)))
    return list(range(first, last + 1, step))


def render_forecast_svg(history: TimeSeries, forecast: Forecast, style: ChartStyle = ChartStyle(),
                        title: str = "") -> str:
    """SVG document for the observed history, the forecast path and its interval band"""
    if len(forecast) < 1:
        raise ArgumentError("cannot render an empty forecast")
    if forecast.start_year <= history.end_year:
        raise ArgumentError(
            f"forecast starts {forecast.start_year}, not after the history ending {history.end_year}"
        )

    first_year = history.start_year
    last_year = int(forecast.years[-1])
    x_range = (first_year, last_year) if last_year > first_year else (first_year - 1, last_year + 1)
    everything = np.concatenate([history.values, forecast.lower, forecast.upper, forecast.point])
    y_range = _padded(float(everything.min()), float(everything.max()))
    frame = _Frame(style, x_range, y_range)

    # the forecast line starts at the last observation so the two lines join
    forecast_years = [history.end_year, *forecast.years.tolist()]
    forecast_values = [float(history.values[-1]), *forecast.point.tolist()]
    band = frame.points(list(forecast.years) + list(forecast.years[::-1]),
                        list(forecast.upper) + list(forecast.lower[::-1]))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" height="{style.height}" '
        f'viewBox="0 0 {style.width} {style.height}">',
        f'<rect x="0" y="0" width="{style.width}" height="{style.height}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(_text(style.width / 2, style.margin_top / 2, title, style, extra=' font-weight="bold"'))

    # axes
    parts.append(f'<line x1="{frame.left}" y1="{frame.bottom}" x2="{frame.right}" y2="{frame.bottom}" stroke="#333333"/>')
    parts.append(f'<line x1="{frame.left}" y1="{frame.top}" x2="{frame.left}" y2="{frame.bottom}" stroke="#333333"/>')
    span = y_range[1] - y_range[0]
    for i in range(style.y_ticks):
        value = y_range[0] + span * i / (style.y_ticks - 1)
        y = frame.y(value)
        parts.append(f'<line x1="{frame.left - 5}" y1="{_fmt(y)}" x2="{frame.left}" y2="{_fmt(y)}" stroke="#333333"/>')
        parts.append(_text(frame.left - 8, y + 4, _tick_label(value, span), style, anchor="end"))
    for year in _x_ticks(first_year, last_year, style.max_x_ticks):
        x = frame.x(year)
        parts.append(f'<line x1="{_fmt(x)}" y1="{frame.bottom}" x2="{_fmt(x)}" y2="{frame.bottom + 5}" stroke="#333333"/>')
        parts.append(_text(x, frame.bottom + 18, str(year), style))
    parts.append(_text((frame.left + frame.right) / 2, style.height - 15, "year", style))
    y_mid = (frame.top + frame.bottom) / 2
    parts.append(_text(18, y_mid, style.unit_label, style, extra=f' transform="rotate(-90 18 {_fmt(y_mid)})"'))

    # data
    parts.append(f'<polygon points="{band}" fill="{style.band_color}" fill-opacity="{style.band_opacity}" '
                 f'stroke="none"/>')
    parts.append(f'<polyline points="{frame.points(history.years, history.values)}" fill="none" '
                 f'stroke="{style.observed_color}" stroke-width="2"/>')
    parts.append(f'<polyline points="{frame.points(forecast_years, forecast_values)}" fill="none" '
                 f'stroke="{style.forecast_color}" stroke-width="2"/>')

    # legend
    lx, ly = frame.left + 12, frame.top + 12
    entries = [
        ("line", style.observed_color, "observed"),
        ("line", style.forecast_color, "forecast"),
        ("rect", style.band_color, f"{forecast.level * 100:g}% interval"),
    ]
    for i, (kind, color, label) in enumerate(entries):
        y = ly + 18 * i
        if kind == "line":
            parts.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 24}" y2="{y}" stroke="{color}" stroke-width="2"/>')
        else:
            parts.append(f'<rect x="{lx}" y="{y - 6}" width="24" height="12" fill="{color}" '
                         f'fill-opacity="{style.band_opacity}"/>')
        parts.append(_text(lx + 30, y + 4, label, style, anchor="start"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
