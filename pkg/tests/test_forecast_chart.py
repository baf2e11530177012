import xml.etree.ElementTree as ET

import numpy as np
import pytest

from errors import ArgumentError
from forecast_chart import ChartStyle, render_forecast_svg
from series_core import Forecast, TimeSeries

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def history():
    return TimeSeries(2017, [6.9, 7.1, 7.0, 6.4, 6.6], label="TETCB")


@pytest.fixture
def forecast():
    return Forecast(2022, [6.7, 6.8, 6.85], [6.2, 6.0, 5.9], [7.2, 7.6, 7.8], 0.95)


def test_structure(history, forecast):
    svg = render_forecast_svg(history, forecast, title="total consumption")
    root = ET.fromstring(svg)
    assert root.tag == f"{SVG}svg"
    assert len(root.findall(f"{SVG}polyline")) == 2
    assert len(root.findall(f"{SVG}polygon")) == 1
    assert svg.count("<polyline") == 2
    assert svg.count("<polygon") == 1


def test_lines_and_band_point_counts(history, forecast):
    root = ET.fromstring(render_forecast_svg(history, forecast))
    observed, predicted = root.findall(f"{SVG}polyline")
    assert len(observed.get("points").split()) == 5
    # the forecast line starts at the last observation
    assert len(predicted.get("points").split()) == 4
    assert predicted.get("points").split()[0] == observed.get("points").split()[-1]
    assert len(root.find(f"{SVG}polygon").get("points").split()) == 6


def test_same_inputs_same_bytes(history, forecast):
    assert render_forecast_svg(history, forecast) == render_forecast_svg(history, forecast)


def test_zero_width_interval_is_valid(history):
    flat = Forecast(2022, [7.0, 7.0], [7.0, 7.0], [7.0, 7.0], 0.95)
    root = ET.fromstring(render_forecast_svg(history, flat))
    assert len(root.findall(f"{SVG}polygon")) == 1


def test_constant_values_still_render():
    history = TimeSeries(2000, [3.0] * 4)
    flat = Forecast(2004, [3.0], [3.0], [3.0], 0.9)
    svg = render_forecast_svg(history, flat)
    assert "nan" not in svg and "inf" not in svg
    assert "90% interval" in svg


def test_text_is_escaped(history, forecast):
    svg = render_forecast_svg(history, forecast, ChartStyle(unit_label="<units>"), title="A & B")
    assert "A &amp; B" in svg
    assert "&lt;units&gt;" in svg
    ET.fromstring(svg)


def test_coordinates_stay_in_the_canvas(history, forecast):
    style = ChartStyle(width=640, height=360)
    root = ET.fromstring(render_forecast_svg(history, forecast, style))
    for element in root.findall(f"{SVG}polyline") + root.findall(f"{SVG}polygon"):
        pairs = np.array([[float(v) for v in p.split(",")] for p in element.get("points").split()])
        assert np.all((pairs[:, 0] >= 0) & (pairs[:, 0] <= style.width))
        assert np.all((pairs[:, 1] >= 0) & (pairs[:, 1] <= style.height))


def test_forecast_must_follow_history(history):
    overlapping = Forecast(2021, [6.7], [6.2], [7.2], 0.95)
    with pytest.raises(ArgumentError):
        render_forecast_svg(history, overlapping)


def test_style_needs_a_plot_area():
    with pytest.raises(ArgumentError):
        ChartStyle(width=100)
