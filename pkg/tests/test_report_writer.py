import json

import numpy as np
import pytest

from errors import ArgumentError, FormatError, InputOutputError
from report_writer import (
    CHART_FILE,
    FORECAST_FILE,
    REPORT_FILE,
    ForecastReport,
    file_digest,
    load_report,
    plain,
    schema_problems,
)
from series_core import Forecast, TimeSeries

PROVENANCE = {
    "tool": "seds-forecast",
    "version": "1.0.0",
    "data_files": {"seds": {"name": "seds.csv", "sha256": "0" * 64}},
    "scenario": {"source": "none"},
    "exclusions": {"excluded_after": None},
    "seed": 0,
}


def _report(lower=(6.0, 5.9)):
    forecast = Forecast(2022, [6.7, 6.8], list(lower), [7.4, 7.7], 0.95)
    model = {"family": "arima", "spec": [1, 1, 0], "intercept": 0.0, "ar": [0.3], "ma": [], "sigma2": 0.04,
             "aicc": float("inf"), "diagnostics": {"converged": True}}
    backtest = {"holdout_years": 10, "mse": {"(1,1,0)": 0.02}, "winner": {"spec": [1, 1, 0], "mse": 0.02}}
    return ForecastReport("total", model, backtest, forecast, TimeSeries(2017, [6.9, 7.1, 7.0, 6.4, 6.6]),
                          dict(PROVENANCE), {"total_2031": None})


def test_plain_values():
    document = plain({"a": np.float64(1.5), "b": np.arange(2), "c": (np.bool_(True), float("nan"))})
    assert document == {"a": 1.5, "b": [0, 1], "c": [True, None]}


def test_report_matches_schema():
    document = _report().as_dict()
    assert schema_problems(document) == []
    assert document["model"]["aicc"] is None


def test_schema_problems_are_reported():
    document = _report().as_dict()
    del document["provenance"]["seed"]
    document["model"]["family"] = "neural"
    document["forecast"]["rows"][0]["year"] = "2022"
    problems = schema_problems(document)
    assert any("seed" in p for p in problems)
    assert any("neural" in p for p in problems)
    assert any("rows[0].year" in p for p in problems)


def test_interval_must_contain_the_point():
    with pytest.raises(ArgumentError):
        _report(lower=(6.0, 6.9))


def test_provenance_is_required():
    report = _report()
    with pytest.raises(ArgumentError):
        ForecastReport(report.label, report.model, report.backtest, report.forecast, report.history, {})


def test_json_is_canonical():
    text = _report().to_json()
    assert text == _report().to_json()
    assert text.endswith("\n")
    assert list(json.loads(text)) == sorted(json.loads(text))
    assert "NaN" not in text and "Infinity" not in text


def test_forecast_csv():
    assert _report().forecast_csv().splitlines() == [
        "year,point,lower,upper",
        "2022,6.700000,6.000000,7.400000",
        "2023,6.800000,5.900000,7.700000",
    ]


def test_write_and_load(tmp_path):
    paths = _report().write(tmp_path / "out")
    assert {p.name for p in paths.values()} == {REPORT_FILE, FORECAST_FILE, CHART_FILE}
    again = load_report(tmp_path / "out")
    assert again.to_json() == _report().to_json()
    assert load_report(paths["report"]).label == "total"


def test_load_errors(tmp_path):
    with pytest.raises(InputOutputError):
        load_report(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(FormatError):
        load_report(broken)
    partial = tmp_path / "partial.json"
    partial.write_text('{"label": "x"}')
    with pytest.raises(FormatError):
        load_report(partial)


def test_file_digest(tmp_path):
    path = tmp_path / "data.csv"
    path.write_bytes(b"abc")
    assert file_digest(path) == {
        "name": "data.csv",
        "sha256": "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad",
    }
