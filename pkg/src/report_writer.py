"""
Forecast report: the fitted model, the backtest table, the forecast rows and
the provenance of every input, written as report.json, forecast.csv and
forecast.svg into one output directory.
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from errors import ArgumentError, FormatError, InputOutputError
from forecast_chart import ChartStyle, render_forecast_svg
from series_core import Forecast, TimeSeries

logger = logging.getLogger(__name__)

TOOL_NAME = "seds-forecast"
TOOL_VERSION = "1.0.0"
SCHEMA_PATH = Path(__file__).resolve().parent / "report_schema.json"
REPORT_FILE = "report.json"
FORECAST_FILE = "forecast.csv"
CHART_FILE = "forecast.svg"
FORECAST_COLUMNS = ["year", "point", "lower", "upper"]
PROVENANCE_KEYS = ("tool", "version", "data_files", "scenario", "exclusions", "seed")


def plain(value: Any) -> Any:
    """Recursively turn numpy scalars/arrays and paths into JSON-ready values; non-finite floats become null"""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return value.as_posix()
    return value


def file_digest(path) -> Dict[str, str]:
    """Name and sha256 of an input file, for the provenance block"""
    path = Path(path)
    try:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
    except OSError as e:
        raise InputOutputError(f"cannot read {path}: {e.strerror or e}")
    return {"name": path.name, "sha256": digest}


@dataclass(frozen=True, eq=False)
class ForecastReport:
    label: str
    model: Dict
    backtest: Dict
    forecast: Forecast
    history: TimeSeries
    provenance: Dict
    checks: Dict = field(default_factory=dict)

    def __post_init__(self):
        bad = np.flatnonzero((self.forecast.lower > self.forecast.point) | (self.forecast.point > self.forecast.upper))
        if bad.size:
            year = int(self.forecast.years[bad[0]])
            raise ArgumentError(f"forecast interval does not contain the point forecast in {year}")
        missing = [key for key in PROVENANCE_KEYS if key not in self.provenance]
        if missing:
            raise ArgumentError(f"provenance block is missing {missing}")

    def forecast_frame(self) -> pd.DataFrame:
        return self.forecast.to_frame()[FORECAST_COLUMNS]

    def as_dict(self) -> Dict:
        return plain({
            "label": self.label,
            "model": self.model,
            "backtest": self.backtest,
            "forecast": {
                "level": self.forecast.level,
                "rows": [
                    {"year": int(year), "point": point, "lower": lower, "upper": upper}
                    for year, point, lower, upper in zip(self.forecast.years, self.forecast.point,
                                                         self.forecast.lower, self.forecast.upper)
                ],
            },
            "history": {"start_year": self.history.start_year, "values": self.history.values},
            "provenance": self.provenance,
            "checks": self.checks,
        })

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def forecast_csv(self) -> str:
        return self.forecast_frame().to_csv(index=False, float_format="%.6f", lineterminator="\n")

    def write(self, out_dir, style: ChartStyle = ChartStyle()) -> Dict[str, Path]:
        """Write report.json, forecast.csv and forecast.svg; returns their paths"""
        out_dir = Path(out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            paths = {
                "report": out_dir / REPORT_FILE,
                "forecast": out_dir / FORECAST_FILE,
                "chart": out_dir / CHART_FILE,
            }
            paths["report"].write_text(self.to_json(), encoding="utf-8")
            paths["forecast"].write_text(self.forecast_csv(), encoding="utf-8")
            title = f"{self.label} forecast"
            paths["chart"].write_text(render_forecast_svg(self.history, self.forecast, style, title),
                                      encoding="utf-8")
        except OSError as e:
            raise InputOutputError(f"cannot write reports to {out_dir}: {e.strerror or e}")
        logger.info(f"wrote {self.label} reports to {out_dir}")
        return paths


def load_report(path) -> ForecastReport:
    """Read a report.json back (used by the render command)"""
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_FILE
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise InputOutputError(f"cannot read report {path}: {e.strerror or e}")
    except json.JSONDecodeError as e:
        raise FormatError(f"{path} is not valid JSON: {e.msg}", line=e.lineno)
    try:
        rows = data["forecast"]["rows"]
        forecast = Forecast(
            rows[0]["year"],
            [r["point"] for r in rows],
            [r["lower"] for r in rows],
            [r["upper"] for r in rows],
            data["forecast"]["level"],
        )
        history = TimeSeries(data["history"]["start_year"], data["history"]["values"], label=data["label"])
        return ForecastReport(data["label"], data["model"], data["backtest"], forecast, history,
                              data["provenance"], data.get("checks", {}))
    except (KeyError, IndexError, TypeError) as e:
        raise FormatError(f"{path} is not a forecast report (missing {e})")


def load_schema() -> Dict:
    return json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))


def schema_problems(document: Dict, schema: Optional[Dict] = None) -> list:
    """
    Structural check of a report against the shipped JSON schema: required keys
    and declared JSON types, recursively through objects and array items.
    """
    schema = schema if schema is not None else load_schema()
    problems = []
    types = {"object": dict, "array": list, "string": str, "integer": int, "number": (int, float),
             "boolean": bool, "null": type(None)}

    def check(value, node, where):
        declared = node.get("type")
        if declared is not None:
            allowed = declared if isinstance(declared, list) else [declared]
            ok = any(isinstance(value, types[t]) and not (t in ("integer", "number") and isinstance(value, bool))
                     for t in allowed)
            if not ok:
                problems.append(f"{where}: expected {declared}, got {type(value).__name__}")
                return
        if "enum" in node and value not in node["enum"]:
            problems.append(f"{where}: {value!r} not one of {node['enum']}")
        if isinstance(value, dict):
            for key in node.get("required", []):
                if key not in value:
                    problems.append(f"{where}: missing {key!r}")
            for key, child in node.get("properties", {}).items():
                if key in value:
                    check(value[key], child, f"{where}.{key}")
        if isinstance(value, list) and "items" in node:
            for i, item in enumerate(value):
                check(item, node["items"], f"{where}[{i}]")

    check(document, schema, "$")
    return problems
