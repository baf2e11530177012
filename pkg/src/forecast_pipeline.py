"""
End-to-end forecasting runs.

run_config: ingest -> (select_d, AICc grid, backtest when SPEC=auto, otherwise a
backtest of the pinned order) -> final fit on every year -> forecast -> reports.
run_suite: the nine regression/ARIMA models and four damped-trend renewable
models shipped in suite_configs/, run concurrently into one directory each.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from joblib import Parallel, delayed

from app_config import RunConfig, build_config
from arima_engine import ArimaSpec, fit_arima, forecast_arima
from errors import ConfigError, ForecastError, InputOutputError, MissingSeriesError, SelectionError
from exog_arima import ExogMatrix, auto_scenario, fit_arimax, forecast_arimax
from holt_damped import DEFAULT_PHI, fit_holt, forecast_holt
from model_selection import NO_EXOG, auto_arima, backtest_select, holdout_split, mse
from optimizer import OptimizerOptions
from report_writer import TOOL_NAME, TOOL_VERSION, ForecastReport, file_digest, plain
from seds_ingest import (
    Panel,
    UnitPolicy,
    build_panel,
    exclude_years,
    load_code_table,
    load_scenario_csv,
    load_side_file,
    parse_seds_csv,
)
from series_core import Forecast

logger = logging.getLogger(__name__)

SUITE_DIR = Path(__file__).resolve().parent / "suite_configs"
SUITE_SUMMARY_FILE = "suite.json"

# reference 95% interval for total consumption in 2031, trillion Btu
TOTAL_2031_REFERENCE = (6952.0, 9060.0)
TOTAL_MSN = "TETCB"
TOTAL_CHECK_YEAR = 2031


@dataclass(frozen=True, eq=False)
class PreparedRun:
    config: RunConfig
    panel: Panel
    data_files: Dict
    options: OptimizerOptions

    @property
    def exog_sets(self) -> Dict[str, Optional[ExogMatrix]]:
        if self.config.model != "arimax":
            return {NO_EXOG: None}
        return {",".join(self.config.exog): self.panel.exog}


def prepare(config: RunConfig) -> PreparedRun:
    """Read the data files named by the config and build the modeling panel"""
    table = load_code_table(extra=config.msn_table)
    records = parse_seds_csv(config.seds_csv, table)
    side_files = {name: load_side_file(path, name) for name, path in config.side_files.items()}
    policy = UnitPolicy(
        to_trillion_btu=True,
        inflation_adjust=config.inflation_adjust,
        deflator=side_files.get(config.deflator) if config.deflator else None,
    )
    panel = build_panel(records, config.response, list(config.exog), policy, side_files)
    if config.exclude_after is not None:
        panel = exclude_years(panel, config.exclude_after)
        logger.info(f"{config.name}: years after {config.exclude_after} excluded, "
                    f"panel now {panel.start_year}-{panel.end_year}")
    data_files = {
        "seds_csv": file_digest(config.seds_csv),
        "side_files": {name: file_digest(path) for name, path in sorted(config.side_files.items())},
        "msn_table": file_digest(config.msn_table) if config.msn_table else None,
    }
    return PreparedRun(config, panel, data_files, OptimizerOptions(seed=config.seed))


def _check_arima_family(config: RunConfig) -> None:
    if config.model == "holt":
        raise ConfigError(f"{config.name}: order selection applies to MODEL=arima or arimax, not holt")


def run_selection(config: RunConfig, run: Optional[PreparedRun] = None, max_workers: int = 1) -> Dict:
    """KPSS d, the AICc grid per exogenous set and the holdout backtest of the shortlisted orders"""
    _check_arima_family(config)
    run = run or prepare(config)
    d, grids, report = auto_arima(
        run.panel.response, run.exog_sets, config.holdout, config.max_d, config.p_max, config.q_max,
        options=run.options, exog_lag=config.exog_lag, max_workers=max_workers,
    )
    return {
        "label": config.name,
        "d": d,
        "grids": {label: [c.as_dict() for c in grid] for label, grid in grids.items()},
        "backtest": report.as_dict(),
    }


def _arima_backtest(run: PreparedRun) -> Tuple[Dict, Dict]:
    """Backtest table plus the chosen spec and exog set; auto selection or the pinned order"""
    config = run.config
    if config.arima_spec is None:
        selection = run_selection(config, run)
        winner = selection["backtest"]["winner"]
        return selection["backtest"], {"spec": winner["spec"], "d_selected": selection["d"]}
    try:
        report = backtest_select(run.panel.response, run.exog_sets, [config.arima_spec], config.holdout,
                                 run.options, config.exog_lag)
        backtest = report.as_dict()
    except SelectionError as e:
        # the full-sample fit can still succeed when the shorter training window does not
        logger.warning(f"{config.name}: backtest failed, {e.one_line()}")
        backtest = {"holdout_years": config.holdout, "candidates": [], "mse": {}, "failures": e.reasons,
                    "winner": {}}
    return backtest, {"spec": list(config.arima_spec.order)}


def _holt_backtest(run: PreparedRun) -> Dict:
    config = run.config
    train, test = holdout_split(run.panel.response, config.holdout)
    try:
        fit = fit_holt(train, config.phi_mode, run.options)
        score = mse(forecast_holt(fit, config.holdout).point, test.values)
    except ForecastError as e:
        logger.warning(f"{config.name}: damped-trend backtest failed, {e.one_line()}")
        return {"holdout_years": config.holdout, "mse": {}, "failures": {"holt": e.one_line()}, "winner": {}}
    return {"holdout_years": config.holdout, "mse": {"holt": score}, "failures": {},
            "winner": {"model": "holt", "mse": score}}


def _scenario(run: PreparedRun) -> Tuple[Optional[ExogMatrix], Dict]:
    config = run.config
    if config.model != "arimax":
        return None, {"source": "none"}
    if config.scenario is not None:
        return load_scenario_csv(config.scenario), {"source": "file", "file": file_digest(config.scenario)}
    logger.warning(f"{config.name}: no scenario file, exogenous paths forecast with a damped trend "
                   f"(phi={DEFAULT_PHI})")
    future = auto_scenario(run.panel.exog, config.horizon, run.options)
    return future, {
        "source": "auto",
        "method": f"damped trend, phi={DEFAULT_PHI}",
        "paths": {name: future.column(name).values for name in future.names},
    }


def fit_model(config: RunConfig, run: Optional[PreparedRun] = None):
    """Backtest, then the final fit on every panel year; returns (run, fit, model summary, backtest)"""
    run = run or prepare(config)
    series = run.panel.response
    if config.model == "holt":
        backtest = _holt_backtest(run)
        fit = fit_holt(series, config.phi_mode, run.options)
        model = {"family": "holt", **fit.summary(), "diagnostics": fit.diagnostics}
        return run, fit, model, backtest

    backtest, chosen = _arima_backtest(run)
    spec = config.arima_spec or ArimaSpec(*chosen["spec"])
    if config.model == "arimax":
        fit = fit_arimax(series, run.panel.exog, spec, config.exog_lag, run.options)
        model = {"family": "arimax", **fit.summary(), "diagnostics": fit.arima.diagnostics}
    else:
        fit = fit_arima(series, spec, run.options)
        model = {"family": "arima", **fit.summary(), "diagnostics": fit.diagnostics}
    if "d_selected" in chosen:
        model["d_selected"] = chosen["d_selected"]
    logger.info(f"{config.name}: final {model['family']}{spec.label} fit on {series.start_year}-{series.end_year}")
    return run, fit, model, backtest


def _forecast(run: PreparedRun, fit) -> Tuple[Forecast, Dict]:
    config = run.config
    if config.model == "holt":
        return forecast_holt(fit, config.horizon, config.level), {"source": "none"}
    if config.model == "arima":
        return forecast_arima(fit, config.horizon, config.level), {"source": "none"}
    future, scenario = _scenario(run)
    return forecast_arimax(fit, future, config.horizon, config.level), scenario


def _total_consumption_check(config: RunConfig, forecast: Forecast, model: Dict) -> Dict:
    """Soft comparison of the 2031 total-consumption forecast against the reference interval"""
    if config.response.strip() != TOTAL_MSN or TOTAL_CHECK_YEAR not in forecast.years:
        return {}
    point = float(forecast.point[list(forecast.years).index(TOTAL_CHECK_YEAR)])
    low, high = TOTAL_2031_REFERENCE
    inside = low <= point <= high
    if not inside:
        coefficients = {key: model.get(key) for key in ("intercept", "ar", "ma", "exog")}
        logger.warning(f"{config.name}: {TOTAL_CHECK_YEAR} total consumption forecast {point:.3f} lies outside "
                       f"[{low:g}, {high:g}] trillion Btu; coefficients {plain(coefficients)}")
    return {"total_2031": {"point": point, "reference_interval": [low, high], "inside": inside}}


def run_config(config: RunConfig, write: bool = True) -> ForecastReport:
    """Full run for one configuration; writes report.json, forecast.csv and forecast.svg when `write`"""
    run, fit, model, backtest = fit_model(config)
    forecast, scenario = _forecast(run, fit)
    provenance = {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "config": config.source.name if config.source else None,
        "data_files": run.data_files,
        "scenario": scenario,
        "exclusions": {"excluded_after": run.panel.metadata.get("excluded_after")},
        "seed": config.seed,
        "panel": {
            "response": config.response,
            "exog": list(config.exog),
            "first_year": run.panel.start_year,
            "last_year": run.panel.end_year,
            "unit": run.panel.metadata.get("unit"),
            "conversions": run.panel.metadata.get("conversions", {}),
            "inflation_adjusted": run.panel.metadata.get("inflation_adjusted", False),
        },
    }
    report = ForecastReport(
        label=config.name,
        model=model,
        backtest=backtest,
        forecast=forecast,
        history=run.panel.response.with_values(run.panel.response.values, label=config.name),
        provenance=provenance,
        checks=_total_consumption_check(config, forecast, model),
    )
    if write:
        report.write(config.out)
    return report


@dataclass
class SuiteResult:
    reports: Dict[str, ForecastReport] = field(default_factory=dict)
    skipped: Dict[str, str] = field(default_factory=dict)

    @property
    def status(self) -> str:
        if not self.skipped:
            return "complete"
        return "partial" if self.reports else "failed"

    def summary(self) -> Dict:
        return {
            "status": self.status,
            "completed": sorted(self.reports),
            "skipped": dict(sorted(self.skipped.items())),
        }


def suite_configs(config_dir: Path = SUITE_DIR) -> List[Path]:
    paths = sorted(Path(config_dir).glob("*.env"))
    if not paths:
        raise InputOutputError(f"no suite configurations (*.env) in {config_dir}")
    return paths


def _suite_config(path: Path, data_dir: Path, out_dir: Path, seed: int) -> RunConfig:
    config = build_config(path, overrides={"out": out_dir / path.stem, "seed": seed}, base_dir=data_dir)
    if not Path(config.seds_csv).is_file():
        raise InputOutputError(f"SEDS file {Path(config.seds_csv).name} not found in {data_dir}")
    for name, side_path in config.side_files.items():
        if not Path(side_path).is_file():
            raise MissingSeriesError(f"model {path.stem} skipped: side file {name!r} "
                                     f"({Path(side_path).name}) not found in {data_dir}")
    return config


def run_suite(data_dir, out_dir, max_workers: int = 4, seed: int = 0,
              config_dir: Path = SUITE_DIR) -> SuiteResult:
    """Run every suite configuration against data_dir; failures skip that model only"""
    data_dir, out_dir = Path(data_dir), Path(out_dir)
    if not data_dir.is_dir():
        raise InputOutputError(f"data directory {data_dir} does not exist")
    paths = suite_configs(config_dir)

    def run_one(path: Path):
        try:
            config = _suite_config(path, data_dir, out_dir, seed)
            return path.stem, run_config(config), None
        except ForecastError as e:
            logger.warning(f"suite model {path.stem} skipped: {e.one_line()}")
            return path.stem, None, e.one_line()

    result = SuiteResult()
    outcomes = Parallel(n_jobs=max(1, max_workers), prefer="threads")(delayed(run_one)(path) for path in paths)
    for name, report, failure in outcomes:
        if report is not None:
            result.reports[name] = report
        else:
            result.skipped[name] = failure

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / SUITE_SUMMARY_FILE).write_text(
            json.dumps(result.summary(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as e:
        raise InputOutputError(f"cannot write suite summary to {out_dir}: {e.strerror or e}")
    logger.info(f"suite finished: {len(result.reports)} completed, {len(result.skipped)} skipped")
    return result
