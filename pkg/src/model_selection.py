"""
Order selection and holdout backtesting.

d is chosen by the KPSS level-stationarity test, (p, q) by an AICc grid, and the
final candidate (order plus exogenous set) by the lowest holdout MSE.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from arima_engine import ArimaSpec, fit_arima, forecast_arima
from errors import ArgumentError, EmptyGridError, ForecastError, InsufficientDataError, SelectionError
from exog_arima import ExogMatrix, fit_arimax, forecast_arimax
from optimizer import OptimizerOptions
from series_core import TimeSeries, difference

logger = logging.getLogger(__name__)

KPSS_CRITICAL_5PCT = 0.463
MIN_KPSS_LENGTH = 10
MIN_TRAIN_AFTER_HOLDOUT = 15
NO_EXOG = "none"


@dataclass(frozen=True)
class CandidateResult:
    spec: ArimaSpec
    aicc: float
    fit_ok: bool
    failure_reason: Optional[str] = None
    exog_label: str = NO_EXOG
    n_params: int = 0

    def as_dict(self) -> Dict:
        return {
            "spec": list(self.spec.order),
            "exog": self.exog_label,
            "aicc": self.aicc if math.isfinite(self.aicc) else None,
            "fit_ok": self.fit_ok,
            "failure_reason": self.failure_reason,
        }


@dataclass(frozen=True)
class BacktestWinner:
    spec: ArimaSpec
    exog_label: str
    mse: float


@dataclass
class BacktestReport:
    candidates: List[CandidateResult]
    holdout_years: int
    per_candidate_mse: Dict[str, float]
    winner: BacktestWinner
    failures: Dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> Dict:
        return {
            "holdout_years": self.holdout_years,
            "candidates": [c.as_dict() for c in self.candidates],
            "mse": dict(self.per_candidate_mse),
            "failures": dict(self.failures),
            "winner": {"spec": list(self.winner.spec.order), "exog": self.winner.exog_label,
                       "mse": self.winner.mse},
        }


def candidate_key(spec: ArimaSpec, exog_label: str = NO_EXOG) -> str:
    return spec.label if exog_label == NO_EXOG else f"{spec.label}+{exog_label}"


def kpss_statistic(series: TimeSeries) -> float:
    """Level-stationarity KPSS statistic with a Bartlett long-run variance"""
    n = len(series)
    if n < MIN_KPSS_LENGTH:
        raise InsufficientDataError(f"KPSS needs {MIN_KPSS_LENGTH} observations, got {n}")
    resid = series.values - series.values.mean()
    if np.ptp(series.values) == 0.0:
        return 0.0
    partial = np.cumsum(resid)
    lags = int(math.floor(4.0 * (n / 100.0) ** 0.25))
    long_run = float(np.dot(resid, resid))
    for s in range(1, lags + 1):
        long_run += 2.0 * (1.0 - s / (lags + 1.0)) * float(np.dot(resid[s:], resid[:-s]))
    long_run /= n
    return float(np.dot(partial, partial) / (n * n * long_run))


def select_d(series: TimeSeries, max_d: int = 2) -> int:
    """Smallest d whose differenced series passes KPSS at 5%"""
    if not 0 <= max_d <= 2:
        raise ArgumentError(f"max_d must lie in [0, 2], got {max_d}")
    if len(series) < MIN_KPSS_LENGTH + max_d:
        raise InsufficientDataError(f"select_d needs {MIN_KPSS_LENGTH + max_d} observations, got {len(series)}")
    for d in range(max_d + 1):
        stat = kpss_statistic(difference(series, d))
        logger.debug(f"KPSS on {series.label} differenced {d}x: {stat:.4f}")
        if stat <= KPSS_CRITICAL_5PCT:
            return d
    return max_d


def _run_all(task: Callable, items: Sequence, max_workers: int) -> List:
    # results come back in input order
    return Parallel(n_jobs=max(1, max_workers or 1), prefer="threads")(delayed(task)(item) for item in items)


def _fit(series: TimeSeries, exog: Optional[ExogMatrix], spec: ArimaSpec, exog_lag: int,
         options: OptimizerOptions):
    if exog is not None and exog.columns:
        return fit_arimax(series, exog, spec, exog_lag, options)
    return fit_arima(series, spec, options)


def _error_model(fit):
    return fit.arima if hasattr(fit, "arima") else fit


def grid_search_aicc(series: TimeSeries, exog: Optional[ExogMatrix], d: int, p_max: int = 5, q_max: int = 5,
                     options: OptimizerOptions = OptimizerOptions(), exog_lag: int = 0,
                     exog_label: str = NO_EXOG, max_workers: int = 1) -> List[CandidateResult]:
    """Fit every (p, d, q) with p <= p_max, q <= q_max; failures are recorded, output sorted by AICc"""
    if p_max < 0 or q_max < 0:
        raise ArgumentError(f"grid bounds must be non-negative, got p_max={p_max}, q_max={q_max}")
    specs = [ArimaSpec(p, d, q) for p in range(p_max + 1) for q in range(q_max + 1)]

    def evaluate(spec: ArimaSpec) -> CandidateResult:
        try:
            fit = _error_model(_fit(series, exog, spec, exog_lag, options))
        except ForecastError as e:
            logger.debug(f"grid {candidate_key(spec, exog_label)} failed: {e.one_line()}")
            return CandidateResult(spec, math.inf, False, e.one_line(), exog_label)
        return CandidateResult(spec, fit.aicc, True, None, exog_label, fit.n_params)

    results = _run_all(evaluate, specs, max_workers)
    if not any(r.fit_ok for r in results):
        raise EmptyGridError(f"every grid candidate failed for {series.label}",
                             reasons={candidate_key(r.spec): r.failure_reason for r in results})
    results.sort(key=lambda r: (r.aicc, r.n_params, r.spec.order))
    best = results[0]
    logger.info(f"AICc grid on {series.label} (d={d}, exog={exog_label}): best {best.spec.label} "
                f"AICc={best.aicc:.3f}")
    return results


def holdout_split(series: TimeSeries, holdout: int) -> Tuple[TimeSeries, TimeSeries]:
    if not 1 <= holdout <= len(series) - MIN_TRAIN_AFTER_HOLDOUT:
        raise ArgumentError(
            f"holdout must lie in [1, {len(series) - MIN_TRAIN_AFTER_HOLDOUT}] for a series of "
            f"length {len(series)}, got {holdout}"
        )
    return series.head(len(series) - holdout), series.tail(holdout)


def mse(forecast_points: Sequence[float], actual: Sequence[float]) -> float:
    forecast_points = np.asarray(forecast_points, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if forecast_points.size != actual.size or actual.size < 1:
        raise ArgumentError(f"mse needs equal non-empty lengths, got {forecast_points.size} and {actual.size}")
    return float(np.mean((forecast_points - actual) ** 2))


def backtest_select(series: TimeSeries, exog_sets: Dict[str, Optional[ExogMatrix]],
                    candidate_specs: Sequence[ArimaSpec], holdout: int,
                    options: OptimizerOptions = OptimizerOptions(), exog_lag: int = 0,
                    max_workers: int = 1) -> BacktestReport:
    """
    Fit every (spec, exog set) on the training part, forecast the held-out years
    (exogenous values for those years are the actual held-out data) and keep the
    lowest MSE. Ties go to fewer parameters, then lower AICc, then the smaller order.
    """
    if not candidate_specs:
        raise ArgumentError("backtest needs at least one candidate spec")
    if not exog_sets:
        exog_sets = {NO_EXOG: None}
    train, test = holdout_split(series, holdout)
    combos = [(spec, label, exog) for label, exog in exog_sets.items() for spec in candidate_specs]

    def evaluate(combo):
        spec, label, exog = combo
        try:
            fit = _fit(train, exog, spec, exog_lag, options)
            if exog is not None and exog.columns:
                forecast = forecast_arimax(fit, exog, holdout)
            else:
                forecast = forecast_arima(fit, holdout)
            model = _error_model(fit)
            return spec, label, mse(forecast.point, test.values), model.aicc, model.n_params, None
        except ForecastError as e:
            return spec, label, math.inf, math.inf, 0, e.one_line()

    outcomes = _run_all(evaluate, combos, max_workers)

    per_mse = {}
    failures = {}
    ranked = []
    candidates = []
    for spec, label, score, aicc_value, n_params, failure in outcomes:
        key = candidate_key(spec, label)
        candidates.append(CandidateResult(spec, aicc_value, failure is None, failure, label, n_params))
        if failure is not None:
            failures[key] = failure
            logger.debug(f"backtest {key} failed: {failure}")
            continue
        per_mse[key] = score
        ranked.append(((score, n_params, aicc_value, spec.order), spec, label, score))
        logger.debug(f"backtest {key}: mse={score:.6g} aicc={aicc_value:.4f}")

    if not ranked:
        raise SelectionError(f"every backtest combination failed for {series.label}", reasons=failures)
    ranked.sort(key=lambda item: item[0])
    _, spec, label, score = ranked[0]
    candidates.sort(key=lambda c: (c.aicc, c.n_params, c.spec.order, c.exog_label))
    logger.info(f"backtest on {series.label} ({holdout} holdout years): winner "
                f"{candidate_key(spec, label)} mse={score:.6g}")
    return BacktestReport(candidates, holdout, per_mse, BacktestWinner(spec, label, score), failures)


def auto_arima(series: TimeSeries, exog_sets: Dict[str, Optional[ExogMatrix]], holdout: int,
               max_d: int = 2, p_max: int = 5, q_max: int = 5, top_k: int = 3,
               options: OptimizerOptions = OptimizerOptions(), exog_lag: int = 0,
               max_workers: int = 1) -> Tuple[int, Dict[str, List[CandidateResult]], BacktestReport]:
    """select_d, then an AICc grid on the training years per exog set, then a backtest of the top candidates"""
    if not exog_sets:
        exog_sets = {NO_EXOG: None}
    train, _ = holdout_split(series, holdout)
    d = select_d(train, max_d)
    logger.info(f"KPSS selected d={d} for {series.label}")
    grids = {}
    shortlist = []
    for label, exog in exog_sets.items():
        try:
            grid = grid_search_aicc(train, exog, d, p_max, q_max, options, exog_lag, label, max_workers)
        except EmptyGridError as e:
            logger.warning(f"{e.one_line()} (exog set {label})")
            continue
        grids[label] = grid
        for candidate in [c for c in grid if c.fit_ok][:top_k]:
            if candidate.spec not in shortlist:
                shortlist.append(candidate.spec)
    if not shortlist:
        raise EmptyGridError(f"no exogenous set produced a usable grid for {series.label}")
    report = backtest_select(series, exog_sets, shortlist, holdout, options, exog_lag, max_workers)
    return d, grids, report
