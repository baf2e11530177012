"""
Regression with ARIMA errors (ARIMAX).

    y_t = x_{t-L}' gamma + eta_t,    eta_t ~ ARIMA(p, d, q)

The response and every exogenous column are differenced d times and gamma is
estimated jointly with the ARMA coefficients by CSS. L (exog_lag) defaults to 0,
the contemporaneous form; a positive L applies the same lag to every column.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from arima_engine import ArimaFit, ArimaSpec, _tail_length, fit_regression_arma, forecast_arima
from errors import ArgumentError, CollinearityError, InsufficientDataError, ScenarioIncompleteError
from holt_damped import DEFAULT_PHI, fit_holt, forecast_holt
from optimizer import OptimizerOptions
from series_core import Forecast, TimeSeries, align_panel, difference

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class ExogMatrix:
    """Named exogenous columns sharing one year range"""

    columns: Tuple[TimeSeries, ...]

    def __post_init__(self):
        columns = tuple(self.columns)
        object.__setattr__(self, "columns", columns)
        names = [c.label for c in columns]
        if len(set(names)) != len(names) or any(not name for name in names):
            raise ArgumentError(f"exogenous columns need unique non-empty labels, got {names}")
        spans = {(c.start_year, len(c)) for c in columns}
        if len(spans) > 1:
            raise ArgumentError(f"exogenous columns are not aligned: {[repr(c) for c in columns]}")

    @classmethod
    def from_mapping(cls, mapping: Dict[str, TimeSeries]) -> "ExogMatrix":
        return cls(tuple(series.with_values(series.values, label=name) for name, series in mapping.items()))

    @property
    def names(self) -> List[str]:
        return [c.label for c in self.columns]

    @property
    def start_year(self) -> int:
        return self.columns[0].start_year

    @property
    def end_year(self) -> int:
        return self.columns[0].end_year

    def __len__(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    def column(self, name: str) -> TimeSeries:
        for c in self.columns:
            if c.label == name:
                return c
        raise KeyError(name)

    def matrix(self) -> np.ndarray:
        if not self.columns:
            return np.zeros((0, 0))
        return np.column_stack([c.values for c in self.columns])

    def slice_years(self, first: int, last: int) -> "ExogMatrix":
        return ExogMatrix(tuple(c.slice_years(first, last) for c in self.columns))


@dataclass(frozen=True, eq=False)
class ArimaxFit:
    arima: ArimaFit
    gamma: np.ndarray
    exog_names: Tuple[str, ...]
    exog_lag: int = 0
    exog_tail: ExogMatrix = None
    fitted: np.ndarray = None
    diagnostics: Dict = field(default_factory=dict)

    def summary(self) -> Dict:
        summary = self.arima.summary()
        summary["exog"] = {name: float(g) for name, g in zip(self.exog_names, self.gamma)}
        summary["exog_lag"] = int(self.exog_lag)
        return summary


def check_exog_rank(matrix: np.ndarray, names: Sequence[str], d: int = 0) -> None:
    """Reject constant columns and exact collinearity (rank of the correlation Gram matrix)

    `matrix` holds the columns after `d` differences, so with d >= 1 a column that
    is a straight line (d = 1) or a quadratic (d = 2) counts as constant.
    """
    if matrix.shape[1] == 0:
        return
    for j, name in enumerate(names):
        if np.ptp(matrix[:, j]) == 0.0:
            if d:
                raise CollinearityError(
                    f"exogenous column {name!r} is constant after differencing (d={d}) over the "
                    f"estimation sample; it is collinear with the differenced constant"
                )
            raise CollinearityError(f"exogenous column {name!r} is constant over the estimation sample")
    centered = matrix - matrix.mean(axis=0)
    standardized = centered / np.sqrt((centered ** 2).sum(axis=0))
    gram = standardized.T @ standardized
    rank = np.linalg.matrix_rank(gram, tol=RANK_TOLERANCE)
    if rank < matrix.shape[1]:
        raise CollinearityError(
            f"exogenous columns {list(names)} are collinear (Gram rank {rank} < {matrix.shape[1]})"
        )


def _lagged_sample(series: TimeSeries, exog: ExogMatrix, exog_lag: int) -> Tuple[TimeSeries, np.ndarray]:
    aligned = align_panel([series, *exog.columns])
    response = aligned[0]
    X = np.column_stack([c.values for c in aligned[1:]]) if exog.columns else np.zeros((len(response), 0))
    if exog_lag >= len(response):
        raise InsufficientDataError(f"exog lag {exog_lag} leaves no observations")
    y = response.slice_years(response.start_year + exog_lag, response.end_year)
    return y, X[:len(X) - exog_lag]


def fit_arimax(series: TimeSeries, exog: ExogMatrix, spec: ArimaSpec, exog_lag: int = 0,
               options: OptimizerOptions = OptimizerOptions()) -> ArimaxFit:
    """Joint CSS fit of the regression coefficients and the ARIMA error model"""
    if exog_lag < 0:
        raise ArgumentError(f"exog lag must be non-negative, got {exog_lag}")
    y, X = _lagged_sample(series, exog, exog_lag)
    if len(y) < spec.min_length():
        raise InsufficientDataError(
            f"{series.label or 'series'} has {len(y)} usable observations after alignment and lag "
            f"{exog_lag}, {spec.label} needs {spec.min_length()}"
        )
    w = difference(y, spec.d)
    Xd = np.diff(X, n=spec.d, axis=0)
    check_exog_rank(Xd, exog.names, spec.d)

    label = f"{series.label} ARIMAX{spec.label}"
    core = fit_regression_arma(w.values, Xd, spec, options, label=label)
    eta = y.with_values(y.values - X @ core.gamma if X.shape[1] else y.values, label=f"{series.label} errors")
    arima = ArimaFit(
        spec=spec,
        intercept=core.intercept,
        ar_coeffs=core.ar,
        ma_coeffs=core.ma,
        sigma2=core.sigma2,
        residuals=core.residuals,
        loglik=core.loglik,
        n_effective=int(core.residuals.size),
        train_tail=eta.tail(_tail_length(spec)),
        n_regressors=X.shape[1],
        diagnostics=core.diagnostics,
    )
    exog_tail = None
    if exog_lag and exog.columns:
        last = y.end_year
        exog_tail = exog.slice_years(last - exog_lag + 1, last)
    logger.debug(f"{label}: gamma={np.round(core.gamma, 6).tolist()} loglik={core.loglik:.6f}")
    fitted = w.values[spec.p:] - core.residuals
    return ArimaxFit(arima, core.gamma, tuple(exog.names), exog_lag, exog_tail, fitted,
                     {"first_year": y.start_year, "last_year": y.end_year})


def _future_rows(fit: ArimaxFit, future_exog: ExogMatrix, horizon: int) -> np.ndarray:
    last = fit.arima.train_tail.end_year
    first_needed = last + 1 - fit.exog_lag
    last_needed = last + horizon - fit.exog_lag
    names = list(fit.exog_names)
    if not names:
        return np.zeros((horizon, 0))
    available = set(future_exog.names) if future_exog is not None and future_exog.columns else set()
    missing = [n for n in names if n not in available]
    if missing:
        raise ScenarioIncompleteError(f"future exogenous paths missing columns {missing}")

    rows = []
    for year in range(first_needed, last_needed + 1):
        if year <= last:
            source = fit.exog_tail
        else:
            source = future_exog
        if source is None or not source.start_year <= year <= source.end_year:
            have = "no years" if future_exog is None else f"{future_exog.start_year}-{future_exog.end_year}"
            raise ScenarioIncompleteError(
                f"future exogenous paths cover {have}, forecast needs {max(first_needed, last + 1)}-{last_needed} "
                f"(first missing year {year})",
                year=year,
            )
        rows.append([source.column(n).values[year - source.start_year] for n in names])
    return np.array(rows, dtype=float)


def forecast_arimax(fit: ArimaxFit, future_exog: ExogMatrix, horizon: int, level: float = 0.95) -> Forecast:
    """X_future gamma plus the ARIMA error forecast; intervals from the error model only"""
    if horizon < 1:
        raise ArgumentError(f"horizon must be positive, got {horizon}")
    X_future = _future_rows(fit, future_exog, horizon)
    base = forecast_arima(fit.arima, horizon, level)
    shift = X_future @ fit.gamma if X_future.shape[1] else np.zeros(horizon)
    return Forecast(base.start_year, base.point + shift, base.lower + shift, base.upper + shift, level)


def auto_scenario(exog: ExogMatrix, horizon: int,
                  options: OptimizerOptions = OptimizerOptions()) -> ExogMatrix:
    """Future exogenous paths from damped-trend (phi = 0.95) forecasts of each column"""
    if horizon < 1:
        raise ArgumentError(f"horizon must be positive, got {horizon}")
    future = []
    for column in exog.columns:
        holt = fit_holt(column, phi_mode="fixed", options=options)
        path = forecast_holt(holt, horizon)
        future.append(TimeSeries(path.start_year, path.point, label=column.label))
        logger.info(f"auto scenario for {column.label}: {path.point[0]:.4g} .. {path.point[-1]:.4g} "
                    f"(damped trend, phi={DEFAULT_PHI})")
    return ExogMatrix(tuple(future))
