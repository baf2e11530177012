"""
Holt's damped linear trend exponential smoothing.

    forecast  y(t+h|t) = l_t + (phi + phi^2 + ... + phi^h) b_t
    level     l_t = alpha y_t + (1 - alpha)(l_{t-1} + phi b_{t-1})
    trend     b_t = beta*(l_t - l_{t-1}) + (1 - beta*) phi b_{t-1}

Prediction intervals use the additive-error state-space variance
    var_h = sigma2 * (1 + sum_{j=1}^{h-1} c_j^2),  c_j = alpha (1 + beta* (phi + ... + phi^j))
with sigma2 = SSE / (n - 4).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np
from numba import njit

from arima_engine import normal_quantile
from errors import ArgumentError, InsufficientDataError
from optimizer import OptimizerOptions, minimize_multistart
from param_transforms import box_to_logistic, logistic_to_box
from series_core import Forecast, TimeSeries

logger = logging.getLogger(__name__)

DEFAULT_PHI = 0.95
SMOOTHING_BOUNDS = (1e-4, 1.0 - 1e-4)
PHI_BOUNDS = (0.8, 0.98)
MIN_FILTER_LENGTH = 4
MIN_FIT_LENGTH = 8
PHI_MODES = ("fixed", "estimated")


@dataclass(frozen=True)
class HoltParams:
    alpha: float
    beta_star: float
    phi: float
    l0: float
    b0: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ArgumentError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta_star <= 1.0:
            raise ArgumentError(f"beta* must lie in [0, 1], got {self.beta_star}")
        if not 0.0 < self.phi <= 1.0:
            raise ArgumentError(f"phi must lie in (0, 1], got {self.phi}")
        if not (np.isfinite(self.l0) and np.isfinite(self.b0)):
            raise ArgumentError("initial states must be finite")

    def as_dict(self) -> Dict[str, float]:
        return {"alpha": float(self.alpha), "beta_star": float(self.beta_star), "phi": float(self.phi),
                "l0": float(self.l0), "b0": float(self.b0)}


@dataclass(frozen=True, eq=False)
class HoltFit:
    params: HoltParams
    levels: np.ndarray
    trends: np.ndarray
    fitted: np.ndarray
    sse: float
    n: int
    end_year: int
    label: str = ""
    diagnostics: Dict = field(default_factory=dict)

    @property
    def sigma2(self) -> float:
        return self.sse / max(self.n - 4, 1)

    def summary(self) -> Dict:
        return {"params": self.params.as_dict(), "sse": float(self.sse), "sigma2": float(self.sigma2),
                "n": int(self.n), "level": float(self.levels[-1]), "trend": float(self.trends[-1])}


@njit(cache=True)
def _holt_recursion(y, alpha, beta_star, phi, l0, b0):
    n = y.size
    levels = np.empty(n)
    trends = np.empty(n)
    fitted = np.empty(n)
    level = l0
    trend = b0
    sse = 0.0
    for t in range(n):
        prediction = level + phi * trend
        fitted[t] = prediction
        err = y[t] - prediction
        sse += err * err
        new_level = alpha * y[t] + (1.0 - alpha) * prediction
        trend = beta_star * (new_level - level) + (1.0 - beta_star) * phi * trend
        level = new_level
        levels[t] = level
        trends[t] = trend
    return levels, trends, fitted, sse


def holt_filter(series: TimeSeries, params: HoltParams) -> HoltFit:
    """Run the level/trend recursions from (l0, b0)"""
    if len(series) < MIN_FILTER_LENGTH:
        raise InsufficientDataError(
            f"Holt filtering needs {MIN_FILTER_LENGTH} observations, {series.label!r} has {len(series)}"
        )
    levels, trends, fitted, sse = _holt_recursion(
        np.ascontiguousarray(series.values), float(params.alpha), float(params.beta_star),
        float(params.phi), float(params.l0), float(params.b0),
    )
    return HoltFit(params, levels, trends, fitted, float(sse), len(series), series.end_year, series.label)


def fit_holt(series: TimeSeries, phi_mode: str = "fixed",
             options: OptimizerOptions = OptimizerOptions()) -> HoltFit:
    """
    Minimise the one-step SSE over (alpha, beta*, l0, b0), plus phi when estimated.
    The optimizer origin is alpha=0.5, beta*=0.1, l0=y1, b0=y2-y1 (phi=0.95).
    """
    if phi_mode not in PHI_MODES:
        raise ArgumentError(f"phi mode must be one of {PHI_MODES}, got {phi_mode!r}")
    if len(series) < MIN_FIT_LENGTH:
        raise InsufficientDataError(
            f"Holt fitting needs {MIN_FIT_LENGTH} observations, {series.label!r} has {len(series)}"
        )
    y = np.ascontiguousarray(series.values)
    scale = float(np.std(y)) or 1.0
    low, high = SMOOTHING_BOUNDS
    origin = np.array([
        box_to_logistic(0.5, low, high),
        box_to_logistic(0.1, low, high),
        box_to_logistic(DEFAULT_PHI, *PHI_BOUNDS),
    ])
    l_start, b_start = float(y[0]), float(y[1] - y[0])
    estimate_phi = phi_mode == "estimated"

    def unpack(u):
        alpha = float(logistic_to_box(origin[0] + u[0], low, high))
        beta_star = float(logistic_to_box(origin[1] + u[1], low, high))
        l0 = l_start + scale * u[2]
        b0 = b_start + scale * u[3]
        phi = float(logistic_to_box(origin[2] + u[4], *PHI_BOUNDS)) if estimate_phi else DEFAULT_PHI
        return alpha, beta_star, phi, l0, b0

    def objective(u):
        return _holt_recursion(y, *unpack(u))[3] / (scale * scale)

    result = minimize_multistart(objective, 5 if estimate_phi else 4, options,
                                 label=f"{series.label} Holt damped")
    fit = holt_filter(series, HoltParams(*unpack(result.x)))
    logger.debug(f"Holt fit on {series.label}: {fit.params.as_dict()} sse={fit.sse:.6g}")
    return HoltFit(fit.params, fit.levels, fit.trends, fit.fitted, fit.sse, fit.n, fit.end_year,
                   fit.label, {"phi_mode": phi_mode, **result.diagnostics()})


def damped_sums(phi: float, horizon: int) -> np.ndarray:
    """phi + phi^2 + ... + phi^h for h = 1..horizon"""
    return np.cumsum(phi ** np.arange(1, horizon + 1))


def forecast_holt(fit: HoltFit, horizon: int, level: float = 0.95) -> Forecast:
    if horizon < 1:
        raise ArgumentError(f"horizon must be positive, got {horizon}")
    params = fit.params
    points = fit.levels[-1] + fit.trends[-1] * damped_sums(params.phi, horizon)

    c = params.alpha * (1.0 + params.beta_star * damped_sums(params.phi, horizon))
    # c_1..c_{h-1} enter step h
    spread = np.concatenate([[1.0], 1.0 + np.cumsum(c[:-1] ** 2)])
    half = normal_quantile(level) * np.sqrt(fit.sigma2 * spread)
    return Forecast(fit.end_year + 1, points, points - half, points + half, level)


def simulate_holt(params: HoltParams, n: int, sigma: float, seed: int, start_year: int = 1) -> TimeSeries:
    """Sample path of the additive-error damped-trend state-space model"""
    rng = np.random.default_rng(seed)
    shocks = sigma * rng.standard_normal(n)
    values = np.empty(n)
    level, trend = params.l0, params.b0
    for t in range(n):
        prediction = level + params.phi * trend
        values[t] = prediction + shocks[t]
        level = prediction + params.alpha * shocks[t]
        trend = params.phi * trend + params.alpha * params.beta_star * shocks[t]
    return TimeSeries(start_year, values, label="simulated damped trend")
