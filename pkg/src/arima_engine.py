"""
ARIMA(p,d,q) estimation, simulation and forecasting.

Model on the d-times differenced series w_t:

    w_t = alpha + sum_i ar_i * w_{t-i} + eps_t + sum_j ma_j * eps_{t-j}

which is the usual general ARIMA equation with beta_i stored as `ArimaParams.ar` and
phi_j stored as `ArimaParams.ma`. Estimation maximises the conditional-sum-of-squares
Gaussian likelihood (presample errors fixed at zero, recursion starting at t = p+1).
This differs from exact state-space maximum likelihood by O(1/n).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from numba import njit
from scipy.optimize import least_squares
from scipy.signal import lfilter
from scipy.stats import norm

from errors import ArgumentError, DegenerateSeriesError, InsufficientDataError
from optimizer import OptimizerOptions, minimize_multistart
from param_transforms import (
    check_admissible,
    pacf_to_ar,
    pacf_to_ma,
    unconstrained_to_pacf,
)
from series_core import Forecast, TimeSeries, difference, difference_pivots, integrate

logger = logging.getLogger(__name__)

MAX_ARMA_ORDER = 8
MAX_D = 2
MIN_EXTRA_OBS = 10
SIGMA2_FLOOR_FACTOR = 1e-12
REFINE_TOLERANCE = 1e-12
LOG_2PI = math.log(2.0 * math.pi)

# two-sided normal quantiles for the common interval levels
Z_TABLE = {0.80: 1.281552, 0.90: 1.644854, 0.95: 1.959964, 0.99: 2.575829}


def normal_quantile(level: float) -> float:
    """Two-sided quantile z such that P(|Z| <= z) = level"""
    if not 0.0 < level < 1.0:
        raise ArgumentError(f"level must lie in (0, 1), got {level}")
    for tabulated, z in Z_TABLE.items():
        if abs(level - tabulated) < 1e-12:
            return z
    return float(norm.ppf(0.5 + level / 2.0))


@dataclass(frozen=True)
class ArimaSpec:
    """Order triple plus the constant flag (defaults to d == 0)"""

    p: int
    d: int
    q: int
    include_constant: Optional[bool] = None

    def __post_init__(self):
        for name in ("p", "d", "q"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ArgumentError(f"{name} must be a non-negative integer, got {value}")
            object.__setattr__(self, name, int(value))
        if self.p > MAX_ARMA_ORDER or self.q > MAX_ARMA_ORDER:
            raise ArgumentError(f"p and q are limited to {MAX_ARMA_ORDER}, got ({self.p},{self.q})")
        if self.d > MAX_D:
            raise ArgumentError(f"d is limited to {MAX_D}, got {self.d}")
        if self.include_constant is None:
            object.__setattr__(self, "include_constant", self.d == 0)

    @classmethod
    def parse(cls, text: str, include_constant: Optional[bool] = None) -> "ArimaSpec":
        """Parse 'p,d,q'"""
        try:
            p, d, q = (int(part) for part in text.replace("(", "").replace(")", "").split(","))
        except ValueError:
            raise ArgumentError(f"cannot parse model order {text!r}, expected 'p,d,q'")
        return cls(p, d, q, include_constant)

    @property
    def order(self) -> Tuple[int, int, int]:
        return (self.p, self.d, self.q)

    @property
    def label(self) -> str:
        return f"({self.p},{self.d},{self.q})"

    @property
    def n_coefficients(self) -> int:
        return self.p + self.q + int(self.include_constant)

    def min_length(self) -> int:
        if self.p + self.q == 0:
            return self.d + 2
        return self.p + self.q + self.d + MIN_EXTRA_OBS


@dataclass(frozen=True)
class ArimaParams:
    """A candidate coefficient set (sigma2 only matters for simulation)"""

    intercept: float = 0.0
    ar: Tuple[float, ...] = ()
    ma: Tuple[float, ...] = ()
    sigma2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(a) for a in self.ar))
        object.__setattr__(self, "ma", tuple(float(m) for m in self.ma))

    def check(self, spec: ArimaSpec) -> None:
        if len(self.ar) != spec.p or len(self.ma) != spec.q:
            raise ArgumentError(
                f"spec {spec.label} needs {spec.p} AR and {spec.q} MA coefficients, "
                f"got {len(self.ar)} and {len(self.ma)}"
            )
        check_admissible(np.array(self.ar), np.array(self.ma))


@dataclass(frozen=True, eq=False)
class ArimaFit:
    """Fitted ARIMA model; residuals live on the differenced scale"""

    spec: ArimaSpec
    intercept: float
    ar_coeffs: np.ndarray
    ma_coeffs: np.ndarray
    sigma2: float
    residuals: np.ndarray
    loglik: float
    n_effective: int
    train_tail: TimeSeries
    n_regressors: int = 0
    diagnostics: Dict = field(default_factory=dict)

    @property
    def params(self) -> ArimaParams:
        return ArimaParams(self.intercept, tuple(self.ar_coeffs), tuple(self.ma_coeffs), self.sigma2)

    @property
    def n_params(self) -> int:
        """AR + MA + constant + regressors + 1 for sigma2"""
        return self.spec.n_coefficients + self.n_regressors + 1

    @property
    def aic(self) -> float:
        return -2.0 * self.loglik + 2.0 * self.n_params

    @property
    def aicc(self) -> float:
        return aicc(self.loglik, self.n_params, self.n_effective)

    @property
    def bic(self) -> float:
        return -2.0 * self.loglik + self.n_params * math.log(self.n_effective)

    @property
    def degenerate(self) -> bool:
        return bool(self.diagnostics.get("sigma2_floor_hit", False))

    def summary(self) -> Dict:
        return {
            "spec": list(self.spec.order),
            "include_constant": bool(self.spec.include_constant),
            "intercept": float(self.intercept),
            "ar": [float(a) for a in self.ar_coeffs],
            "ma": [float(m) for m in self.ma_coeffs],
            "sigma2": float(self.sigma2),
            "loglik": float(self.loglik),
            "aic": float(self.aic),
            "aicc": float(self.aicc),
            "bic": float(self.bic),
            "n_effective": int(self.n_effective),
        }


@njit(cache=True)
def _css_recursion(w, intercept, ar, ma):
    n = w.size
    p = ar.size
    q = ma.size
    eps = np.zeros(n - p)
    for t in range(p, n):
        value = w[t] - intercept
        for i in range(p):
            value -= ar[i] * w[t - 1 - i]
        for j in range(q):
            k = t - p - 1 - j
            if k >= 0:
                value -= ma[j] * eps[k]
        eps[t - p] = value
    return eps


def _residuals(w: np.ndarray, intercept: float, ar: np.ndarray, ma: np.ndarray) -> np.ndarray:
    return _css_recursion(np.ascontiguousarray(w, dtype=np.float64), float(intercept),
                          np.ascontiguousarray(ar, dtype=np.float64),
                          np.ascontiguousarray(ma, dtype=np.float64))


def _sigma2_floor(w: np.ndarray) -> float:
    return max(SIGMA2_FLOOR_FACTOR * float(np.var(w)), np.finfo(float).tiny)


def _gaussian_loglik(eps: np.ndarray, floor: float) -> Tuple[float, float, bool]:
    n_eff = eps.size
    raw = float(np.dot(eps, eps)) / n_eff
    sigma2 = max(raw, floor)
    loglik = -0.5 * n_eff * (LOG_2PI + math.log(sigma2) + 1.0)
    return loglik, sigma2, raw < floor


def css_residuals(series: TimeSeries, spec: ArimaSpec, params: ArimaParams) -> np.ndarray:
    """CSS residuals of an already-differenced series"""
    params.check(spec)
    if len(series) <= spec.p:
        raise InsufficientDataError(f"need more than {spec.p} observations for {spec.label}")
    intercept = params.intercept if spec.include_constant else 0.0
    return _residuals(series.values, intercept, np.array(params.ar), np.array(params.ma))


def css_loglik(series: TimeSeries, spec: ArimaSpec, params: ArimaParams) -> float:
    """Conditional Gaussian log-likelihood of an already-differenced series"""
    eps = css_residuals(series, spec, params)
    loglik, _, _ = _gaussian_loglik(eps, _sigma2_floor(series.values))
    return loglik


def aicc(loglik: float, k: int, n: int) -> float:
    """Small-sample AIC; +inf when n <= k + 1 so the candidate drops out of rankings"""
    if n <= k + 1:
        return math.inf
    return -2.0 * loglik + 2.0 * k + 2.0 * k * (k + 1) / (n - k - 1)


@dataclass
class _CoreFit:
    intercept: float
    gamma: np.ndarray
    ar: np.ndarray
    ma: np.ndarray
    residuals: np.ndarray
    sigma2: float
    loglik: float
    diagnostics: Dict


def _profiled(w: np.ndarray, X: np.ndarray, const: bool, ar: np.ndarray,
              ma: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Residuals with the intercept and regression coefficients at their exact least-squares values"""
    base = _residuals(w, 0.0, ar, ma)
    columns = []
    if const:
        columns.append(-_residuals(np.zeros_like(w), 1.0, ar, ma))
    for j in range(X.shape[1]):
        columns.append(_residuals(X[:, j], 0.0, ar, ma))
    if not columns:
        return base, np.zeros(0)
    design = np.column_stack(columns)
    beta = np.linalg.lstsq(design, base, rcond=None)[0]
    return base - design @ beta, beta


def fit_regression_arma(w: np.ndarray, regressors: Optional[np.ndarray], spec: ArimaSpec,
                        options: OptimizerOptions = OptimizerOptions(), label: str = "") -> _CoreFit:
    """
    Joint CSS fit of w = X gamma + ARMA(p,q) errors on already-differenced data.

    Only the AR/MA coefficients are searched: for fixed AR/MA the residuals are
    linear in the intercept and gamma, which are solved exactly by least squares
    on the filtered design (columns standardized first). The multistart optimum is
    then refined with Levenberg-Marquardt on the same residual vector. The origin
    (zero AR/MA) is the OLS solution with white-noise errors.
    """
    w = np.asarray(w, dtype=float)
    X = np.zeros((w.size, 0)) if regressors is None else np.asarray(regressors, dtype=float)
    m = X.shape[1]
    p, q = spec.p, spec.q
    const = bool(spec.include_constant)
    if np.ptp(w) == 0.0:
        raise DegenerateSeriesError(f"{label}: differenced series is constant")
    floor = _sigma2_floor(w)

    if p + q == 0:
        design = np.column_stack([np.ones(w.size)] * const + [X]) if (const or m) else np.zeros((w.size, 0))
        if const and m == 0:
            beta0 = np.array([w.mean()])  # exact least-squares mean
        elif design.shape[1]:
            beta0 = np.linalg.lstsq(design, w, rcond=None)[0]
        else:
            beta0 = np.zeros(0)
        eps = w - design @ beta0 if design.shape[1] else w.copy()
        loglik, sigma2, floor_hit = _gaussian_loglik(eps, floor)
        intercept0 = float(beta0[0]) if const else 0.0
        return _CoreFit(intercept0, beta0[int(const):], np.zeros(0), np.zeros(0), eps, sigma2, loglik,
                        {"method": "least-squares", "converged": True, "sigma2_floor_hit": floor_hit})

    x_sd = np.std(X, axis=0) if m else np.ones(0)
    x_sd = np.where(x_sd > 0.0, x_sd, 1.0)
    Xs = X / x_sd

    def unpack(u):
        ar = pacf_to_ar(unconstrained_to_pacf(u[:p]))
        ma = pacf_to_ma(unconstrained_to_pacf(u[p:p + q]))
        return ar, ma

    def profiled_residuals(u):
        ar, ma = unpack(u)
        return _profiled(w, Xs, const, ar, ma)[0]

    def negative_loglik(u):
        return -_gaussian_loglik(profiled_residuals(u), floor)[0]

    result = minimize_multistart(negative_loglik, p + q, options, label=label)
    best_u, best_value = result.x, result.fun
    refined = False
    try:
        polish = least_squares(profiled_residuals, best_u, method="lm",
                               xtol=REFINE_TOLERANCE, ftol=REFINE_TOLERANCE, gtol=REFINE_TOLERANCE)
        polished_value = negative_loglik(polish.x)
        if np.isfinite(polished_value) and polished_value <= best_value:
            best_u, best_value, refined = polish.x, polished_value, True
    except (ValueError, np.linalg.LinAlgError) as e:
        logger.debug(f"{label}: least-squares refinement skipped ({e})")

    ar, ma = unpack(best_u)
    eps, beta = _profiled(w, Xs, const, ar, ma)
    intercept = float(beta[0]) if const else 0.0
    gamma = beta[int(const):] / x_sd
    loglik, sigma2, floor_hit = _gaussian_loglik(eps, floor)
    if floor_hit:
        logger.warning(f"{label}: innovation variance hit the floor, fit flagged degenerate")
    diagnostics = {"method": options.method, "refined": refined, "sigma2_floor_hit": floor_hit,
                   **result.diagnostics()}
    return _CoreFit(intercept, gamma, ar, ma, eps, sigma2, loglik, diagnostics)


def _tail_length(spec: ArimaSpec) -> int:
    return max(max(spec.p, spec.q) + spec.d, 1)


def fit_arima(series: TimeSeries, spec: ArimaSpec,
              options: OptimizerOptions = OptimizerOptions()) -> ArimaFit:
    """Estimate an ARIMA model by CSS maximum likelihood"""
    if len(series) < spec.min_length():
        raise InsufficientDataError(
            f"{series.label or 'series'} has {len(series)} observations, {spec.label} needs {spec.min_length()}"
        )
    w = difference(series, spec.d)
    core = fit_regression_arma(w.values, None, spec, options, label=f"{series.label} ARIMA{spec.label}")
    logger.debug(f"ARIMA{spec.label} on {series.label}: loglik={core.loglik:.6f}")
    return ArimaFit(
        spec=spec,
        intercept=core.intercept,
        ar_coeffs=core.ar,
        ma_coeffs=core.ma,
        sigma2=core.sigma2,
        residuals=core.residuals,
        loglik=core.loglik,
        n_effective=int(core.residuals.size),
        train_tail=series.tail(_tail_length(spec)),
        diagnostics=core.diagnostics,
    )


def arima_fit_from_params(series: TimeSeries, spec: ArimaSpec, params: ArimaParams) -> ArimaFit:
    """Wrap given coefficients as a fit on `series` (levels); sigma2 is taken from params"""
    w = difference(series, spec.d)
    eps = css_residuals(w, spec, params)
    loglik, _, _ = _gaussian_loglik(eps, _sigma2_floor(w.values))
    return ArimaFit(
        spec=spec,
        intercept=params.intercept if spec.include_constant else 0.0,
        ar_coeffs=np.array(params.ar),
        ma_coeffs=np.array(params.ma),
        sigma2=params.sigma2,
        residuals=eps,
        loglik=loglik,
        n_effective=int(eps.size),
        train_tail=series.tail(min(_tail_length(spec), len(series))),
        diagnostics={"method": "given"},
    )


def _psi(ar: Sequence[float], ma: Sequence[float], horizon: int) -> np.ndarray:
    psi = np.zeros(horizon)
    psi[0] = 1.0
    for k in range(1, horizon):
        value = ma[k - 1] if k <= len(ma) else 0.0
        for i in range(1, min(k, len(ar)) + 1):
            value += ar[i - 1] * psi[k - i]
        psi[k] = value
    return psi


def psi_weights(fit: ArimaFit, horizon: int) -> np.ndarray:
    """psi_0..psi_{horizon-1} of the MA(infinity) form of the ARMA part"""
    if horizon < 1:
        raise ArgumentError(f"horizon must be positive, got {horizon}")
    return _psi(fit.ar_coeffs, fit.ma_coeffs, horizon)


def integrated_ar(ar: Sequence[float], d: int) -> np.ndarray:
    """AR coefficients of phi(B)(1-B)^d, the integrated representation"""
    poly = np.concatenate([[1.0], -np.asarray(ar, dtype=float)])
    for _ in range(d):
        poly = np.convolve(poly, [1.0, -1.0])
    return -poly[1:]


def forecast_arima(fit: ArimaFit, horizon: int, level: float = 0.95) -> Forecast:
    """h-step forecasts with psi-weight intervals"""
    if horizon < 1:
        raise ArgumentError(f"horizon must be positive, got {horizon}")
    spec = fit.spec
    p, q = spec.p, spec.q
    history = list(difference(fit.train_tail, spec.d).values) if p else []
    eps = list(fit.residuals[-q:]) if q else []
    intercept = fit.intercept if spec.include_constant else 0.0

    w_hat = []
    for h in range(1, horizon + 1):
        value = intercept
        for i in range(1, p + 1):
            value += fit.ar_coeffs[i - 1] * history[-i]
        for j in range(h, q + 1):
            # eps index counted back from the last observed error
            value += fit.ma_coeffs[j - 1] * eps[len(eps) - 1 - (j - h)]
        history.append(value)
        w_hat.append(value)

    start = fit.train_tail.end_year + 1
    points = integrate(TimeSeries(start, w_hat), difference_pivots(fit.train_tail, spec.d, at="end"), spec.d)

    psi = _psi(integrated_ar(fit.ar_coeffs, spec.d), fit.ma_coeffs, horizon)
    half = normal_quantile(level) * np.sqrt(fit.sigma2 * np.cumsum(psi ** 2))
    return Forecast(start, points.values, points.values - half, points.values + half, level)


def simulate_arima(spec: ArimaSpec, params: ArimaParams, n: int, seed: int,
                   start_year: int = 1) -> TimeSeries:
    """Gaussian ARIMA sample path; deterministic for a given seed"""
    params.check(spec)
    if n < 1:
        raise ArgumentError(f"simulation length must be positive, got {n}")
    if params.sigma2 < 0:
        raise ArgumentError(f"sigma2 must be non-negative, got {params.sigma2}")
    burn = 200 + 10 * max(spec.p, spec.q)
    rng = np.random.default_rng(seed)
    shocks = math.sqrt(params.sigma2) * rng.standard_normal(n + burn)
    ar = np.array(params.ar)
    intercept = params.intercept if spec.include_constant else 0.0
    mean = intercept / (1.0 - ar.sum())
    path = lfilter(np.concatenate([[1.0], params.ma]), np.concatenate([[1.0], -ar]), shocks) + mean
    values = path[burn:]
    for _ in range(spec.d):
        values = np.cumsum(values)
    return TimeSeries(start_year, values, label=f"simulated ARIMA{spec.label}")
