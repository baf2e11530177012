import math

import numpy as np
import pytest

from arima_engine import (
    ArimaParams,
    ArimaSpec,
    aicc,
    arima_fit_from_params,
    css_loglik,
    css_residuals,
    fit_arima,
    forecast_arima,
    integrated_ar,
    normal_quantile,
    psi_weights,
    simulate_arima,
)
from errors import ArgumentError, ConstraintViolationError, DegenerateSeriesError, InsufficientDataError
from series_core import TimeSeries, difference, sample_acf

FIXED_SERIES = TimeSeries(2000, [0.3, -1.2, 0.8, 2.1, -0.4, 0.0, 1.7, -2.2, 0.9, 0.5])


def _given(values, spec, params, start_year=2000):
    return arima_fit_from_params(TimeSeries(start_year, values), spec, params)


def test_spec_defaults_and_bounds():
    assert ArimaSpec(1, 0, 1).include_constant
    assert not ArimaSpec(1, 1, 1).include_constant
    assert ArimaSpec.parse("2,1,0").order == (2, 1, 0)
    with pytest.raises(ArgumentError):
        ArimaSpec(9, 0, 0)
    with pytest.raises(ArgumentError):
        ArimaSpec(1, 3, 0)
    with pytest.raises(ArgumentError):
        ArimaSpec.parse("two,one,zero")


def test_css_recursion_collapses_for_zero_coefficients():
    y = FIXED_SERIES
    eps = css_residuals(y, ArimaSpec(1, 0, 0), ArimaParams(0.0, (0.0,), ()))
    assert np.array_equal(eps, y.values[1:])
    sse = float(np.sum(y.values[1:] ** 2))
    n = len(y) - 1
    expected = -0.5 * n * (math.log(2 * math.pi) + math.log(sse / n) + 1.0)
    assert css_loglik(y, ArimaSpec(1, 0, 0), ArimaParams(0.0, (0.0,), ())) == pytest.approx(expected, rel=1e-12)


def test_css_arma11_matches_independent_recursion():
    y = FIXED_SERIES.values
    alpha, beta, phi = 0.1, 0.5, 0.3
    eps = []
    for t in range(1, len(y)):
        previous = eps[-1] if eps else 0.0
        eps.append(y[t] - alpha - beta * y[t - 1] - phi * previous)
    eps = np.array(eps)
    n = eps.size
    expected = -0.5 * n * (math.log(2 * math.pi) + math.log(np.dot(eps, eps) / n) + 1.0)
    params = ArimaParams(alpha, (beta,), (phi,))
    assert css_residuals(FIXED_SERIES, ArimaSpec(1, 0, 1), params) == pytest.approx(eps, abs=1e-12)
    assert css_loglik(FIXED_SERIES, ArimaSpec(1, 0, 1), params) == pytest.approx(expected, rel=1e-12)


def test_css_rejects_nonstationary_params():
    with pytest.raises(ConstraintViolationError):
        css_loglik(FIXED_SERIES, ArimaSpec(1, 0, 0), ArimaParams(0.0, (1.05,), ()))


def test_mean_model_is_exact():
    fit = fit_arima(TimeSeries(2000, [2, 4, 6, 8]), ArimaSpec(0, 0, 0))
    assert fit.intercept == 5.0
    assert fit.residuals.tolist() == [-3.0, -1.0, 1.0, 3.0]
    assert fit.n_effective == 4
    assert fit.sigma2 == pytest.approx(5.0)


def test_constant_series_is_degenerate():
    with pytest.raises(DegenerateSeriesError):
        fit_arima(TimeSeries(2000, [7.0] * 20), ArimaSpec(1, 1, 0))


def test_short_series_is_rejected():
    with pytest.raises(InsufficientDataError):
        fit_arima(TimeSeries(2000, np.arange(12.0)), ArimaSpec(2, 1, 1))


def test_fit_recovers_ar1():
    y = simulate_arima(ArimaSpec(1, 0, 0), ArimaParams(0.0, (0.6,), (), 1.0), 2000, seed=21)
    fit = fit_arima(y, ArimaSpec(1, 0, 0))
    assert fit.ar_coeffs[0] == pytest.approx(0.6, abs=0.05)
    assert fit.residuals.size == fit.n_effective == 1999
    assert fit.sigma2 == pytest.approx(1.0, abs=0.1)
    assert fit.diagnostics["converged"]


def test_fit_is_deterministic(ar1_series):
    a = fit_arima(ar1_series, ArimaSpec(1, 0, 1))
    b = fit_arima(ar1_series, ArimaSpec(1, 0, 1))
    assert a.loglik == b.loglik
    assert np.array_equal(a.ar_coeffs, b.ar_coeffs)


def test_intercept_sits_at_the_exact_optimum(ar1_series):
    spec = ArimaSpec(1, 0, 1)
    fit = fit_arima(ar1_series, spec)
    assert "refined" in fit.diagnostics
    best = css_loglik(ar1_series, spec, fit.params)
    assert best == pytest.approx(fit.loglik, abs=1e-9)
    for step in (-1e-3, 1e-3):
        moved = ArimaParams(fit.params.intercept + step, fit.params.ar, fit.params.ma, fit.params.sigma2)
        assert css_loglik(ar1_series, spec, moved) < best


def test_fitted_coefficients_are_admissible(ar1_series):
    fit = fit_arima(ar1_series, ArimaSpec(2, 0, 2))
    fit.params.check(fit.spec)


@pytest.mark.parametrize(
    "spec, params, expected",
    [
        (ArimaSpec(1, 0, 0), ArimaParams(0.0, (0.5,), ()), [1.0, 0.5, 0.25]),
        (ArimaSpec(0, 0, 1), ArimaParams(0.0, (), (0.7,)), [1.0, 0.7, 0.0, 0.0]),
        (ArimaSpec(1, 0, 1), ArimaParams(0.0, (0.5,), (0.3,)), [1.0, 0.8, 0.4, 0.2]),
    ],
    ids=["ar1", "ma1", "arma11"],
)
def test_psi_weights_closed_forms(spec, params, expected):
    fit = _given(FIXED_SERIES.values, spec, params)
    assert psi_weights(fit, len(expected)) == pytest.approx(expected, abs=1e-12)


def test_integrated_ar_of_random_walk():
    assert integrated_ar([], 1).tolist() == [1.0]
    assert integrated_ar([0.5], 1).tolist() == [1.5, -0.5]


def test_ar1_forecast_example():
    fit = _given([0.4, -1.0, 3.0, 2.0], ArimaSpec(1, 0, 0), ArimaParams(0.0, (0.5,), (), 1.0))
    forecast = forecast_arima(fit, 3, 0.95)
    assert forecast.point.tolist() == [1.0, 0.5, 0.25]
    assert forecast.start_year == 2004
    assert forecast.lower[0] == pytest.approx(1.0 - 1.959964)
    assert forecast.upper[0] == pytest.approx(1.0 + 1.959964)


def test_random_walk_forecast_is_flat_with_linear_variance():
    fit = _given([4.0, 7.0, 9.0, 10.0], ArimaSpec(0, 1, 0), ArimaParams(sigma2=1.0))
    forecast = forecast_arima(fit, 5)
    assert forecast.point.tolist() == [10.0] * 5
    variance = (forecast.half_width() / 1.959964) ** 2
    assert variance == pytest.approx([1.0, 2.0, 3.0, 4.0, 5.0])


def test_stationary_forecast_converges_to_the_mean():
    fit = _given(FIXED_SERIES.values, ArimaSpec(2, 0, 0), ArimaParams(2.0, (0.5, 0.2), (), 1.0))
    forecast = forecast_arima(fit, 200)
    assert forecast.point[-1] == pytest.approx(2.0 / (1 - 0.7), rel=1e-6)


def test_fitted_stationary_forecast_converges(ar1_series):
    fit = fit_arima(ar1_series, ArimaSpec(1, 0, 1))
    forecast = forecast_arima(fit, 200)
    assert forecast.point[-1] == pytest.approx(fit.intercept / (1 - fit.ar_coeffs.sum()), rel=1e-6)


def test_interval_width_never_shrinks(ar1_series, trending_series):
    fits = [
        fit_arima(ar1_series, ArimaSpec(1, 0, 0)),
        fit_arima(ar1_series, ArimaSpec(0, 0, 1)),
        fit_arima(ar1_series, ArimaSpec(2, 0, 1)),
        fit_arima(trending_series, ArimaSpec(1, 1, 0)),
        fit_arima(trending_series, ArimaSpec(0, 1, 1)),
        fit_arima(trending_series, ArimaSpec(1, 2, 1)),
    ]
    for fit in fits:
        half = forecast_arima(fit, 20).half_width()
        assert np.all(np.diff(half) >= -1e-12 * half[1:]), fit.spec.label


def test_forecast_rejects_bad_arguments(ar1_series):
    fit = fit_arima(ar1_series, ArimaSpec(1, 0, 0))
    with pytest.raises(ArgumentError):
        forecast_arima(fit, 0)
    with pytest.raises(ArgumentError):
        forecast_arima(fit, 5, level=1.0)


def test_normal_quantile():
    assert normal_quantile(0.95) == 1.959964
    assert normal_quantile(0.80) == 1.281552
    assert normal_quantile(0.5) == pytest.approx(0.6744897502, abs=1e-8)


def test_aicc_arithmetic():
    assert aicc(-100.0, 3, 50) == pytest.approx(206.521739, abs=1e-6)
    assert aicc(-100.0, 0, 50) == 200.0
    assert aicc(-100.0, 3, 4) == math.inf


def test_fit_information_criteria(ar1_series):
    fit = fit_arima(ar1_series, ArimaSpec(1, 0, 0))
    # AR coefficient, constant and sigma2
    assert fit.n_params == 3
    assert fit.aic == pytest.approx(-2 * fit.loglik + 6)
    assert fit.aicc > fit.aic


def test_simulate_without_noise_is_constant():
    y = simulate_arima(ArimaSpec(0, 0, 0), ArimaParams(3.5, (), (), 0.0), 25, seed=1)
    assert np.array_equal(y.values, np.full(25, 3.5))


def test_simulate_is_deterministic():
    spec, params = ArimaSpec(1, 1, 1), ArimaParams(0.0, (0.4,), (0.2,), 2.0)
    assert simulate_arima(spec, params, 50, seed=9).equals(simulate_arima(spec, params, 50, seed=9))
    assert not simulate_arima(spec, params, 50, seed=9).equals(simulate_arima(spec, params, 50, seed=10))


def test_simulated_ar1_autocorrelation():
    y = simulate_arima(ArimaSpec(1, 0, 0), ArimaParams(0.0, (0.9,), (), 1.0), 5000, seed=5)
    assert sample_acf(y, 1)[0] == pytest.approx(0.9, abs=0.05)


def test_simulate_rejects_explosive_params():
    with pytest.raises(ConstraintViolationError):
        simulate_arima(ArimaSpec(1, 0, 0), ArimaParams(0.0, (1.2,), ()), 10, seed=1)


@pytest.mark.slow
def test_css_estimate_beats_a_coefficient_grid():
    spec = ArimaSpec(1, 0, 0)
    for seed in range(50):
        y = simulate_arima(spec, ArimaParams(0.0, (0.6,), (), 1.0), 300, seed=1000 + seed)
        fit = fit_arima(y, spec)
        best_grid = -math.inf
        for beta in np.linspace(-0.99, 0.99, 201):
            # the constant is profiled out in closed form for each grid point
            alpha = float(np.mean(y.values[1:] - beta * y.values[:-1]))
            best_grid = max(best_grid, css_loglik(y, spec, ArimaParams(alpha, (beta,), ())))
        assert fit.loglik >= best_grid - 1e-6, seed


@pytest.mark.slow
@pytest.mark.parametrize(
    "spec, params, standard_errors",
    [
        (ArimaSpec(1, 0, 0), ArimaParams(0.0, (0.6,), (), 1.0), [math.sqrt(0.64 / 2000)]),
        (ArimaSpec(0, 0, 1), ArimaParams(0.0, (), (0.5,), 1.0), [math.sqrt(0.75 / 2000)]),
        (ArimaSpec(1, 0, 1), ArimaParams(0.0, (0.5,), (0.3,), 1.0),
         [math.sqrt(0.75 * 1.15 ** 2 / (0.64 * 2000)), math.sqrt(0.91 * 1.15 ** 2 / (0.64 * 2000))]),
    ],
    ids=["ar1", "ma1", "arma11"],
)
def test_parameter_recovery(spec, params, standard_errors):
    truth = np.array(params.ar + params.ma)
    hits = 0
    for seed in range(20):
        y = simulate_arima(spec, params, 2000, seed=500 + seed)
        fit = fit_arima(y, spec)
        estimate = np.concatenate([fit.ar_coeffs, fit.ma_coeffs])
        hits += bool(np.all(np.abs(estimate - truth) <= 3 * np.array(standard_errors)))
    assert hits >= 18


def test_differenced_fit_uses_differenced_residuals(trending_series):
    fit = fit_arima(trending_series, ArimaSpec(1, 1, 0))
    assert fit.n_effective == len(difference(trending_series, 1)) - 1
