"""
Reparametrisations used by the optimizers.

ARMA blocks go through partial autocorrelations (Durbin-Levinson recursion):
an unconstrained vector u maps to pacf = LIMIT * tanh(u), and any pacf vector
with every |r| < 1 maps to a stationary AR polynomial 1 - sum(a_i z^i).
MA blocks use the same map with the sign flipped, because the engine writes the
MA polynomial as 1 + sum(phi_j z^j).

Box-constrained smoothing parameters use a scaled logistic map.
"""

import numpy as np

from errors import ConstraintViolationError

PACF_MARGIN = 1e-6
PACF_LIMIT = 1.0 - PACF_MARGIN


def pacf_to_ar(pacf) -> np.ndarray:
    pacf = np.asarray(pacf, dtype=float)
    coeffs = pacf.copy()
    for k in range(1, pacf.size):
        prev = coeffs[:k].copy()
        coeffs[:k] = prev - pacf[k] * prev[::-1]
    return coeffs


def ar_to_pacf(coeffs) -> np.ndarray:
    """Inverse Durbin-Levinson step; raises if the polynomial is not stationary"""
    pacf = np.array(coeffs, dtype=float)
    for k in range(pacf.size - 1, 0, -1):
        a = pacf[k]
        if not abs(a) < 1.0:
            raise ConstraintViolationError(f"polynomial {list(coeffs)} has a root on or inside the unit circle")
        prev = pacf[:k].copy()
        pacf[:k] = (prev + a * prev[::-1]) / (1.0 - a * a)
    if pacf.size and not abs(pacf[0]) < 1.0:
        raise ConstraintViolationError(f"polynomial {list(coeffs)} has a root on or inside the unit circle")
    return pacf


def pacf_to_ma(pacf) -> np.ndarray:
    return -pacf_to_ar(pacf)


def ma_to_pacf(coeffs) -> np.ndarray:
    return ar_to_pacf(-np.asarray(coeffs, dtype=float))


def unconstrained_to_pacf(u) -> np.ndarray:
    return PACF_LIMIT * np.tanh(np.asarray(u, dtype=float))


def pacf_to_unconstrained(pacf) -> np.ndarray:
    return np.arctanh(np.asarray(pacf, dtype=float) / PACF_LIMIT)


def check_admissible(ar, ma) -> None:
    """Stationarity of the AR block and invertibility of the MA block, with margin"""
    for name, to_pacf, coeffs in (("AR", ar_to_pacf, ar), ("MA", ma_to_pacf, ma)):
        if len(coeffs) == 0:
            continue
        pacf = to_pacf(coeffs)
        if np.any(np.abs(pacf) > PACF_LIMIT + 1e-12):
            raise ConstraintViolationError(
                f"{name} coefficients {np.round(coeffs, 6).tolist()} violate the "
                f"stationarity margin (max |pacf| = {np.max(np.abs(pacf)):.8f})"
            )


def logistic_to_box(u, low: float, high: float):
    return low + (high - low) / (1.0 + np.exp(-np.asarray(u, dtype=float)))


def box_to_logistic(x, low: float, high: float):
    frac = (np.asarray(x, dtype=float) - low) / (high - low)
    return np.log(frac / (1.0 - frac))
