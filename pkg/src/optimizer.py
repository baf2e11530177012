"""
Multi-start local optimisation shared by the ARIMA and Holt estimators.

Objectives are expressed over an unconstrained vector; the estimators own the
mapping back to admissible parameters. Restart 0 starts at the zero vector
(the estimator's natural initial guess), the rest at seeded perturbations of it.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np
from scipy.optimize import minimize

from errors import ConvergenceError

logger = logging.getLogger(__name__)

PENALTY = 1e300


@dataclass(frozen=True)
class OptimizerOptions:
    """Settings for `minimize_multistart`"""

    method: str = "Nelder-Mead"
    restarts: int = 5
    tolerance: float = 1e-10      # objective improvement that counts as converged
    xtol: float = 1e-8
    evals_per_param: int = 500
    perturbation: float = 0.5
    seed: int = 0


@dataclass
class MultiStartResult:
    x: np.ndarray
    fun: float
    converged: bool
    evaluations: int
    restarts: List[Dict] = field(default_factory=list)

    def diagnostics(self) -> Dict:
        return {
            "objective": float(self.fun),
            "converged": bool(self.converged),
            "evaluations": int(self.evaluations),
            "restarts": self.restarts,
        }


def _scipy_options(method: str, options: OptimizerOptions, budget: int, n_params: int) -> Dict:
    if method == "Nelder-Mead":
        return {"xatol": options.xtol, "fatol": options.tolerance, "maxfev": budget,
                "adaptive": n_params > 2}
    if method == "Powell":
        return {"xtol": options.xtol, "ftol": options.tolerance, "maxfev": budget}
    if method == "L-BFGS-B":
        return {"ftol": options.tolerance, "maxfun": budget}
    return {"maxiter": budget}


def minimize_multistart(objective: Callable[[np.ndarray], float], n_params: int,
                        options: OptimizerOptions = OptimizerOptions(),
                        label: str = "") -> MultiStartResult:
    """Minimise `objective` from several starts and keep the best finite result"""
    if n_params == 0:
        value = float(objective(np.zeros(0)))
        if not np.isfinite(value):
            raise ConvergenceError(f"{label}: objective is not finite", best={"objective": value})
        return MultiStartResult(np.zeros(0), value, True, 1, [])

    def guarded(u):
        with np.errstate(all="ignore"):
            value = objective(u)
        return value if np.isfinite(value) else PENALTY

    rng = np.random.default_rng(options.seed)
    starts = [np.zeros(n_params)]
    starts += [options.perturbation * rng.standard_normal(n_params) for _ in range(options.restarts - 1)]
    budget = options.evals_per_param * n_params

    best = None
    total_evals = 0
    history = []
    for i, start in enumerate(starts):
        try:
            res = minimize(guarded, start, method=options.method,
                           options=_scipy_options(options.method, options, budget, n_params))
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as e:
            logger.debug(f"{label}: restart {i} raised {e}")
            history.append({"restart": i, "objective": None, "converged": False})
            continue
        total_evals += int(res.nfev)
        fun = float(res.fun)
        finite = np.isfinite(fun) and fun < PENALTY
        history.append({"restart": i, "objective": fun if finite else None,
                        "converged": bool(res.success) and finite})
        logger.debug(f"{label}: restart {i} objective={fun:.10g} success={res.success} nfev={res.nfev}")
        if finite and (best is None or fun < best.fun):
            best = res

    if best is None:
        raise ConvergenceError(f"{label}: no optimizer restart produced a finite objective",
                               best={"restarts": history})

    converged = any(h["converged"] for h in history)
    if not converged:
        logger.warning(f"{label}: every restart exhausted its budget of {budget} evaluations")
    return MultiStartResult(np.asarray(best.x, dtype=float), float(best.fun), converged, total_evals, history)
