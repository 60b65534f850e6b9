# src/hyper/fit_ml.py
"""
Marginal-likelihood hyperparameter estimation.

The simplex searches the log of the positive hyperparameters listed in
LOG_COORDINATES. SP profiles pi in closed form at every evaluation; SP2 fixes
pi_hat from a least-squares fit on the same window and fits the kernel to the
residuals.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.linalg import LinAlgError

from src.dynamics.arm import GRAVITY
from src.dynamics.dataset import Dataset
from src.features.random_features import FeatureMap, median_sq_distance
from src.hyper.nelder_mead import NelderMeadOptions, NelderMeadResult, minimize_nelder_mead
from src.hyper.nll import nll, profile_pi
from src.models.design import ls_estimate_pi, stacked_regressor
from src.models.variants import (
    LOG_COORDINATES,
    EstimationMethod,
    Hyperparameters,
    ModelSpec,
    ModelVariant,
    make_spec,
)
from src.utils.errors import EstimationError, InvalidInputError, RidgelineError

logger = logging.getLogger(__name__)

# Log-space edge of the initial simplex (a factor of e^0.5 per coordinate)
ML_INITIAL_STEP = 0.5
# Simplex restarts from the best vertex
ML_RESTARTS = 2

# Variants that also start from the NP kernel fit
WARM_STARTED = (ModelVariant.SP, ModelVariant.SPK)


@dataclass
class FitReport:
    """
    Outcome of one hyperparameter fit.

    Fields:
      - variant, method: what was fitted and how
      - hyper:       estimated hyperparameters
      - value:       final NLL (ML) or validation MSE (VS)
      - trace:       best NLL after each simplex iteration (ML) or MSE per grid point (VS)
      - iterations:  simplex iterations (ML) or grid size (VS)
      - evaluations: objective evaluations
      - seconds:     wall-clock time
      - converged:   tolerances met (always True for VS)
      - t:           samples used for fitting
      - start:       which starting point won ("default" or "np-warm" for ML, "grid" for VS)
    """

    variant: ModelVariant
    method: EstimationMethod
    hyper: Hyperparameters
    value: float
    trace: List[float] = field(default_factory=list)
    iterations: int = 0
    evaluations: int = 0
    seconds: float = 0.0
    converged: bool = True
    t: int = 0
    start: str = "default"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant.value,
            "method": self.method.value,
            "hyper": self.hyper.to_dict(),
            "value": float(self.value),
            "trace": [float(v) for v in self.trace],
            "iterations": int(self.iterations),
            "evaluations": int(self.evaluations),
            "seconds": float(self.seconds),
            "converged": bool(self.converged),
            "t": int(self.t),
            "start": self.start,
        }


# ---------- Starting point ----------


def default_initial_hyper(variant: ModelVariant, ds: Dataset, g: float = GRAVITY) -> Hyperparameters:
    """
    Data-driven xi0:
      - gamma2: mean square of the least-squares pi
      - rho2:   output variance (NP) or parametric residual variance (others)
      - tau2:   median squared pairwise input distance
      - sigma2: 10% of rho2 (P: the parametric residual variance)
    """
    if len(ds) < 2:
        raise InvalidInputError("Need at least two samples to initialize hyperparameters")

    pi_ls = ls_estimate_pi(ds, g)
    residual = ds.Y.reshape(-1) - stacked_regressor(ds.X, g) @ pi_ls
    floor = 1e-12 * max(float(np.mean(ds.Y**2)), 1.0)
    res_var = max(float(np.mean(residual**2)), floor)
    out_var = max(float(np.mean(np.var(ds.Y, axis=0))), floor)
    gamma2 = max(float(np.mean(pi_ls**2)), floor)

    if variant is ModelVariant.P:
        return Hyperparameters(gamma2=gamma2, sigma2=res_var)

    tau2 = median_sq_distance(ds.X)
    if variant is ModelVariant.NP:
        return Hyperparameters(rho2=out_var, tau2=tau2, sigma2=0.1 * out_var)

    hyper = Hyperparameters(rho2=res_var, tau2=tau2, sigma2=0.1 * res_var)
    if variant is ModelVariant.SP:
        return hyper.with_values(pi_mean=pi_ls)
    if variant is ModelVariant.SP2:
        return hyper.with_values(pi_hat=pi_ls)
    return hyper.with_values(gamma2=gamma2)


# ---------- Fit ----------


def _to_log(hyper: Hyperparameters, names) -> np.ndarray:
    return np.log(np.array([getattr(hyper, name) for name in names], dtype=float))


def kernel_warm_start(xi0: Hyperparameters, kernel_fit: Hyperparameters) -> Hyperparameters:
    """xi0 with the kernel width and noise level of an NP fit on the same window."""
    return xi0.with_values(tau2=kernel_fit.tau2, sigma2=kernel_fit.sigma2)


def fit_ml_report(
    variant: ModelVariant,
    init_ds: Dataset,
    xi0: Optional[Hyperparameters] = None,
    d: int = 100,
    feature_seed: int = 1,
    g: float = GRAVITY,
    feature_map: Optional[FeatureMap] = None,
    options: Optional[NelderMeadOptions] = None,
    warm_start: bool = True,
) -> FitReport:
    """
    Minimize the negative marginal log-likelihood over the variant's log-space
    coordinates.

    Args:
        variant: Model class.
        init_ds: Initialization window.
        xi0: Starting hyperparameters (default_initial_hyper when None). For
            SP2, xi0.pi_hat is kept fixed; when missing it is the
            least-squares pi of init_ds.
        d, feature_seed: Random-feature size and frequency seed.
        feature_map: Existing map to reuse (its frequencies are kept).
        options: Simplex options (log-space initial step 0.5 and
            ML_RESTARTS restarts by default).
        warm_start: For SP and SPK without an explicit xi0, also start from
            the NP fit's tau2 and sigma2 and keep the start with the lower NLL.

    Returns:
        FitReport with the estimated hyperparameters.
    """
    if len(init_ds) == 0:
        raise InvalidInputError("Cannot fit hyperparameters on an empty dataset")

    started = time.perf_counter()
    options = options or NelderMeadOptions(initial_step=ML_INITIAL_STEP, restarts=ML_RESTARTS)
    starts = []
    extra_evaluations = 0
    if xi0 is None:
        xi0 = default_initial_hyper(variant, init_ds, g)
        if warm_start and variant in WARM_STARTED:
            try:
                kernel = fit_ml_report(
                    ModelVariant.NP, init_ds, d=d, feature_seed=feature_seed, g=g, feature_map=feature_map, options=options
                )
            except EstimationError as e:
                logger.warning(f"{variant.value}-ML: np-warm start skipped ({e})")
            else:
                extra_evaluations = kernel.evaluations
                starts.append(("np-warm", kernel_warm_start(xi0, kernel.hyper)))
    if variant is ModelVariant.SP and xi0.pi_mean is None:
        xi0 = xi0.with_values(pi_mean=ls_estimate_pi(init_ds, g))
    if variant is ModelVariant.SP2 and xi0.pi_hat is None:
        xi0 = xi0.with_values(pi_hat=ls_estimate_pi(init_ds, g))
    starts.insert(0, ("default", xi0))

    template: ModelSpec = make_spec(
        variant, xi0, n=init_ds.n, d=d, feature_seed=feature_seed, g=g, feature_map=feature_map
    )
    names = LOG_COORDINATES[variant]
    # SP drops pi_mean so every evaluation profiles it
    base = xi0.with_values(pi_mean=None) if variant is ModelVariant.SP else xi0

    def hyper_at(log_xi: np.ndarray) -> Hyperparameters:
        return base.with_values(**{name: float(math.exp(v)) for name, v in zip(names, log_xi)})

    def objective(log_xi: np.ndarray) -> float:
        try:
            return nll(template, hyper_at(log_xi), init_ds).value
        except (RidgelineError, LinAlgError, OverflowError):
            return math.inf

    best: Optional[NelderMeadResult] = None
    best_start = ""
    evaluations = extra_evaluations
    for idx, (start_name, start) in enumerate(starts):
        x0 = _to_log(start, names)
        try:
            # surfaces the real error when the start itself is invalid
            nll(template, hyper_at(x0), init_ds)
            result = minimize_nelder_mead(objective, x0, options)
        except (RidgelineError, LinAlgError) as e:
            if idx == 0:
                raise EstimationError(f"{variant.value}-ML fit failed: {e}") from e
            logger.warning(f"{variant.value}-ML: {start_name} start skipped ({e})")
            continue
        evaluations += result.evaluations
        logger.debug(f"{variant.value}-ML: {start_name} start reached nll {result.value:.6g}")
        # ties keep the earlier start
        if best is None or result.value < best.value:
            best, best_start = result, start_name

    hyper = hyper_at(best.x)
    if variant is ModelVariant.SP:
        hyper = hyper.with_values(pi_mean=profile_pi(template, hyper, init_ds))
    hyper.validate_for(variant)

    seconds = time.perf_counter() - started
    logger.info(
        f"{variant.value}-ML: nll {best.value:.6g} from the {best_start} start after {best.iterations} iterations "
        f"({evaluations} evaluations, {seconds:.1f}s)"
    )
    return FitReport(
        variant=variant,
        method=EstimationMethod.ML,
        hyper=hyper,
        value=best.value,
        trace=best.trace,
        iterations=best.iterations,
        evaluations=evaluations,
        seconds=seconds,
        converged=best.converged,
        t=len(init_ds),
        start=best_start,
    )


def fit_ml(
    variant: ModelVariant,
    init_ds: Dataset,
    xi0: Optional[Hyperparameters] = None,
    **kwargs: Any,
) -> Hyperparameters:
    """xi_hat = argmin nll(xi). See fit_ml_report for the options."""
    return fit_ml_report(variant, init_ds, xi0, **kwargs).hyper
