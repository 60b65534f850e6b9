# src/hyper/fit_vs.py
"""
Validation-set hyperparameter selection: fit theta on a training window for
every candidate of a grid and keep the one with the smallest validation MSE.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError

from src.dynamics.arm import GRAVITY
from src.dynamics.dataset import Dataset
from src.estimator.batch import batch_tikhonov
from src.estimator.predict import predict_batch
from src.features.random_features import FeatureMap, median_sq_distance
from src.hyper.fit_ml import FitReport
from src.models.design import build_design_batch, build_prior, ls_estimate_pi, mean_batch, stacked_regressor
from src.models.variants import (
    VS_VARIANTS,
    EstimationMethod,
    Hyperparameters,
    ModelSpec,
    ModelVariant,
    make_spec,
)
from src.utils.errors import EstimationError, InvalidInputError, RidgelineError

logger = logging.getLogger(__name__)

TAU_SPAN = (1e-1, 1e2)  # times the median squared input distance
LAMBDA_SPAN = (1e-6, 1e0)  # lambda = sigma^2 / rho^2
GRID_POINTS = 7


@dataclass(frozen=True)
class HyperGrid:
    """Ordered, non-empty candidate list. Order decides ties."""

    candidates: Tuple[Hyperparameters, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise InvalidInputError("Hyperparameter grid is empty")

    def validate_for(self, variant: ModelVariant) -> "HyperGrid":
        for cand in self.candidates:
            cand.validate_for(variant)
        return self

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self) -> Iterator[Hyperparameters]:
        return iter(self.candidates)


def default_vs_grid(
    variant: ModelVariant,
    ds: Dataset,
    pi_hat: Optional[np.ndarray] = None,
    g: float = GRAVITY,
    points: int = GRID_POINTS,
) -> HyperGrid:
    """
    points x points grid, tau2 outer and lambda inner:
      - tau2   log-spaced over TAU_SPAN * median squared input distance
      - lambda log-spaced over LAMBDA_SPAN, rho2 = sigma2 / lambda
      - sigma2 fixed to the residual variance of a least-squares RBD fit on ds

    SP2 candidates carry pi_hat (the least-squares pi of ds when not given).
    """
    if variant not in VS_VARIANTS:
        raise InvalidInputError(f"No default validation grid for {variant.value}")
    if len(ds) < 2:
        raise InvalidInputError("Need at least two samples to build a grid")

    pi_ls = ls_estimate_pi(ds, g) if pi_hat is None else np.asarray(pi_hat, dtype=float)
    residual = ds.Y.reshape(-1) - stacked_regressor(ds.X, g) @ pi_ls
    sigma2 = max(float(np.mean(residual**2)), 1e-12 * max(float(np.mean(ds.Y**2)), 1.0))

    scale = median_sq_distance(ds.X)
    taus = np.logspace(math.log10(TAU_SPAN[0]), math.log10(TAU_SPAN[1]), points) * scale
    lambdas = np.logspace(math.log10(LAMBDA_SPAN[0]), math.log10(LAMBDA_SPAN[1]), points)

    extra = {"pi_hat": pi_ls} if variant is ModelVariant.SP2 else {}
    candidates = [
        Hyperparameters(rho2=sigma2 / lam, tau2=float(tau2), sigma2=sigma2, **extra)
        for tau2 in taus
        for lam in lambdas
    ]
    return HyperGrid(tuple(candidates))


def validation_mse(spec: ModelSpec, train_ds: Dataset, val_ds: Dataset) -> float:
    """(1/|val|) sum ||y - y_hat||^2 of the Tikhonov fit on train_ds."""
    if len(val_ds) == 0:
        raise InvalidInputError("Validation set is empty")
    if len(train_ds) == 0:
        raise InvalidInputError("Training set is empty")
    designs = build_design_batch(spec, train_ds.X)
    ys = train_ds.Y - mean_batch(spec, train_ds.X)
    theta = batch_tikhonov(designs, ys, 1.0 / build_prior(spec), spec.hyper.sigma2)
    err = val_ds.Y - predict_batch(spec, theta, val_ds.X)
    return float(np.sum(err**2) / len(val_ds))


def candidate_mses(
    variant: ModelVariant,
    train_ds: Dataset,
    val_ds: Dataset,
    candidates: Sequence[Hyperparameters],
    d: int = 100,
    feature_seed: int = 1,
    g: float = GRAVITY,
    feature_map: Optional[FeatureMap] = None,
) -> np.ndarray:
    """Validation MSE of each candidate, in the given order. Singular fits score +inf."""
    if len(val_ds) == 0:
        raise InvalidInputError("Validation set is empty")
    grid = HyperGrid(tuple(candidates)).validate_for(variant)
    template = make_spec(
        variant, grid.candidates[0], n=train_ds.n, d=d, feature_seed=feature_seed, g=g, feature_map=feature_map
    )

    scores = []
    for idx, cand in enumerate(grid):
        try:
            scores.append(validation_mse(template.with_hyper(cand), train_ds, val_ds))
        except (RidgelineError, LinAlgError) as e:
            logger.warning(f"{variant.value}-VS: candidate {idx} rejected ({e})")
            scores.append(math.inf)
    return np.asarray(scores, dtype=float)


def fit_vs_report(
    variant: ModelVariant,
    train_ds: Dataset,
    val_ds: Dataset,
    grid: HyperGrid,
    d: int = 100,
    feature_seed: int = 1,
    g: float = GRAVITY,
    feature_map: Optional[FeatureMap] = None,
) -> FitReport:
    """
    Exhaustive grid search. Candidates whose fit is singular score +inf.
    The first candidate with the minimal MSE wins.
    """
    started = time.perf_counter()
    values = candidate_mses(
        variant, train_ds, val_ds, grid.candidates, d=d, feature_seed=feature_seed, g=g, feature_map=feature_map
    )
    if not np.any(np.isfinite(values)):
        raise EstimationError(f"{variant.value}-VS: every grid candidate failed")
    best = int(np.argmin(values))

    seconds = time.perf_counter() - started
    logger.info(f"{variant.value}-VS: candidate {best}/{len(grid)} with val-MSE {values[best]:.6g} ({seconds:.1f}s)")
    return FitReport(
        variant=variant,
        method=EstimationMethod.VS,
        hyper=grid.candidates[best],
        value=float(values[best]),
        trace=[float(v) for v in values],
        iterations=len(grid),
        evaluations=len(grid),
        seconds=seconds,
        converged=True,
        t=len(train_ds) + len(val_ds),
        start="grid",
    )


def fit_vs(
    variant: ModelVariant,
    train_ds: Dataset,
    val_ds: Dataset,
    grid: HyperGrid,
    **kwargs,
) -> Hyperparameters:
    """xi_hat = argmin over the grid of the validation MSE."""
    return fit_vs_report(variant, train_ds, val_ds, grid, **kwargs).hyper
