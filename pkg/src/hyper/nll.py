# src/hyper/nll.py
"""
Negative marginal log-likelihood of y = Phi theta + e with theta ~ N(0, Sigma_0)
and e ~ N(0, sigma^2 I):

    L = 1/2 log det V + 1/2 y.T V^{-1} y + (tn/2) log(2 pi),   V = Phi Sigma_0 Phi.T + sigma^2 I

V (tn x tn) is never formed. With P = Sigma_0^{1/2} and
B = I_p + P Phi.T Phi P / sigma^2 = L_B L_B.T:

    log det V     = tn log sigma^2 + log det B
    a.T V^{-1} b  = (a.T b - (L_B^{-1} P Phi.T a).T (L_B^{-1} P Phi.T b) / sigma^2) / sigma^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, solve_triangular

from src.dynamics.dataset import Dataset
from src.estimator.batch import stack_samples
from src.models.design import build_design_batch, build_prior, mean_batch, stacked_regressor
from src.models.variants import Hyperparameters, ModelSpec, ModelVariant
from src.utils.errors import InvalidInputError, SingularSystemError

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class NllEvaluation:
    """value = logdet_term + quadratic_term + constant_term."""

    value: float
    logdet_term: float
    quadratic_term: float
    constant_term: float
    t: int


class WoodburySolver:
    """Weight-space view of V^{-1} for one (Phi, Sigma_0, sigma^2)."""

    def __init__(self, Phi: np.ndarray, prior_var: np.ndarray, sigma2: float):
        if not (math.isfinite(sigma2) and sigma2 > 0.0):
            raise InvalidInputError(f"sigma2 must be positive and finite, got {sigma2}")
        prior_var = np.asarray(prior_var, dtype=float).reshape(-1)
        if np.any(prior_var <= 0.0) or not np.all(np.isfinite(prior_var)):
            raise InvalidInputError("Prior variances must be positive and finite")

        self.Phi = Phi
        self.sigma2 = float(sigma2)
        self.scale = np.sqrt(prior_var)

        gram = Phi.T @ Phi
        B = np.eye(gram.shape[0]) + (self.scale[:, None] * gram * self.scale[None, :]) / self.sigma2
        try:
            self.L = cholesky(B, lower=True)
        except LinAlgError as e:
            raise SingularSystemError(f"Inner p x p matrix is not positive definite: {e}") from e

        rows = Phi.shape[0]
        self.logdet_v = rows * math.log(self.sigma2) + 2.0 * float(np.sum(np.log(np.diag(self.L))))

    def _whiten(self, a: np.ndarray) -> np.ndarray:
        return solve_triangular(self.L, self.scale[:, None] * (self.Phi.T @ a), lower=True)

    def inner(self, a: np.ndarray, b: Optional[np.ndarray] = None) -> np.ndarray:
        """a.T V^{-1} b for (tn,) or (tn, k) blocks."""
        a2 = a.reshape(a.shape[0], -1)
        b2 = a2 if b is None else b.reshape(b.shape[0], -1)
        wa = self._whiten(a2)
        wb = wa if b is None else self._whiten(b2)
        return (a2.T @ b2 - wa.T @ wb / self.sigma2) / self.sigma2


def nll_from_blocks(Phi: np.ndarray, y: np.ndarray, prior_var: np.ndarray, sigma2: float, t: int) -> NllEvaluation:
    """Woodbury evaluation on an already stacked regression."""
    if y.size == 0:
        raise InvalidInputError("Cannot evaluate the marginal likelihood on an empty dataset")
    solver = WoodburySolver(Phi, prior_var, sigma2)
    quad = float(solver.inner(y)[0, 0])
    logdet_term = 0.5 * solver.logdet_v
    quadratic_term = 0.5 * quad
    constant_term = 0.5 * y.size * LOG_2PI
    return NllEvaluation(
        value=logdet_term + quadratic_term + constant_term,
        logdet_term=logdet_term,
        quadratic_term=quadratic_term,
        constant_term=constant_term,
        t=int(t),
    )


def nll_dense(Phi: np.ndarray, y: np.ndarray, prior_var: np.ndarray, sigma2: float, t: int) -> NllEvaluation:
    """Same quantity through the explicit tn x tn covariance (small problems only)."""
    if y.size == 0:
        raise InvalidInputError("Cannot evaluate the marginal likelihood on an empty dataset")
    V = (Phi * np.asarray(prior_var)[None, :]) @ Phi.T + sigma2 * np.eye(Phi.shape[0])
    try:
        factor = cho_factor(V, lower=True)
    except LinAlgError as e:
        raise SingularSystemError(f"V is not positive definite: {e}") from e
    logdet_term = float(np.sum(np.log(np.diag(factor[0]))))
    quadratic_term = 0.5 * float(y @ cho_solve(factor, y))
    constant_term = 0.5 * y.size * LOG_2PI
    return NllEvaluation(
        value=logdet_term + quadratic_term + constant_term,
        logdet_term=logdet_term,
        quadratic_term=quadratic_term,
        constant_term=constant_term,
        t=int(t),
    )


# ---------- Model-level entry points ----------


def _kernel_layout(spec_template: ModelSpec, hyper: Hyperparameters) -> ModelSpec:
    """NP spec with the candidate rho/tau/sigma, used for the SP kernel block."""
    kernel_hyper = Hyperparameters(rho2=hyper.rho2, tau2=hyper.tau2, sigma2=hyper.sigma2)
    return ModelSpec(
        variant=ModelVariant.NP,
        hyper=kernel_hyper,
        feature_map=spec_template.feature_map.with_tau(math.sqrt(hyper.tau2)),
        n=spec_template.n,
        p_rbd=spec_template.p_rbd,
        g=spec_template.g,
    )


def profile_pi(spec_template: ModelSpec, hyper: Hyperparameters, ds: Dataset) -> np.ndarray:
    """
    Generalized least-squares pi for the RBD-mean model at fixed (rho2, tau2, sigma2):

        pi_hat = (Psi.T V^{-1} Psi)^{-1} Psi.T V^{-1} y

    which minimizes the marginal likelihood over pi.
    """
    if len(ds) == 0:
        raise InvalidInputError("Cannot profile pi on an empty dataset")
    kernel_spec = _kernel_layout(spec_template, hyper)
    Phi, y = stack_samples(build_design_batch(kernel_spec, ds.X), ds.Y)
    Psi = stacked_regressor(ds.X, spec_template.g)

    solver = WoodburySolver(Phi, build_prior(kernel_spec), hyper.sigma2)
    M = solver.inner(Psi)
    rhs = solver.inner(Psi, y).reshape(-1)
    try:
        factor = cho_factor(M, lower=True)
    except LinAlgError as e:
        raise SingularSystemError(f"Psi.T V^-1 Psi is rank deficient: {e}") from e
    if np.linalg.cond(M) > 1e14:
        raise SingularSystemError("Psi.T V^-1 Psi is numerically rank deficient")
    return cho_solve(factor, rhs)


def stacked_problem(spec: ModelSpec, ds: Dataset):
    """(Phi, mean-corrected y, prior variances) of a dataset under a spec."""
    residual = ds.Y - mean_batch(spec, ds.X)
    Phi, y = stack_samples(build_design_batch(spec, ds.X), residual)
    return Phi, y, build_prior(spec)


def nll(spec_template: ModelSpec, hyper: Hyperparameters, ds: Dataset) -> NllEvaluation:
    """
    Marginal likelihood of the dataset under the template's variant with
    hyperparameters `hyper`. The feature map keeps the template's frequencies
    and is rescaled to the candidate tau. For SP without pi_mean, pi is profiled.
    """
    if len(ds) == 0:
        raise InvalidInputError("Cannot evaluate the marginal likelihood on an empty dataset")

    if spec_template.variant is ModelVariant.SP and hyper.pi_mean is None:
        hyper = hyper.with_values(pi_mean=profile_pi(spec_template, hyper, ds))

    spec = spec_template.with_hyper(hyper)
    Phi, y, prior_var = stacked_problem(spec, ds)
    return nll_from_blocks(Phi, y, prior_var, hyper.sigma2, len(ds))
