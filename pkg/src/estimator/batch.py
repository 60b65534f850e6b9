# src/estimator/batch.py
from __future__ import annotations

import math
from typing import Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from src.utils.errors import InvalidInputError, SingularSystemError


def stack_samples(designs: np.ndarray, ys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(t, n, p) designs and (t, n) outputs -> Phi (tn, p), y (tn,)."""
    designs = np.asarray(designs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if designs.ndim == 2:
        designs = designs[:, None, :]
    if ys.ndim == 1:
        ys = ys[:, None]
    if designs.shape[:2] != ys.shape:
        raise InvalidInputError(f"Designs {designs.shape} and outputs {ys.shape} disagree")
    t, n, p = designs.shape
    return designs.reshape(t * n, p), ys.reshape(t * n)


def normal_equations(
    designs: np.ndarray,
    ys: np.ndarray,
    prior_precision: np.ndarray,
    sigma2: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Dense A = Sigma_0^{-1} + Phi.T Phi / sigma^2 and b = Phi.T y / sigma^2."""
    if not (math.isfinite(sigma2) and sigma2 > 0.0):
        raise InvalidInputError(f"sigma2 must be positive and finite, got {sigma2}")
    Phi, y = stack_samples(designs, ys)
    prec = np.asarray(prior_precision, dtype=float).reshape(-1)
    if prec.size != Phi.shape[1]:
        raise InvalidInputError(f"Prior precision length {prec.size} does not match p = {Phi.shape[1]}")
    A = np.diag(prec) + Phi.T @ Phi / sigma2
    b = Phi.T @ y / sigma2
    return A, b


def batch_tikhonov(
    designs: np.ndarray,
    ys: np.ndarray,
    prior_precision: np.ndarray,
    sigma2: float,
) -> np.ndarray:
    """
    Direct solution of
        argmin (1/sigma^2) sum ||y_s - design_s theta||^2 + ||theta||^2_{Sigma_0^{-1}}
    by a dense Cholesky factorization of the normal matrix.
    """
    A, b = normal_equations(designs, ys, prior_precision, sigma2)
    try:
        factor = cho_factor(A, lower=False)
    except LinAlgError as e:
        raise SingularSystemError(f"Normal matrix is singular: {e}") from e
    return cho_solve(factor, b)
