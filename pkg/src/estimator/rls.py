# src/estimator/rls.py
"""
Recursive regularized least squares on the information form.

The state keeps an upper-triangular R with R.T R = A, where

    A = Sigma_0^{-1} + (1/sigma^2) sum_s design_s.T design_s
    b = (1/sigma^2) sum_s design_s.T y_s

and theta_hat = A^{-1} b. Each output row of a sample is absorbed by one
Givens-rotation rank-one update of R, so an update costs O(n p^2) and never
refactorizes. Prior precision entries may be zero (unregularized coordinates);
solving then needs the data to excite those coordinates.

The state is single-writer: rls_update mutates it in place. Use copy() to
branch or snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import solve_triangular

from src.utils.errors import InvalidInputError, SingularSystemError

SINGULAR_RTOL = 1e-12


@njit(cache=True, nogil=True)
def _givens_rank_one(R, v):
    """In place: R.T R <- R.T R + v v.T for upper-triangular R (v is not modified)."""
    p = v.shape[0]
    x = v.copy()
    for k in range(p):
        xk = x[k]
        if xk == 0.0:
            continue
        rkk = R[k, k]
        r = math.sqrt(rkk * rkk + xk * xk)
        c = rkk / r
        s = xk / r
        R[k, k] = r
        for j in range(k + 1, p):
            rkj = R[k, j]
            R[k, j] = c * rkj + s * x[j]
            x[j] = c * x[j] - s * rkj


@dataclass
class RlsState:
    """
    Fields:
      - R:      upper-triangular Cholesky factor of A (p x p)
      - b:      information vector (p,)
      - t:      number of samples absorbed
      - sigma2: noise variance
    """

    R: np.ndarray
    b: np.ndarray
    t: int
    sigma2: float

    @property
    def p(self) -> int:
        return int(self.b.shape[0])

    @property
    def information(self) -> np.ndarray:
        """A = R.T R, assembled densely (for inspection and tests)."""
        return self.R.T @ self.R

    def copy(self) -> "RlsState":
        return RlsState(R=self.R.copy(), b=self.b.copy(), t=self.t, sigma2=self.sigma2)


def rls_init(prior_precision: np.ndarray, sigma2: float) -> RlsState:
    """
    Fresh state for a diagonal prior precision Sigma_0^{-1}.

    Args:
        prior_precision: Diagonal of Sigma_0^{-1} (entries >= 0).
        sigma2: Noise variance (> 0).
    """
    prec = np.asarray(prior_precision, dtype=float).reshape(-1)
    if not (math.isfinite(sigma2) and sigma2 > 0.0):
        raise InvalidInputError(f"sigma2 must be positive and finite, got {sigma2}")
    if prec.size < 1 or not np.all(np.isfinite(prec)):
        raise InvalidInputError("Prior precision must be a non-empty finite vector")
    if np.any(prec < 0.0):
        idx = int(np.flatnonzero(prec < 0.0)[0])
        raise InvalidInputError(f"Prior precision entry {idx} is negative ({prec[idx]})")

    return RlsState(R=np.diag(np.sqrt(prec)), b=np.zeros(prec.size), t=0, sigma2=float(sigma2))


def rls_update(state: RlsState, design: np.ndarray, y: np.ndarray) -> RlsState:
    """
    Absorb one sample (design in R^{n x p}, y in R^n, mean-corrected if the
    variant has a mean). Mutates and returns the state.
    """
    design = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if design.ndim == 1:
        design = design[None, :]
    if design.shape != (y.size, state.p):
        raise InvalidInputError(f"Design shape {design.shape} does not match (n={y.size}, p={state.p})")
    if not (np.all(np.isfinite(design)) and np.all(np.isfinite(y))):
        raise InvalidInputError("Design and y must be finite")

    scale = 1.0 / math.sqrt(state.sigma2)
    for row in design:
        _givens_rank_one(state.R, np.ascontiguousarray(row * scale))
    state.b += design.T @ y / state.sigma2
    state.t += 1
    return state


def rls_update_batch(state: RlsState, designs: np.ndarray, Y: np.ndarray) -> RlsState:
    """Stream a block of samples, in order."""
    for design, y in zip(designs, Y):
        rls_update(state, design, y)
    return state


def check_nonsingular(state: RlsState) -> None:
    diag = np.abs(np.diag(state.R))
    top = float(diag.max()) if diag.size else 0.0
    weak = np.flatnonzero(diag <= SINGULAR_RTOL * top) if top > 0.0 else np.arange(diag.size)
    if weak.size:
        idx = int(weak[0])
        raise SingularSystemError(
            f"Coordinate {idx} is insufficiently excited/unregularized: "
            "no prior precision and no data information",
            coordinate=idx,
        )


def rls_solve(state: RlsState) -> np.ndarray:
    """theta_hat = A^{-1} b by two triangular solves. Does not mutate the state."""
    check_nonsingular(state)
    z = solve_triangular(state.R, state.b, trans="T", lower=False)
    return solve_triangular(state.R, z, lower=False)


def posterior_covariance(state: RlsState) -> np.ndarray:
    """A^{-1}, the posterior covariance of theta under the Gaussian model."""
    check_nonsingular(state)
    R_inv = solve_triangular(state.R, np.eye(state.p), lower=False)
    return R_inv @ R_inv.T
