# src/models/design.py
"""
Per-variant layout of the unified linear model

    y_s = design(x_s) @ theta + mean(x_s) + e_s

Kernel blocks use the (phi.T kron I_n) layout: output row j carries phi_k at
column k * n + j.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np
from scipy.linalg import lstsq

from src.dynamics.arm import GRAVITY, JointState, rbd_regressor_batch
from src.dynamics.dataset import Dataset
from src.features.random_features import feature_matrix
from src.models.variants import ModelSpec, ModelVariant
from src.utils.errors import InvalidInputError, RankDeficiencyWarning

logger = logging.getLogger(__name__)


def _as_block(X: np.ndarray, spec: ModelSpec) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != 3 * spec.n:
        raise InvalidInputError(f"Input width {X.shape[1]} does not match 3 * n = {3 * spec.n}")
    return X


def kron_rows(phi: np.ndarray, n: int) -> np.ndarray:
    """(N, 2d) features -> (N, n, 2dn) blocks of phi(x).T kron I_n."""
    N, dim = phi.shape
    eye = np.eye(n)
    return (phi[:, None, :, None] * eye[None, :, None, :]).reshape(N, n, dim * n)


def rbd_rows(X: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """(N, n, p_rbd) blocks of psi(x).T."""
    return np.transpose(rbd_regressor_batch(X, g=spec.g), (0, 2, 1))


def build_design_batch(spec: ModelSpec, X: np.ndarray) -> np.ndarray:
    """
    Designs for a block of stacked states.

    Returns:
        (N, n, p_theta) array.
    """
    X = _as_block(X, spec)
    variant = spec.variant

    if variant is ModelVariant.P:
        return rbd_rows(X, spec)

    if spec.feature_map is None:
        raise InvalidInputError(f"{variant.value} needs a feature map")
    kernel = kron_rows(feature_matrix(X, spec.feature_map), spec.n)

    if variant is ModelVariant.SPK:
        return np.concatenate([rbd_rows(X, spec), kernel], axis=2)
    return kernel


def build_design(spec: ModelSpec, x: JointState) -> np.ndarray:
    """design(x) in R^{n x p_theta}."""
    if x.n != spec.n:
        raise InvalidInputError(f"State has {x.n} joints, model expects {spec.n}")
    return build_design_batch(spec, x.x)[0]


def build_prior(spec: ModelSpec) -> np.ndarray:
    """
    Diagonal of the prior covariance Sigma_0 (length p_theta).

    P -> gamma^2, NP/SP/SP2 -> rho^2, SPK -> [gamma^2 (p_rbd), rho^2 (2dn)].
    """
    hyper = spec.hyper
    variant = spec.variant

    if variant is ModelVariant.P:
        diag = np.full(spec.p_rbd, hyper.gamma2)
    elif variant is ModelVariant.SPK:
        kernel_dim = spec.p_theta - spec.p_rbd
        diag = np.concatenate([np.full(spec.p_rbd, hyper.gamma2), np.full(kernel_dim, hyper.rho2)])
    else:
        diag = np.full(spec.p_theta, hyper.rho2)

    if not np.all(np.isfinite(diag)) or np.any(diag <= 0.0):
        raise InvalidInputError("Prior variances must be positive and finite")
    return diag


def mean_batch(spec: ModelSpec, X: np.ndarray) -> np.ndarray:
    """psi(x).T pi for SP/SP2 (pi_mean / pi_hat); zeros for the other variants."""
    X = _as_block(X, spec)
    pi = spec.mean_pi
    if not spec.variant.has_mean:
        return np.zeros((X.shape[0], spec.n))
    if pi is None:
        raise InvalidInputError(f"{spec.variant.value} needs its pi vector")
    return np.einsum("snp,p->sn", rbd_rows(X, spec), pi)


def apply_mean(spec: ModelSpec, x: JointState, y: np.ndarray) -> np.ndarray:
    """Residual y - psi(x).T pi for SP/SP2; identity for the other variants."""
    y = np.asarray(y, dtype=float).reshape(-1)
    return y - mean_batch(spec, x.x)[0]


def stacked_regressor(X: np.ndarray, g: float) -> np.ndarray:
    """Psi with rows psi(x_s).T stacked over samples: (N * n, p)."""
    psi = rbd_regressor_batch(X, g=g)
    N, p, n = psi.shape
    return np.transpose(psi, (0, 2, 1)).reshape(N * n, p)


def ls_estimate_pi(ds: Dataset, g: float = GRAVITY) -> np.ndarray:
    """
    Ordinary least-squares base parameters from a dataset.

    Rank-deficient problems return the minimum-norm solution and emit a
    RankDeficiencyWarning.
    """
    if len(ds) == 0:
        raise InvalidInputError("Cannot estimate pi from an empty dataset")

    Psi = stacked_regressor(ds.X, g)
    y = ds.Y.reshape(-1)

    pi_hat, _, rank, _ = lstsq(Psi, y, lapack_driver="gelsd")
    if rank < Psi.shape[1]:
        msg = f"Stacked RBD regressor has rank {rank} < {Psi.shape[1]}; using the minimum-norm solution"
        logger.warning(msg)
        warnings.warn(msg, RankDeficiencyWarning, stacklevel=2)
    return np.asarray(pi_hat, dtype=float)
