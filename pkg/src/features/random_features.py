# src/features/random_features.py
"""
Gaussian kernel and its random-feature approximation.

    K(xa, xb) = exp(-||xa - xb||^2 / (2 tau^2))
    phi(x)    = (1/sqrt(d)) [cos(W x / tau); sin(W x / tau)],  W_ij ~ N(0, 1)

so that phi(xa).T phi(xb) approximates K(xa, xb) and phi(x).T phi(x) = 1.
Frequencies are drawn once from the seed; changing tau only rescales them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

from src.utils.errors import InvalidInputError


# ---------- Exact kernel ----------


def kernel_exact(xa: np.ndarray, xb: np.ndarray, tau: float) -> float:
    """Gaussian kernel value in (0, 1]."""
    xa = np.asarray(xa, dtype=float).reshape(-1)
    xb = np.asarray(xb, dtype=float).reshape(-1)
    if xa.shape != xb.shape:
        raise InvalidInputError(f"Kernel inputs differ in length: {xa.size} vs {xb.size}")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(xb))):
        raise InvalidInputError("Kernel inputs must be finite")
    if not (np.isfinite(tau) and tau > 0.0):
        raise InvalidInputError(f"Kernel width must be positive, got {tau}")
    diff = xa - xb
    return float(np.exp(-(diff @ diff) / (2.0 * tau**2)))


def median_sq_distance(X: np.ndarray, max_points: int = 500) -> float:
    """
    Median of ||x_i - x_j||^2 over distinct pairs, on at most max_points rows
    taken evenly through the block (the usual scale for kernel widths).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise InvalidInputError("Need at least two inputs for a pairwise distance")
    if X.shape[0] > max_points:
        X = X[np.linspace(0, X.shape[0] - 1, max_points).astype(int)]
    med = float(np.median(pdist(X, metric="sqeuclidean")))
    if not med > 0.0:
        raise InvalidInputError("Inputs are all identical; no distance scale")
    return med


# ---------- Frequencies ----------


def sample_frequencies(d: int, m: int, seed: int) -> np.ndarray:
    """
    Frequency matrix Omega in R^{d x m} with i.i.d. standard normal entries.

    Deterministic for a fixed (d, m, seed).
    """
    if int(d) < 1 or int(m) < 1:
        raise InvalidInputError(f"d and m must be >= 1, got d={d}, m={m}")
    rng = np.random.default_rng(int(seed))
    return rng.standard_normal((int(d), int(m)))


# ---------- Feature map ----------


@dataclass(frozen=True)
class FeatureMap:
    """
    Random-feature map phi: R^m -> R^{2d}.

    Only (d, m, seed, tau) are persisted; Omega is regenerated from them.
    """

    d: int
    m: int
    tau: float
    seed: int = 0
    omega: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if int(self.d) < 1:
            raise InvalidInputError(f"Feature count d must be >= 1, got {self.d}")
        if not (np.isfinite(self.tau) and self.tau > 0.0):
            raise InvalidInputError(f"Kernel width tau must be positive, got {self.tau}")

        omega = self.omega
        if omega is None:
            omega = sample_frequencies(self.d, self.m, self.seed)
        else:
            omega = np.asarray(omega, dtype=float)
            if omega.shape != (self.d, self.m):
                raise InvalidInputError(f"Omega shape {omega.shape} does not match ({self.d}, {self.m})")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)

    @property
    def dim(self) -> int:
        """Length of phi(x), i.e. 2d."""
        return 2 * self.d

    def with_tau(self, tau: float) -> "FeatureMap":
        """Same frequencies, new width."""
        return FeatureMap(d=self.d, m=self.m, tau=float(tau), seed=self.seed, omega=self.omega)

    def to_dict(self) -> dict:
        return {"d": int(self.d), "m": int(self.m), "seed": int(self.seed), "tau": float(self.tau)}

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureMap":
        return cls(d=int(data["d"]), m=int(data["m"]), tau=float(data["tau"]), seed=int(data["seed"]))


def feature_matrix(X: np.ndarray, fm: FeatureMap) -> np.ndarray:
    """phi for every row of an (N, m) block, returned as (N, 2d)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != fm.m:
        raise InvalidInputError(f"Input width {X.shape[1]} does not match feature map m = {fm.m}")
    proj = X @ fm.omega.T / fm.tau
    return np.hstack([np.cos(proj), np.sin(proj)]) / np.sqrt(fm.d)


def feature_map(x: np.ndarray, fm: FeatureMap) -> np.ndarray:
    """phi(x) in R^{2d}."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != fm.m:
        raise InvalidInputError(f"Input length {x.size} does not match feature map m = {fm.m}")
    return feature_matrix(x[None, :], fm)[0]
