# src/models/variants.py
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.dynamics.arm import GRAVITY, N_BASE_PARAMS
from src.features.random_features import FeatureMap
from src.utils.errors import InvalidInputError


class ModelVariant(str, Enum):
    """
    P    parametric RBD model
    NP   random-feature kernel model
    SP   kernel model with RBD mean, pi estimated with the hyperparameters
    SP2  kernel model on residuals of a fixed least-squares RBD fit
    SPK  RBD + kernel in a joint prior (RBD kernel)
    """

    P = "P"
    NP = "NP"
    SP = "SP"
    SP2 = "SP2"
    SPK = "SPK"

    @property
    def uses_features(self) -> bool:
        return self is not ModelVariant.P

    @property
    def uses_rbd_block(self) -> bool:
        return self in (ModelVariant.P, ModelVariant.SPK)

    @property
    def has_mean(self) -> bool:
        return self in (ModelVariant.SP, ModelVariant.SP2)


class EstimationMethod(str, Enum):
    ML = "ML"
    VS = "VS"


# Which hyperparameters each variant needs
REQUIRED_HYPER: Dict[ModelVariant, Tuple[str, ...]] = {
    ModelVariant.P: ("gamma2", "sigma2"),
    ModelVariant.NP: ("rho2", "tau2", "sigma2"),
    ModelVariant.SP: ("pi_mean", "rho2", "tau2", "sigma2"),
    ModelVariant.SP2: ("pi_hat", "rho2", "tau2", "sigma2"),
    ModelVariant.SPK: ("gamma2", "rho2", "tau2", "sigma2"),
}

# Search coordinates (log-space) of the marginal likelihood fit
LOG_COORDINATES: Dict[ModelVariant, Tuple[str, ...]] = {
    ModelVariant.P: ("gamma2", "sigma2"),
    ModelVariant.NP: ("rho2", "tau2", "sigma2"),
    ModelVariant.SP: ("rho2", "tau2", "sigma2"),
    ModelVariant.SP2: ("rho2", "tau2", "sigma2"),
    ModelVariant.SPK: ("gamma2", "rho2", "tau2", "sigma2"),
}

# Validation-set estimation is only offered where the grid stays small
VS_VARIANTS = (ModelVariant.NP, ModelVariant.SP2)


def parse_run_label(label: str) -> Tuple[ModelVariant, Optional[EstimationMethod]]:
    """
    Parse "NP-ML", "SP2-VS", "P" ... into (variant, method).

    A bare variant defaults to ML.
    """
    raw = label.strip().upper()
    if "-" in raw:
        v_raw, m_raw = raw.split("-", 1)
    else:
        v_raw, m_raw = raw, "ML"
    try:
        variant = ModelVariant(v_raw)
        method = EstimationMethod(m_raw)
    except ValueError as e:
        raise InvalidInputError(f"Unknown run label {label!r}") from e
    if method is EstimationMethod.VS and variant not in VS_VARIANTS:
        raise InvalidInputError(f"Validation-set estimation is not offered for {variant.value}")
    return variant, method


# ---------- Hyperparameters ----------


@dataclass(frozen=True)
class Hyperparameters:
    """
    Prior/noise parameters. Only the subset listed in REQUIRED_HYPER for a
    variant needs to be set.
    """

    gamma2: Optional[float] = None
    rho2: Optional[float] = None
    tau2: Optional[float] = None
    sigma2: Optional[float] = None
    pi_mean: Optional[np.ndarray] = field(default=None, compare=False)
    pi_hat: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        for name in ("pi_mean", "pi_hat"):
            value = getattr(self, name)
            if value is not None:
                arr = np.asarray(value, dtype=float).reshape(-1)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    def validate_for(self, variant: ModelVariant) -> "Hyperparameters":
        for name in REQUIRED_HYPER[variant]:
            value = getattr(self, name)
            if value is None:
                raise InvalidInputError(f"{variant.value} requires hyperparameter {name}")
            if name.startswith("pi_"):
                if value.size != N_BASE_PARAMS or not np.all(np.isfinite(value)):
                    raise InvalidInputError(f"{name} must be {N_BASE_PARAMS} finite values")
            elif not (math.isfinite(value) and value > 0.0):
                raise InvalidInputError(f"{name} must be positive and finite, got {value}")
        return self

    def with_values(self, **values: Any) -> "Hyperparameters":
        return replace(self, **values)

    @property
    def tau(self) -> float:
        return math.sqrt(self.tau2)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for name in ("gamma2", "rho2", "tau2", "sigma2"):
            value = getattr(self, name)
            if value is not None:
                out[name] = float(value)
        for name in ("pi_mean", "pi_hat"):
            value = getattr(self, name)
            if value is not None:
                out[name] = [float(v) for v in value]
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Hyperparameters":
        return cls(**{k: (np.asarray(v, dtype=float) if k.startswith("pi_") else float(v)) for k, v in data.items()})


# ---------- Model layout ----------


@dataclass(frozen=True)
class ModelSpec:
    """
    Everything needed to lay out the unified model y = design(x) theta + mean.

    Fields:
      - variant:     model class
      - hyper:       hyperparameters (validated against the variant)
      - feature_map: random features (None for P); its tau must equal sqrt(tau2)
      - n:           output dimension
      - p_rbd:       RBD parameter count
      - g:           gravity used by the RBD regressor
    """

    variant: ModelVariant
    hyper: Hyperparameters
    feature_map: Optional[FeatureMap] = None
    n: int = 2
    p_rbd: int = N_BASE_PARAMS
    g: float = GRAVITY

    def __post_init__(self) -> None:
        self.hyper.validate_for(self.variant)
        if self.variant.uses_features:
            if self.feature_map is None:
                raise InvalidInputError(f"{self.variant.value} needs a feature map")
            if not math.isclose(self.feature_map.tau**2, self.hyper.tau2, rel_tol=1e-9):
                raise InvalidInputError(
                    f"Feature map width tau^2={self.feature_map.tau ** 2} disagrees with tau2={self.hyper.tau2}"
                )

    @property
    def p_theta(self) -> int:
        if self.variant is ModelVariant.P:
            return self.p_rbd
        kernel_part = self.feature_map.dim * self.n
        if self.variant is ModelVariant.SPK:
            return self.p_rbd + kernel_part
        return kernel_part

    @property
    def mean_pi(self) -> Optional[np.ndarray]:
        if self.variant is ModelVariant.SP:
            return self.hyper.pi_mean
        if self.variant is ModelVariant.SP2:
            return self.hyper.pi_hat
        return None

    def with_hyper(self, hyper: Hyperparameters) -> "ModelSpec":
        """Same layout and frequencies, new hyperparameters (tau rescales the map)."""
        fm = self.feature_map
        if fm is not None and hyper.tau2 is not None:
            fm = fm.with_tau(math.sqrt(hyper.tau2))
        return replace(self, hyper=hyper, feature_map=fm)


def make_spec(
    variant: ModelVariant,
    hyper: Hyperparameters,
    n: int = 2,
    d: int = 100,
    feature_seed: int = 1,
    g: float = GRAVITY,
    feature_map: Optional[FeatureMap] = None,
) -> ModelSpec:
    """
    Build a ModelSpec, sampling the feature map when the variant needs one and
    none is supplied. An existing map is rescaled to the hyperparameter tau.
    """
    hyper.validate_for(variant)
    fm = None
    if variant.uses_features:
        if feature_map is None:
            fm = FeatureMap(d=d, m=3 * n, tau=hyper.tau, seed=feature_seed)
        else:
            fm = feature_map.with_tau(hyper.tau)
    return ModelSpec(variant=variant, hyper=hyper, feature_map=fm, n=n, g=g)
