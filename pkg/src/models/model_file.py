# src/models/model_file.py
"""
Model JSON:

    {
      "variant": "SPK",
      "method": "ML",
      "n": 2, "p_rbd": 5, "g": 9.81,
      "hyper": {"gamma2": ..., "rho2": ..., "tau2": ..., "sigma2": ..., "pi_mean"/"pi_hat": [...]},
      "feature_map": {"d": 100, "m": 6, "seed": 1, "tau": ...} | null,
      "theta": [...]
    }

Omega is never stored; it is regenerated from (d, m, seed).
"""

from __future__ import annotations

import pathlib
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.features.random_features import FeatureMap
from src.models.variants import Hyperparameters, ModelSpec, ModelVariant
from src.utils.errors import InvalidInputError
from src.utils.io import PathLike, load_json, save_json


def model_to_dict(spec: ModelSpec, theta: np.ndarray, method: Optional[str] = None) -> Dict[str, Any]:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != spec.p_theta:
        raise InvalidInputError(f"theta has {theta.size} entries, expected {spec.p_theta}")
    return {
        "variant": spec.variant.value,
        "method": method,
        "n": int(spec.n),
        "p_rbd": int(spec.p_rbd),
        "g": float(spec.g),
        "hyper": spec.hyper.to_dict(),
        "feature_map": spec.feature_map.to_dict() if spec.feature_map is not None else None,
        "theta": [float(v) for v in theta],
    }


def model_from_dict(data: Dict[str, Any]) -> Tuple[ModelSpec, np.ndarray, Optional[str]]:
    try:
        variant = ModelVariant(data["variant"])
        fm_data = data.get("feature_map")
        spec = ModelSpec(
            variant=variant,
            hyper=Hyperparameters.from_dict(data["hyper"]),
            feature_map=FeatureMap.from_dict(fm_data) if fm_data else None,
            n=int(data["n"]),
            p_rbd=int(data["p_rbd"]),
            g=float(data["g"]),
        )
        theta = np.asarray(data["theta"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidInputError(f"Malformed model file: {e}") from e

    if theta.size != spec.p_theta:
        raise InvalidInputError(f"Model file theta has {theta.size} entries, expected {spec.p_theta}")
    return spec, theta, data.get("method")


def save_model(path: PathLike, spec: ModelSpec, theta: np.ndarray, method: Optional[str] = None) -> pathlib.Path:
    return save_json(path, model_to_dict(spec, theta, method))


def load_model(path: PathLike) -> Tuple[ModelSpec, np.ndarray, Optional[str]]:
    return model_from_dict(load_json(path))
