# src/estimator/predict.py
import numpy as np

from src.dynamics.arm import JointState
from src.models.design import build_design_batch, mean_batch
from src.models.variants import ModelSpec
from src.utils.errors import InvalidInputError


def predict_batch(spec: ModelSpec, theta: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Predicted torques (N, n) for a block of stacked states."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != spec.p_theta:
        raise InvalidInputError(f"theta has {theta.size} entries, {spec.variant.value} expects {spec.p_theta}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return build_design_batch(spec, X) @ theta + mean_batch(spec, X)


def predict(spec: ModelSpec, theta: np.ndarray, x: JointState) -> np.ndarray:
    """y_hat = design(x) theta (+ psi(x).T pi for SP/SP2)."""
    if x.n != spec.n:
        raise InvalidInputError(f"State has {x.n} joints, model expects {spec.n}")
    return predict_batch(spec, theta, x.x)[0]
