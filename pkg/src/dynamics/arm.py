# src/dynamics/arm.py
"""
Two-link planar manipulator: joint state, physical parameters, base inertial
parameters, RBD regressor and the torque simulator.

The regressor uses the standard C(q, dq) dq Coriolis form. Friction is kept out
of the regressor on purpose so a purely parametric model stays misspecified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from src.utils.errors import InvalidInputError

N_JOINTS = 2
N_BASE_PARAMS = 5
GRAVITY = 9.81


# ---------- Joint state ----------


@dataclass(frozen=True)
class JointState:
    """
    Positions, velocities and accelerations of n joints.

    Fields:
      - q:   joint angles (rad)
      - dq:  joint velocities (rad/s)
      - ddq: joint accelerations (rad/s^2)
    """

    q: np.ndarray
    dq: np.ndarray
    ddq: np.ndarray

    def __post_init__(self) -> None:
        q = np.asarray(self.q, dtype=float).reshape(-1)
        dq = np.asarray(self.dq, dtype=float).reshape(-1)
        ddq = np.asarray(self.ddq, dtype=float).reshape(-1)

        if q.size < 1 or not (q.size == dq.size == ddq.size):
            raise InvalidInputError(
                f"q, dq, ddq must share a length n >= 1, got {q.size}, {dq.size}, {ddq.size}"
            )
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(dq)) and np.all(np.isfinite(ddq))):
            raise InvalidInputError("JointState entries must be finite")

        object.__setattr__(self, "q", q)
        object.__setattr__(self, "dq", dq)
        object.__setattr__(self, "ddq", ddq)

    @property
    def n(self) -> int:
        return int(self.q.size)

    @property
    def x(self) -> np.ndarray:
        """Stacked input location [q; dq; ddq] of length 3n."""
        return np.concatenate([self.q, self.dq, self.ddq])

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "JointState":
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size == 0 or x.size % 3 != 0:
            raise InvalidInputError(f"Stacked state length must be a positive multiple of 3, got {x.size}")
        n = x.size // 3
        return cls(q=x[:n], dq=x[n : 2 * n], ddq=x[2 * n :])


# ---------- Physical parameters ----------


@dataclass(frozen=True)
class ArmParameters:
    """
    Physical description of the simulated arm. Tuples are (link 1, link 2).
    """

    masses: Tuple[float, float] = (1.0, 0.8)
    lengths: Tuple[float, float] = (0.5, 0.4)
    com: Tuple[float, float] = (0.25, 0.2)
    inertias: Tuple[float, float] = (1.0 * 0.5**2 / 12.0, 0.8 * 0.4**2 / 12.0)
    viscous: Tuple[float, float] = (0.3, 0.2)
    coulomb: Tuple[float, float] = (0.4, 0.25)
    g: float = GRAVITY
    sigma_sim: float = 0.05

    @classmethod
    def uniform_rods(
        cls,
        masses: Tuple[float, float],
        lengths: Tuple[float, float],
        **kwargs,
    ) -> "ArmParameters":
        """Centers of mass at mid-link and inertias m l^2 / 12."""
        com = (lengths[0] / 2.0, lengths[1] / 2.0)
        inertias = (masses[0] * lengths[0] ** 2 / 12.0, masses[1] * lengths[1] ** 2 / 12.0)
        return cls(masses=tuple(masses), lengths=tuple(lengths), com=com, inertias=inertias, **kwargs)

    def validate(self) -> "ArmParameters":
        pairs = {
            "masses": self.masses,
            "lengths": self.lengths,
            "com": self.com,
            "inertias": self.inertias,
            "viscous": self.viscous,
            "coulomb": self.coulomb,
        }
        for name, values in pairs.items():
            if len(values) != N_JOINTS:
                raise InvalidInputError(f"arm.{name} must have {N_JOINTS} entries, got {len(values)}")
            if not all(np.isfinite(v) for v in values):
                raise InvalidInputError(f"arm.{name} must be finite")

        for name in ("masses", "lengths", "inertias"):
            if any(v <= 0.0 for v in pairs[name]):
                raise InvalidInputError(f"arm.{name} must be strictly positive")
        for name in ("viscous", "coulomb"):
            if any(v < 0.0 for v in pairs[name]):
                raise InvalidInputError(f"arm.{name} must be nonnegative")
        if any(c < 0.0 or c > l for c, l in zip(self.com, self.lengths)):
            raise InvalidInputError("arm.com must lie within [0, length] for each link")
        if not np.isfinite(self.g):
            raise InvalidInputError("arm.g must be finite")
        if not np.isfinite(self.sigma_sim) or self.sigma_sim < 0.0:
            raise InvalidInputError("arm.sigma_sim must be finite and nonnegative")
        return self


@dataclass(frozen=True)
class BaseParameters:
    """Base inertial parameter vector pi (length 5) of the planar arm."""

    pi: np.ndarray = field(default_factory=lambda: np.zeros(N_BASE_PARAMS))

    def __post_init__(self) -> None:
        pi = np.asarray(self.pi, dtype=float).reshape(-1)
        if pi.size != N_BASE_PARAMS:
            raise InvalidInputError(f"pi must have {N_BASE_PARAMS} entries, got {pi.size}")
        object.__setattr__(self, "pi", pi)


def base_parameters(arm: ArmParameters) -> BaseParameters:
    """Collapse the physical parameters into the identifiable combinations."""
    arm.validate()
    m1, m2 = arm.masses
    l1, _ = arm.lengths
    lc1, lc2 = arm.com
    i1, i2 = arm.inertias

    pi = np.array(
        [
            m1 * lc1**2 + m2 * l1**2 + i1,
            m2 * lc2**2 + i2,
            m2 * l1 * lc2,
            m1 * lc1 + m2 * l1,
            m2 * lc2,
        ]
    )
    return BaseParameters(pi=pi)


# ---------- Regressor ----------


def _split_states(X: np.ndarray) -> Tuple[np.ndarray, ...]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != 3 * N_JOINTS:
        raise InvalidInputError(
            f"The planar arm regressor needs n = {N_JOINTS} joints (m = {3 * N_JOINTS}), "
            f"got input width {X.shape[-1]}"
        )
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("Regressor inputs must be finite")
    return tuple(X[:, k] for k in range(3 * N_JOINTS))


def rbd_regressor_batch(X: np.ndarray, g: float = GRAVITY) -> np.ndarray:
    """
    RBD regressor for a block of stacked states.

    Args:
        X: (N, 6) array of [q1, q2, dq1, dq2, ddq1, ddq2] rows.
        g: Gravity (m/s^2).

    Returns:
        (N, 5, 2) array; entry [s] is psi(x_s) so that psi(x_s).T @ pi gives the
        friction-free joint torques.
    """
    q1, q2, dq1, dq2, ddq1, ddq2 = _split_states(X)
    c1, c2, s2 = np.cos(q1), np.cos(q2), np.sin(q2)
    c12 = np.cos(q1 + q2)
    zeros = np.zeros_like(q1)

    joint1 = np.stack(
        [
            ddq1,
            ddq1 + ddq2,
            (2.0 * ddq1 + ddq2) * c2 - (2.0 * dq1 * dq2 + dq2**2) * s2,
            g * c1,
            g * c12,
        ],
        axis=-1,
    )
    joint2 = np.stack(
        [
            zeros,
            ddq1 + ddq2,
            ddq1 * c2 + dq1**2 * s2,
            zeros,
            g * c12,
        ],
        axis=-1,
    )
    return np.stack([joint1, joint2], axis=-1)


def rbd_regressor(x: JointState, g: float = GRAVITY) -> np.ndarray:
    """psi(x) in R^{5 x 2} for a single joint state."""
    if x.n != N_JOINTS:
        raise InvalidInputError(f"The planar arm regressor needs n = {N_JOINTS} joints, got {x.n}")
    return rbd_regressor_batch(x.x, g=g)[0]


def closed_form_torques(x: JointState, pi: np.ndarray, g: float = GRAVITY) -> np.ndarray:
    """
    Friction-free torques from the M(q) ddq + C(q, dq) dq + G(q) form, written
    directly in terms of the base parameters.
    """
    if x.n != N_JOINTS:
        raise InvalidInputError(f"Closed-form torques need n = {N_JOINTS} joints, got {x.n}")
    p1, p2, p3, p4, p5 = np.asarray(pi, dtype=float).reshape(-1)
    q1, q2 = x.q
    dq1, dq2 = x.dq
    c2, s2 = np.cos(q2), np.sin(q2)

    M = np.array(
        [
            [p1 + p2 + 2.0 * p3 * c2, p2 + p3 * c2],
            [p2 + p3 * c2, p2],
        ]
    )
    C = np.array(
        [
            [-p3 * s2 * dq2, -p3 * s2 * (dq1 + dq2)],
            [p3 * s2 * dq1, 0.0],
        ]
    )
    G = g * np.array([p4 * np.cos(q1) + p5 * np.cos(q1 + q2), p5 * np.cos(q1 + q2)])
    return M @ x.ddq + C @ x.dq + G


# ---------- Simulator ----------


def friction_torques(dq: np.ndarray, arm: ArmParameters) -> np.ndarray:
    """Viscous + Coulomb friction; sign(0) = 0 so a joint at rest feels none."""
    dq = np.asarray(dq, dtype=float)
    return np.asarray(arm.viscous) * dq + np.asarray(arm.coulomb) * np.sign(dq)


def sample_noise(seed: int, index: int, sigma: float, n: int = N_JOINTS) -> np.ndarray:
    """Measurement noise for one sample; a pure function of (seed, index)."""
    if sigma == 0.0:
        return np.zeros(n)
    rng = np.random.default_rng((int(seed), int(index)))
    return sigma * rng.standard_normal(n)


def simulate_torques(
    x: JointState,
    arm: ArmParameters,
    rng_seed: int,
    index: int = 0,
) -> np.ndarray:
    """
    Measured torques y = psi(x).T pi + f(dq) + e.

    Args:
        x: Joint state of the sample.
        arm: Physical parameters (validated here).
        rng_seed: Seed of the noise stream.
        index: Sample index inside the stream.

    Returns:
        Torque vector of length 2 (N m).
    """
    arm.validate()
    pi = base_parameters(arm).pi
    y = rbd_regressor(x, g=arm.g).T @ pi + friction_torques(x.dq, arm)
    return y + sample_noise(rng_seed, index, arm.sigma_sim)
