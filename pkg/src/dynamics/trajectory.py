# src/dynamics/trajectory.py
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from src.dynamics.arm import JointState
from src.utils.errors import InvalidInputError


@dataclass(frozen=True)
class TrajectoryRegime:
    """
    Per-joint sinusoid q_i(t) = offset_i + amplitude_i * sin(2 pi f_i t + phase_i).

    Tuples are indexed by joint; all four must share the same length n.
    """

    amplitudes: Tuple[float, ...]
    frequencies: Tuple[float, ...]
    phases: Tuple[float, ...]
    offsets: Tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.amplitudes)

    def validate(self) -> "TrajectoryRegime":
        lengths = {len(self.amplitudes), len(self.frequencies), len(self.phases), len(self.offsets)}
        if len(lengths) != 1 or self.n < 1:
            raise InvalidInputError("Regime amplitudes/frequencies/phases/offsets must share a length n >= 1")
        values = self.amplitudes + self.frequencies + self.phases + self.offsets
        if not all(math.isfinite(v) for v in values):
            raise InvalidInputError("Regime values must be finite")
        if any(f < 0.0 for f in self.frequencies):
            raise InvalidInputError("Regime frequencies must be nonnegative")
        return self


def default_regimes() -> Dict[str, TrajectoryRegime]:
    """
    Regime A and regime B of the task-switch experiment. B moves the offsets and
    frequencies so the input distribution genuinely shifts.
    """
    regime_a = TrajectoryRegime(
        amplitudes=(0.6, 0.8),
        frequencies=(0.8, 0.5),
        phases=(0.0, math.pi / 2.0),
        offsets=(0.0, 0.5),
    )
    regime_b = TrajectoryRegime(
        amplitudes=regime_a.amplitudes,
        frequencies=(0.5, 0.9),
        phases=regime_a.phases,
        offsets=(regime_a.offsets[0] + 0.6, regime_a.offsets[1] - 0.8),
    )
    return {"A": regime_a, "B": regime_b}


def sample_count(duration: float, rate: float) -> int:
    """Number of samples in `duration` seconds at `rate` Hz; must be integral."""
    if rate <= 0.0 or duration < 0.0:
        raise InvalidInputError(f"rate must be > 0 and duration >= 0, got {rate} and {duration}")
    count = duration * rate
    rounded = int(round(count))
    if abs(count - rounded) > 1e-9 * max(1.0, abs(count)):
        raise InvalidInputError(f"duration * rate must be an integer, got {count}")
    return rounded


def trajectory_array(regime: TrajectoryRegime, duration: float, rate: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sample the regime at `rate` Hz.

    Returns:
        (t, X): timestamps (N,) and stacked states (N, 3n) with analytic
        first and second derivatives.
    """
    regime.validate()
    nyquist = rate / 2.0
    for i, f in enumerate(regime.frequencies):
        if f >= nyquist:
            raise InvalidInputError(
                f"Joint {i + 1} frequency {f} Hz aliases at {rate} Hz (must be < {nyquist})"
            )

    count = sample_count(duration, rate)
    t = np.arange(count, dtype=float) / rate

    amp = np.asarray(regime.amplitudes, dtype=float)
    omega = 2.0 * np.pi * np.asarray(regime.frequencies, dtype=float)
    phase = np.asarray(regime.phases, dtype=float)
    offset = np.asarray(regime.offsets, dtype=float)

    arg = np.outer(t, omega) + phase
    q = offset + amp * np.sin(arg)
    dq = amp * omega * np.cos(arg)
    ddq = -amp * omega**2 * np.sin(arg)

    return t, np.hstack([q, dq, ddq])


def gen_trajectory(regime: TrajectoryRegime, duration: float, rate: float) -> List[JointState]:
    """Sampled joint states of the regime (see trajectory_array)."""
    _, X = trajectory_array(regime, duration, rate)
    return [JointState.from_vector(row) for row in X]
