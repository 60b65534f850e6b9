# src/dynamics/dataset.py
"""
Timestamped (state, torque) samples plus CSV persistence.

CSV schema:
    t,q1..qn,dq1..dqn,ddq1..ddqn,y1..yn
one row per sample, '.' decimal point, UTF-8, '\\n' line endings.
"""

from __future__ import annotations

import pathlib
import re
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from src.dynamics.arm import (
    ArmParameters,
    JointState,
    base_parameters,
    friction_torques,
    rbd_regressor_batch,
    sample_noise,
)
from src.utils.errors import DatasetParseError, InvalidInputError
from src.utils.io import PathLike, atomic_write_text

DEFAULT_RATE = 20.0

# "Expected 13 fields in line 5, saw 14"
_PARSER_LINE = re.compile(r"line (\d+)")


def dataset_columns(n: int) -> List[str]:
    """Header of the dataset CSV for n joints."""
    cols = ["t"]
    for prefix in ("q", "dq", "ddq", "y"):
        cols.extend(f"{prefix}{i}" for i in range(1, n + 1))
    return cols


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Ordered samples of one recording.

    Fields:
      - t:    timestamps (N,), seconds, spacing 1/rate
      - X:    stacked joint states (N, 3n)
      - Y:    measured torques (N, n)
      - rate: sampling frequency (Hz)
    """

    t: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    rate: float = DEFAULT_RATE

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)

        if X.ndim != 2 or Y.ndim != 2:
            raise InvalidInputError("Dataset X and Y must be 2-D arrays")
        if not (t.shape[0] == X.shape[0] == Y.shape[0]):
            raise InvalidInputError(
                f"Dataset arrays disagree on sample count: t={t.shape[0]}, X={X.shape[0]}, Y={Y.shape[0]}"
            )
        if Y.shape[1] < 1 or X.shape[1] != 3 * Y.shape[1]:
            raise InvalidInputError(f"State width {X.shape[1]} does not match 3 * n for n = {Y.shape[1]}")
        if not self.rate > 0.0:
            raise InvalidInputError(f"Dataset rate must be positive, got {self.rate}")
        if t.size >= 2:
            steps = np.diff(t)
            if not np.allclose(steps, 1.0 / self.rate, rtol=1e-6, atol=1e-9):
                raise InvalidInputError("Dataset timestamps must be strictly increasing with spacing 1/rate")

        for arr in (t, X, Y):
            arr.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @classmethod
    def empty(cls, n: int, rate: float = DEFAULT_RATE) -> "Dataset":
        return cls(t=np.zeros(0), X=np.zeros((0, 3 * n)), Y=np.zeros((0, n)), rate=rate)

    @property
    def n(self) -> int:
        return int(self.Y.shape[1])

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.rate == other.rate
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.Y, other.Y)
        )

    def state(self, i: int) -> JointState:
        return JointState.from_vector(self.X[i])

    def window(self, sl: slice) -> "Dataset":
        """Contiguous sub-recording; timestamps are kept, not re-based."""
        return Dataset(t=self.t[sl], X=self.X[sl], Y=self.Y[sl], rate=self.rate)

    def to_frame(self) -> pd.DataFrame:
        data = np.hstack([self.t[:, None], self.X, self.Y])
        return pd.DataFrame(data, columns=dataset_columns(self.n))


# ---------- Simulation ----------


def simulate_dataset(
    t: np.ndarray,
    X: np.ndarray,
    arm: ArmParameters,
    seed: int,
    rate: float = DEFAULT_RATE,
) -> Dataset:
    """
    Torques for a whole trajectory. Sample k uses the noise stream (seed, k), so
    row k equals simulate_torques(state_k, arm, seed, index=k).
    """
    arm.validate()
    X = np.asarray(X, dtype=float)
    pi = base_parameters(arm).pi
    n = X.shape[1] // 3

    psi = rbd_regressor_batch(X, g=arm.g)
    Y = np.einsum("spn,p->sn", psi, pi) + friction_torques(X[:, n : 2 * n], arm)
    noise = np.zeros((X.shape[0], n))
    for k in range(X.shape[0]):
        noise[k] = sample_noise(seed, k, arm.sigma_sim, n)
    return Dataset(t=t, X=X, Y=Y + noise, rate=rate)


# ---------- CSV persistence ----------


def save_dataset(ds: Dataset, path: PathLike) -> pathlib.Path:
    """Write the dataset CSV atomically. Floats are written with round-trip precision."""
    text = ds.to_frame().to_csv(index=False, lineterminator="\n", float_format="%.17g")
    return atomic_write_text(path, text)


def _parse_header(columns: List[str]) -> int:
    width = len(columns)
    if width < 5 or (width - 1) % 4 != 0:
        raise DatasetParseError(f"line 1: malformed header with {width} columns", line=1)
    n = (width - 1) // 4
    expected = dataset_columns(n)
    if list(columns) != expected:
        raise DatasetParseError(
            f"line 1: malformed header {','.join(columns)!r}, expected {','.join(expected)!r}",
            line=1,
        )
    return n


def _cells_to_float(frame: pd.DataFrame) -> np.ndarray:
    raw = frame.to_numpy(dtype=object)
    try:
        values = raw.astype(float)
    except (TypeError, ValueError):
        values = None

    if values is None or not np.all(np.isfinite(values)):
        for row_idx, row in enumerate(raw):
            for col_idx, cell in enumerate(row):
                try:
                    value = float(cell)
                except (TypeError, ValueError):
                    value = float("nan")
                if not np.isfinite(value):
                    line = row_idx + 2
                    raise DatasetParseError(
                        f"line {line}: non-numeric or non-finite cell {cell!r} in column {frame.columns[col_idx]!r}",
                        line=line,
                    )
    return values


def _parser_error_line(error: Exception) -> Optional[int]:
    match = _PARSER_LINE.search(str(error))
    return int(match.group(1)) if match else None


def load_dataset(path: PathLike, rate: Optional[float] = None) -> Dataset:
    """
    Parse a dataset CSV.

    Args:
        path: CSV file written by save_dataset (or by hand, same schema).
        rate: Sampling rate; inferred from the first two timestamps when omitted,
              DEFAULT_RATE for datasets with fewer than two samples.

    Raises:
        DatasetParseError naming the offending line (blank lines included).
    """
    try:
        # blank lines are kept so row i is always file line i + 2
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.EmptyDataError as e:
        raise DatasetParseError("line 1: missing header", line=1) from e
    except pd.errors.ParserError as e:
        line = _parser_error_line(e)
        where = f"line {line}" if line is not None else "unknown line"
        raise DatasetParseError(f"{where}: ragged row ({e})", line=line) from e

    n = _parse_header([str(c) for c in frame.columns])

    missing = (frame.isna() | (frame == "")).to_numpy()
    if missing.any():
        row_idx = int(np.flatnonzero(missing.any(axis=1))[0])
        line = row_idx + 2
        if missing[row_idx].all():
            raise DatasetParseError(f"line {line}: blank line", line=line)
        raise DatasetParseError(
            f"line {line}: ragged row, expected {frame.shape[1]} cells",
            line=line,
        )

    values = _cells_to_float(frame) if len(frame) else np.zeros((0, 4 * n + 1))

    t = values[:, 0]
    if rate is None:
        rate = float(round(1.0 / (t[1] - t[0]), 9)) if t.size >= 2 and t[1] > t[0] else DEFAULT_RATE

    try:
        return Dataset(t=t, X=values[:, 1 : 1 + 3 * n], Y=values[:, 1 + 3 * n :], rate=rate)
    except InvalidInputError as e:
        raise DatasetParseError(f"{path}: {e}") from e
