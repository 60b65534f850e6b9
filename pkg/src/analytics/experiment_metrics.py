# src/analytics/experiment_metrics.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from src.dynamics.dataset import Dataset
from src.estimator.predict import predict_batch
from src.models.variants import ModelSpec
from src.utils.errors import InvalidInputError

logger = logging.getLogger(__name__)

# Label of the noiseless true-simulator predictor
ORACLE_LABEL = "ORACLE"


# ---------- Horizon prediction error ----------


@dataclass(frozen=True)
class HorizonError:
    """
    Fields:
      - value:       channel average over the defined channels (nan if none is defined)
      - per_channel: per-channel ratio, nan where the channel is undefined
      - undefined:   channels with a zero denominator
    """

    value: float
    per_channel: np.ndarray
    undefined: Tuple[int, ...] = ()


def relative_error(Y_true: np.ndarray, Y_pred: np.ndarray) -> HorizonError:
    """
    sum_s (y_s - y_hat_s)^2 / sum_s y_s^2 per channel over a horizon block,
    then averaged over channels. Zero-denominator channels are flagged and
    excluded instead of dividing.
    """
    Y_true = np.atleast_2d(np.asarray(Y_true, dtype=float))
    Y_pred = np.atleast_2d(np.asarray(Y_pred, dtype=float))
    if Y_true.shape != Y_pred.shape:
        raise InvalidInputError(f"Truth {Y_true.shape} and prediction {Y_pred.shape} disagree")

    num = np.sum((Y_true - Y_pred) ** 2, axis=0)
    den = np.sum(Y_true**2, axis=0)
    defined = den > 0.0
    per_channel = np.full(den.shape, np.nan)
    per_channel[defined] = num[defined] / den[defined]

    undefined = tuple(int(k) for k in np.flatnonzero(~defined))
    value = float(np.mean(per_channel[defined])) if np.any(defined) else float("nan")
    return HorizonError(value=value, per_channel=per_channel, undefined=undefined)


def prediction_error(spec: ModelSpec, theta: np.ndarray, ds: Dataset, t: int, T: int) -> HorizonError:
    """
    Error of the model frozen after sample t over samples t+1 .. t+T.

    Args:
        spec, theta: The frozen model (trained on samples <= t only).
        ds: Recording being predicted.
        t: Index of the last absorbed sample.
        T: Horizon length in samples.
    """
    if T < 1:
        raise InvalidInputError(f"Horizon must be >= 1, got {T}")
    if t < 0 or t + T >= len(ds):
        raise InvalidInputError(f"Horizon t={t}..{t + T} is outside a dataset of {len(ds)} samples")
    block = slice(t + 1, t + T + 1)
    return relative_error(ds.Y[block], predict_batch(spec, theta, ds.X[block]))


def horizon_windows(Y: np.ndarray, T: int) -> np.ndarray:
    """(L - T, T, n) view of the T samples following each index of an (L, n) block."""
    Y = np.asarray(Y, dtype=float)
    windows = np.lib.stride_tricks.sliding_window_view(Y[1:], T, axis=0)  # (L - T, n, T)
    return np.transpose(windows, (0, 2, 1))


def noise_floor(ds: Dataset, sigma_sim: float, T: int) -> float:
    """
    Expected error of a noiseless perfect predictor: mean over t and channels
    of sigma_sim^2 * T / sum_{s=1..T} y_{t+s}^2.
    """
    if len(ds) <= T:
        raise InvalidInputError(f"Dataset of {len(ds)} samples is shorter than the horizon {T}")
    den = np.sum(horizon_windows(ds.Y, T) ** 2, axis=1)  # (L - T, n)
    ratio = np.where(den > 0.0, sigma_sim**2 * T / np.where(den > 0.0, den, 1.0), np.nan)
    return float(np.nanmean(ratio))


# ---------- Aggregation ----------


def steady_mask(absorbed: np.ndarray, rate: float, transient_cutoff: float) -> np.ndarray:
    """A step is steady once more than cutoff * rate samples of the phase have been absorbed."""
    return np.asarray(absorbed) > transient_cutoff * rate


def average_series(per_subset: np.ndarray) -> np.ndarray:
    """Pointwise mean across subsets (rows), ignoring undefined points."""
    per_subset = np.atleast_2d(np.asarray(per_subset, dtype=float))
    if per_subset.size == 0:
        raise InvalidInputError("Cannot average an empty series")
    if np.any(np.all(np.isnan(per_subset), axis=0)):
        logger.warning("Some time steps are undefined in every subset")
    with np.errstate(all="ignore"):
        return np.nanmean(per_subset, axis=0)


def summary_stats(values: np.ndarray) -> Dict[str, float]:
    """
    Boxplot statistics with linear-interpolation quartiles; whiskers are the
    most extreme points within 1.5 IQR of the box.
    """
    series = pd.Series(np.asarray(values, dtype=float)).dropna()
    if series.empty:
        nan = float("nan")
        return {"mean": nan, "median": nan, "q1": nan, "q3": nan, "whisker_low": nan, "whisker_high": nan, "count": 0}

    q1 = float(series.quantile(0.25))
    q3 = float(series.quantile(0.75))
    iqr = q3 - q1
    inside = series[(series >= q1 - 1.5 * iqr) & (series <= q3 + 1.5 * iqr)]
    return {
        "mean": float(series.mean()),
        "median": float(series.quantile(0.5)),
        "q1": q1,
        "q3": q3,
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "count": int(series.size),
    }


def aggregate_report(
    series: Dict[str, np.ndarray],
    absorbed: np.ndarray,
    rate: float,
    transient_cutoff: float,
) -> pd.DataFrame:
    """
    Summary table, one row per run label.

    Args:
        series: label -> (subsets, L) error series.
        absorbed: (L,) samples absorbed by the model at each step.
        rate: Sampling rate (Hz).
        transient_cutoff: Seconds treated as transient.

    Returns:
        DataFrame indexed by label with the steady-state boxplot statistics of
        the subset-averaged curve plus `transient_mean`.
    """
    if not series:
        raise InvalidInputError("No series to aggregate")

    rows = []
    for label, per_subset in series.items():
        curve = average_series(per_subset)
        mask = steady_mask(absorbed, rate, transient_cutoff)
        stats = summary_stats(curve[mask])
        transient = curve[~mask]
        stats["transient_mean"] = float(np.nanmean(transient)) if np.any(np.isfinite(transient)) else float("nan")
        stats["label"] = label
        rows.append(stats)

    return pd.DataFrame(rows).set_index("label")


# ---------- Qualitative findings ----------


def _mean(summary: pd.DataFrame, label: str, column: str = "mean") -> Optional[float]:
    if label not in summary.index:
        return None
    value = float(summary.loc[label, column])
    return value if np.isfinite(value) else None


def ordering_checks(summary: pd.DataFrame, floor: Optional[float] = None) -> Dict[str, Optional[bool]]:
    """
    The expected ordering of the task-switch experiment, as booleans
    (None when a needed run is missing):

      - p_worst_by_25pct:           P-ML steady mean >= 1.25x every other learned model
      - semiparametric_not_worse:   SP-ML and SPK-ML steady means <= NP-ML's
      - vs_transient_above_ml:      NP-VS / SP2-VS transient means exceed their ML counterparts
      - oracle_within_3x_floor:     ORACLE steady mean within 3x of the noise floor
    """
    checks: Dict[str, Optional[bool]] = {}

    p = _mean(summary, "P-ML")
    others = [_mean(summary, lbl) for lbl in summary.index if lbl not in ("P-ML", ORACLE_LABEL)]
    others = [v for v in others if v is not None]
    checks["p_worst_by_25pct"] = None if p is None or not others else bool(all(p >= 1.25 * v for v in others))

    np_ml = _mean(summary, "NP-ML")
    semi = [_mean(summary, "SP-ML"), _mean(summary, "SPK-ML")]
    checks["semiparametric_not_worse"] = (
        None if np_ml is None or any(v is None for v in semi) else bool(all(v <= np_ml for v in semi))
    )

    pairs = [("NP-VS", "NP-ML"), ("SP2-VS", "SP2-ML")]
    vs_ml = [(_mean(summary, vs, "transient_mean"), _mean(summary, ml, "transient_mean")) for vs, ml in pairs]
    checks["vs_transient_above_ml"] = (
        None if any(a is None or b is None for a, b in vs_ml) else bool(all(a > b for a, b in vs_ml))
    )

    oracle = _mean(summary, ORACLE_LABEL)
    checks["oracle_within_3x_floor"] = (
        None if oracle is None or floor is None else bool(floor / 3.0 <= oracle <= 3.0 * floor)
    )
    return checks
