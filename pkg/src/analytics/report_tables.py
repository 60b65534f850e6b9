# src/analytics/report_tables.py
"""
Report artifacts of an experiment run:

  report.json          full report (resolved config, summaries, checks, series)
  <label>.csv          t_seconds, eps_mean, eps_per_subset_1..k
"""

from __future__ import annotations

import pathlib
from typing import Any, Dict

import numpy as np
import pandas as pd

from src.analytics.experiment_metrics import average_series
from src.utils.io import PathLike, atomic_write_text, save_json

REPORT_FILE = "report.json"


def variant_csv_name(label: str) -> str:
    return f"{label}.csv"


def series_frame(per_subset: np.ndarray, absorbed: np.ndarray, rate: float) -> pd.DataFrame:
    """
    One row per recorded step. t_seconds = absorbed / rate, the time of the last
    absorbed sample relative to the start of the subset.
    """
    per_subset = np.atleast_2d(np.asarray(per_subset, dtype=float))
    frame = pd.DataFrame({"t_seconds": np.asarray(absorbed, dtype=float) / rate, "eps_mean": average_series(per_subset)})
    for k, row in enumerate(per_subset, start=1):
        frame[f"eps_per_subset_{k}"] = row
    return frame


def write_series_csv(path: PathLike, frame: pd.DataFrame) -> pathlib.Path:
    text = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    return atomic_write_text(path, text)


def summary_records(summary: pd.DataFrame) -> Dict[str, Dict[str, Any]]:
    """label -> stats dict, with nan mapped to None for JSON."""
    out: Dict[str, Dict[str, Any]] = {}
    for label, row in summary.iterrows():
        out[str(label)] = {k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in row.items()}
        out[str(label)]["count"] = int(row["count"])
    return out


def write_report_files(
    out_dir: PathLike,
    report: Dict[str, Any],
    series: Dict[str, np.ndarray],
    absorbed: np.ndarray,
    rate: float,
) -> Dict[str, pathlib.Path]:
    """Write report.json plus one CSV per run label. Returns label -> path."""
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: Dict[str, pathlib.Path] = {}
    for label, per_subset in series.items():
        written[label] = write_series_csv(out / variant_csv_name(label), series_frame(per_subset, absorbed, rate))
    written["report"] = save_json(out / REPORT_FILE, report)
    return written
