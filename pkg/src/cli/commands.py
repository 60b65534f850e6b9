# src/cli/commands.py
"""
Subcommand bodies. Each returns a process exit code; RidgelineError
propagates to the entry script.
"""

from __future__ import annotations

import logging
import pathlib
from typing import Dict, Optional, Tuple

import numpy as np

from src.analytics.report_tables import REPORT_FILE, variant_csv_name, write_report_files
from src.cli.config import RunConfig
from src.dynamics.arm import JointState
from src.dynamics.dataset import Dataset, load_dataset, save_dataset, simulate_dataset
from src.dynamics.trajectory import trajectory_array
from src.estimator.predict import predict
from src.estimator.rls import rls_init, rls_solve
from src.hyper.fit_ml import FitReport, fit_ml_report
from src.hyper.fit_vs import default_vs_grid, fit_vs_report
from src.models.design import build_prior, ls_estimate_pi
from src.models.model_file import load_model, save_model
from src.models.variants import EstimationMethod, ModelSpec, ModelVariant, make_spec, parse_run_label
from src.utils.errors import InvalidInputError
from src.utils.io import save_json
from src.utils.sampling import sequential_split
from src.workflows.protocol_workflow import run_protocol, stream_dataset

logger = logging.getLogger(__name__)

DATASET_FILES = {"A": "dataset_a.csv", "B": "dataset_b.csv"}


# ---------- gen ----------


def noise_seed(sim_seed: int, name: str) -> int:
    """Independent noise streams for the two recordings: 2s (A) and 2s + 1 (B)."""
    return 2 * int(sim_seed) + (0 if name == "A" else 1)


def make_datasets(cfg: RunConfig) -> Dict[str, Dataset]:
    """Simulate both regimes of the run."""
    rate = cfg.protocol.rate
    out: Dict[str, Dataset] = {}
    for name, rc in (("A", cfg.regime_a), ("B", cfg.regime_b)):
        t, X = trajectory_array(rc.regime, rc.duration, rate)
        out[name] = simulate_dataset(t, X, cfg.arm, seed=noise_seed(cfg.sim_seed, name), rate=rate)
    return out


def cmd_gen(cfg: RunConfig, dry_run: bool = False) -> int:
    """Write dataset_a.csv and dataset_b.csv into cfg.out_dir."""
    out_dir = pathlib.Path(cfg.out_dir)
    if dry_run:
        print(f"gen: would write {out_dir / DATASET_FILES['A']} ({cfg.samples('regime_a')} samples)")
        print(f"gen: would write {out_dir / DATASET_FILES['B']} ({cfg.samples('regime_b')} samples)")
        return 0

    for name, ds in make_datasets(cfg).items():
        path = save_dataset(ds, out_dir / DATASET_FILES[name])
        print(f"wrote {path} ({len(ds)} samples)")
    return 0


# ---------- fit ----------


def fit_dataset(cfg: RunConfig, ds: Dataset, label: str) -> Tuple[FitReport, ModelSpec, np.ndarray]:
    """
    Hyperparameters on the first init_count samples (all of them if shorter),
    theta on the whole recording through the recursion.
    """
    variant, method = parse_run_label(label)
    proto = cfg.protocol
    init_ds = ds.window(slice(0, min(proto.init_count, len(ds))))

    if method is EstimationMethod.ML:
        report = fit_ml_report(variant, init_ds, d=proto.d, feature_seed=proto.feature_seed, g=proto.g)
    else:
        train_count = min(proto.vs_train_count, int(0.7 * len(init_ds)))
        train_sl, val_sl = sequential_split(len(init_ds), train_count)
        pi_hat = ls_estimate_pi(init_ds, proto.g) if variant is ModelVariant.SP2 else None
        grid = default_vs_grid(variant, init_ds, pi_hat=pi_hat, g=proto.g)
        report = fit_vs_report(
            variant,
            init_ds.window(train_sl),
            init_ds.window(val_sl),
            grid,
            d=proto.d,
            feature_seed=proto.feature_seed,
            g=proto.g,
        )

    spec = make_spec(variant, report.hyper, n=ds.n, d=proto.d, feature_seed=proto.feature_seed, g=proto.g)
    state = stream_dataset(rls_init(1.0 / build_prior(spec), report.hyper.sigma2), spec, ds)
    return report, spec, rls_solve(state)


def cmd_fit(cfg: RunConfig, dataset: str, label: str, dry_run: bool = False) -> int:
    """Write <label>.model.json and <label>.fit.json into cfg.out_dir."""
    label = label.strip().upper()
    variant, method = parse_run_label(label)
    label = f"{variant.value}-{method.value}"
    out_dir = pathlib.Path(cfg.out_dir)

    ds = load_dataset(dataset, rate=cfg.protocol.rate)
    if dry_run:
        print(f"fit: {label} on {dataset} ({len(ds)} samples) -> {out_dir / f'{label}.model.json'}")
        return 0

    report, spec, theta = fit_dataset(cfg, ds, label)
    model_path = save_model(out_dir / f"{label}.model.json", spec, theta, method=method.value)
    save_json(out_dir / f"{label}.fit.json", report.to_dict())

    what = "nll" if method is EstimationMethod.ML else "val-MSE"
    print(f"{label}: final {what} {report.value:.10g}")
    print(f"wrote {model_path}")
    return 0


# ---------- experiment ----------


def load_or_make_datasets(cfg: RunConfig, data_dir: Optional[str]) -> Dict[str, Dataset]:
    if data_dir is None:
        return make_datasets(cfg)
    root = pathlib.Path(data_dir)
    return {name: load_dataset(root / fname, rate=cfg.protocol.rate) for name, fname in DATASET_FILES.items()}


def cmd_experiment(cfg: RunConfig, data_dir: Optional[str] = None, dry_run: bool = False) -> int:
    """
    Run the protocol and write report.json plus one CSV per run label.

    Returns 0 when every label succeeded, 1 otherwise (failures are listed).
    """
    out_dir = pathlib.Path(cfg.out_dir)
    proto = cfg.protocol
    if dry_run:
        source = data_dir or "simulated inline"
        print(f"experiment: datasets {source}")
        print(
            f"experiment: init {proto.init_count}, train {proto.train_a_count}, "
            f"{proto.subset_count} x {proto.subset_len} adaptation, horizon {proto.horizon}"
        )
        print(f"experiment: runs {', '.join(proto.variants)} with {cfg.jobs} job(s)")
        print(f"experiment: would write {out_dir / REPORT_FILE} and " + ", ".join(variant_csv_name(v) for v in proto.variants))
        return 0

    data = load_or_make_datasets(cfg, data_dir)
    report = run_protocol(proto, data["A"], data["B"], arm=cfg.arm, jobs=cfg.jobs)

    payload = report.to_dict()
    payload["config"] = cfg.to_dict()
    write_report_files(out_dir, payload, report.series, report.absorbed, proto.rate)
    print(f"wrote {out_dir / REPORT_FILE}")

    if report.summary is not None:
        for label, row in report.summary.iterrows():
            print(f"{label:>8}: steady mean {row['mean']:.4g}, median {row['median']:.4g}, transient {row['transient_mean']:.4g}")

    if report.failures:
        for label, reason in report.failures.items():
            print(f"FAILED {label}: {reason}")
        return 1
    return 0


# ---------- predict ----------


def parse_state(text: str) -> JointState:
    """'q1,..,qn,dq1,..,dqn,ddq1,..,ddqn' -> JointState."""
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as e:
        raise InvalidInputError(f"--x must be comma-separated numbers: {e}") from e
    if len(values) % 3 != 0 or not values:
        raise InvalidInputError(f"--x needs 3n values, got {len(values)}")
    return JointState.from_vector(np.asarray(values))


def cmd_predict(model: str, x: str) -> int:
    """Print y_hat for one state."""
    spec, theta, _ = load_model(model)
    y_hat = predict(spec, theta, parse_state(x))
    print(",".join(repr(float(v)) for v in y_hat))
    return 0
