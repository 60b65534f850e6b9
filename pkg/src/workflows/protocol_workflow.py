# src/workflows/protocol_workflow.py
"""
Task-transfer protocol as a LangGraph workflow, one graph run per model:

    init       hyperparameters + theta_0 on the first init_count samples of A
      -> train stream the next train_a_count samples of A
      -> adapt for every subset of B: restart from the end-of-train state,
               stream the subset and record the horizon error at every step
      -> summarize

run_protocol fans the runs out over a thread pool and aggregates them.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from langgraph.graph import END, StateGraph
from typing_extensions import TypedDict

from src.analytics.experiment_metrics import (
    ORACLE_LABEL,
    aggregate_report,
    noise_floor,
    ordering_checks,
    relative_error,
)
from src.analytics.report_tables import summary_records
from src.dynamics.arm import GRAVITY, ArmParameters, base_parameters, friction_torques, rbd_regressor_batch
from src.dynamics.dataset import Dataset
from src.estimator.rls import RlsState, rls_init, rls_solve, rls_update, rls_update_batch
from src.hyper.fit_ml import fit_ml_report
from src.hyper.fit_vs import default_vs_grid, fit_vs_report
from src.models.design import build_design_batch, build_prior, ls_estimate_pi, mean_batch
from src.models.variants import EstimationMethod, ModelSpec, ModelVariant, make_spec, parse_run_label
from src.utils.errors import InvalidInputError
from src.utils.sampling import sequential_split, sequential_subsets
from src.workflows import protocol_constants as C

logger = logging.getLogger(__name__)


# ---------- Configuration ----------


@dataclass(frozen=True)
class ProtocolConfig:
    init_count: int = C.INIT_COUNT
    train_a_count: int = C.TRAIN_A_COUNT
    subset_count: int = C.SUBSET_COUNT
    subset_len: int = C.SUBSET_LEN
    horizon: int = C.HORIZON
    rate: float = C.RATE
    transient_cutoff: float = C.TRANSIENT_CUTOFF
    stride: int = C.STRIDE
    vs_train_count: int = C.VS_TRAIN_COUNT
    variants: Tuple[str, ...] = tuple(C.DEFAULT_RUNS)
    d: int = C.FEATURE_COUNT
    feature_seed: int = C.FEATURE_SEED
    g: float = GRAVITY

    def __post_init__(self) -> None:
        object.__setattr__(self, "variants", tuple(self.variants))

    def validate(self) -> "ProtocolConfig":
        for name in ("init_count", "subset_count", "subset_len", "horizon", "stride", "d"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidInputError(f"protocol.{name} must be a positive integer, got {value}")
        if int(self.train_a_count) != self.train_a_count or self.train_a_count < 0:
            raise InvalidInputError(f"protocol.train_a_count must be a non-negative integer, got {self.train_a_count}")
        if self.horizon >= self.subset_len:
            raise InvalidInputError(f"Horizon {self.horizon} must be shorter than a subset ({self.subset_len})")
        if not 0 < self.vs_train_count < self.init_count:
            raise InvalidInputError(
                f"vs_train_count {self.vs_train_count} must split the init window of {self.init_count}"
            )
        if not self.rate > 0.0 or self.transient_cutoff < 0.0:
            raise InvalidInputError("rate must be positive and transient_cutoff non-negative")
        if not self.variants:
            raise InvalidInputError("No variants to run")
        if len(set(self.variants)) != len(self.variants):
            raise InvalidInputError(f"Duplicate run labels in {list(self.variants)}")
        for label in self.variants:
            if label != ORACLE_LABEL:
                parse_run_label(label)
        return self

    @property
    def positions(self) -> np.ndarray:
        """Subset indices after which the error is recorded."""
        return np.arange(0, self.subset_len - self.horizon, self.stride)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["variants"] = list(self.variants)
        return out


# ---------- Results ----------


@dataclass
class VariantRun:
    """
    Fields:
      - label:   run label ("NP-ML", "ORACLE", ...)
      - series:  (subsets, steps) horizon errors
      - hyper:   hyperparameters used (None for ORACLE)
      - fit:     FitReport as dict (None for ORACLE)
      - seconds: wall-clock time per phase
      - notes:   workflow notes
    """

    label: str
    series: np.ndarray
    hyper: Optional[Dict[str, Any]] = None
    fit: Optional[Dict[str, Any]] = None
    seconds: Dict[str, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "hyper": self.hyper,
            "fit": self.fit,
            "seconds": self.seconds,
            "notes": self.notes,
            "eps_per_subset": [[_json_float(v) for v in row] for row in self.series],
        }


@dataclass
class ExperimentReport:
    config: ProtocolConfig
    runs: Dict[str, VariantRun]
    failures: Dict[str, str]
    summary: Optional[pd.DataFrame]
    checks: Dict[str, Optional[bool]]
    noise_floor: Optional[float]
    absorbed: np.ndarray

    @property
    def series(self) -> Dict[str, np.ndarray]:
        return {label: run.series for label, run in self.runs.items()}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "protocol": self.config.to_dict(),
            "runs": {label: run.to_dict() for label, run in self.runs.items()},
            "failures": dict(self.failures),
            "summary": summary_records(self.summary) if self.summary is not None else {},
            "ordering_checks": dict(self.checks),
            "noise_floor": self.noise_floor,
            "absorbed": [int(v) for v in self.absorbed],
        }


def _json_float(value: float) -> Optional[float]:
    return float(value) if np.isfinite(value) else None


# ---------- LangGraph State Definition ----------


class ProtocolState(TypedDict, total=False):
    """
    State for one model's pass through the protocol.

    Fields:

      - label:   run label
      - cfg:     ProtocolConfig
      - ds_a:    regime A recording (init + train)
      - ds_b:    regime B recording (adaptation subsets)
      - arm:     true arm (needed by ORACLE only)
      - spec:    frozen model layout and hyperparameters
      - fit:     fit report dict
      - rls:     estimator state at the end of the latest phase
      - series:  (subsets, steps) horizon errors
      - seconds: phase timings
      - result:  VariantRun
      - notes:   list of info strings
    """

    label: str
    cfg: ProtocolConfig
    ds_a: Dataset
    ds_b: Dataset
    arm: Optional[ArmParameters]
    spec: ModelSpec
    fit: Dict[str, Any]
    rls: RlsState
    series: np.ndarray
    seconds: Dict[str, float]
    result: VariantRun
    notes: List[str]


# ---------- Helpers ----------


def stream_dataset(state: RlsState, spec: ModelSpec, ds: Dataset) -> RlsState:
    """Absorb a whole recording (mean-corrected) into the estimator state."""
    designs = build_design_batch(spec, ds.X)
    return rls_update_batch(state, designs, ds.Y - mean_batch(spec, ds.X))


def adapt_subset(
    spec: ModelSpec,
    start: RlsState,
    sub: Dataset,
    positions: np.ndarray,
    horizon: int,
) -> np.ndarray:
    """
    Stream one subset from a copy of `start`; after absorbing sample i (for i
    in positions) freeze theta and score it on samples i+1 .. i+horizon.
    """
    state = start.copy()
    designs = build_design_batch(spec, sub.X)
    means = mean_batch(spec, sub.X)
    residual = sub.Y - means

    out = np.empty(positions.size)
    record = set(int(i) for i in positions)
    k = 0
    for i in range(int(positions[-1]) + 1):
        rls_update(state, designs[i], residual[i])
        if i not in record:
            continue
        theta = rls_solve(state)
        block = slice(i + 1, i + horizon + 1)
        Y_hat = designs[block] @ theta + means[block]
        out[k] = relative_error(sub.Y[block], Y_hat).value
        k += 1
    return out


def oracle_predictions(X: np.ndarray, arm: ArmParameters) -> np.ndarray:
    """Noiseless simulator torques: rigid body + friction."""
    n = X.shape[1] // 3
    pi = base_parameters(arm).pi
    return np.einsum("spn,p->sn", rbd_regressor_batch(X, g=arm.g), pi) + friction_torques(X[:, n : 2 * n], arm)


def oracle_subset(arm: ArmParameters, sub: Dataset, positions: np.ndarray, horizon: int) -> np.ndarray:
    Y_hat = oracle_predictions(sub.X, arm)
    out = np.empty(positions.size)
    for k, i in enumerate(positions):
        block = slice(int(i) + 1, int(i) + horizon + 1)
        out[k] = relative_error(sub.Y[block], Y_hat[block]).value
    return out


def _note(state: ProtocolState, note: str) -> List[str]:
    existing_notes = state.get("notes", []) or []
    existing_notes.append(note)
    return existing_notes


def _timed(state: ProtocolState, phase: str, started: float) -> Dict[str, float]:
    seconds = dict(state.get("seconds", {}) or {})
    seconds[phase] = time.perf_counter() - started
    return seconds


# ---------- Node: init ----------


def init_node(state: ProtocolState) -> Dict[str, Any]:
    """
    Node:
      - estimates hyperparameters on the init window (ML or VS)
      - builds the frozen spec and streams the init window into a fresh state
    """
    started = time.perf_counter()
    label = state["label"]
    cfg = state["cfg"]
    ds_a = state["ds_a"]

    if label == ORACLE_LABEL:
        if state.get("arm") is None:
            raise InvalidInputError("ORACLE needs the true arm parameters")
        return {
            "seconds": _timed(state, "init", started),
            "notes": _note(state, "init: oracle predicts with the true simulator"),
        }

    variant, method = parse_run_label(label)
    init_ds = ds_a.window(slice(0, cfg.init_count))

    if method is EstimationMethod.ML:
        report = fit_ml_report(variant, init_ds, d=cfg.d, feature_seed=cfg.feature_seed, g=cfg.g)
    else:
        train_sl, val_sl = sequential_split(len(init_ds), cfg.vs_train_count)
        pi_hat = ls_estimate_pi(init_ds, cfg.g) if variant is ModelVariant.SP2 else None
        grid = default_vs_grid(variant, init_ds, pi_hat=pi_hat, g=cfg.g)
        report = fit_vs_report(
            variant,
            init_ds.window(train_sl),
            init_ds.window(val_sl),
            grid,
            d=cfg.d,
            feature_seed=cfg.feature_seed,
            g=cfg.g,
        )

    spec = make_spec(variant, report.hyper, n=ds_a.n, d=cfg.d, feature_seed=cfg.feature_seed, g=cfg.g)
    rls = rls_init(1.0 / build_prior(spec), report.hyper.sigma2)
    stream_dataset(rls, spec, init_ds)
    rls_solve(rls)

    note = f"init: {label} fitted on {len(init_ds)} samples ({method.value} objective {report.value:.6g})"
    return {
        "spec": spec,
        "fit": report.to_dict(),
        "rls": rls,
        "seconds": _timed(state, "init", started),
        "notes": _note(state, note),
    }


# ---------- Node: train ----------


def train_node(state: ProtocolState) -> Dict[str, Any]:
    """
    Node:
      - streams the training window of regime A through the recursion
    """
    started = time.perf_counter()
    cfg = state["cfg"]

    if state["label"] == ORACLE_LABEL:
        return {"seconds": _timed(state, "train", started), "notes": _note(state, "train: nothing to learn")}

    train_ds = state["ds_a"].window(slice(cfg.init_count, cfg.init_count + cfg.train_a_count))
    rls = stream_dataset(state["rls"], state["spec"], train_ds)
    rls_solve(rls)

    return {
        "rls": rls,
        "seconds": _timed(state, "train", started),
        "notes": _note(state, f"train: streamed {len(train_ds)} samples"),
    }


# ---------- Node: adapt ----------


def adapt_node(state: ProtocolState) -> Dict[str, Any]:
    """
    Node:
      - for every subset of regime B, restarts from the end-of-train state
        and records the horizon error series
    """
    started = time.perf_counter()
    cfg = state["cfg"]
    ds_b = state["ds_b"]
    positions = cfg.positions
    slices = sequential_subsets(len(ds_b), cfg.subset_count, cfg.subset_len)

    rows = []
    for sl in slices:
        sub = ds_b.window(sl)
        if state["label"] == ORACLE_LABEL:
            rows.append(oracle_subset(state["arm"], sub, positions, cfg.horizon))
        else:
            rows.append(adapt_subset(state["spec"], state["rls"], sub, positions, cfg.horizon))

    series = np.vstack(rows)
    note = f"adapt: {len(slices)} subsets x {positions.size} steps"
    return {
        "series": series,
        "seconds": _timed(state, "adapt", started),
        "notes": _note(state, note),
    }


# ---------- Node: summarize ----------


def summarize_node(state: ProtocolState) -> Dict[str, Any]:
    """
    Node:
      - packs the run into a VariantRun and logs the notes
    """
    spec = state.get("spec")
    fit = state.get("fit")
    result = VariantRun(
        label=state["label"],
        series=state["series"],
        hyper=spec.hyper.to_dict() if spec is not None else None,
        fit=fit,
        seconds=dict(state.get("seconds", {}) or {}),
        notes=list(state.get("notes", []) or []),
    )
    for note in result.notes:
        logger.info(f"[{result.label}] {note}")
    return {"result": result}


# ---------- Graph Builder ----------


def build_protocol_graph():
    """
    Build the protocol LangGraph workflow.

    Pipeline:

        init
            -> train
            -> adapt
            -> summarize
            -> END
    """
    graph = StateGraph(ProtocolState)

    # Nodes
    graph.add_node("init", init_node)
    graph.add_node("train", train_node)
    graph.add_node("adapt", adapt_node)
    graph.add_node("summarize", summarize_node)

    # Entry / edges
    graph.set_entry_point("init")
    graph.add_edge("init", "train")
    graph.add_edge("train", "adapt")
    graph.add_edge("adapt", "summarize")
    graph.add_edge("summarize", END)

    return graph.compile()


# ---------- Runner ----------


def run_variant(
    label: str,
    cfg: ProtocolConfig,
    ds_a: Dataset,
    ds_b: Dataset,
    arm: Optional[ArmParameters] = None,
) -> VariantRun:
    """One label through the whole protocol. Errors propagate."""
    app = build_protocol_graph()
    final = app.invoke({"label": label, "cfg": cfg, "ds_a": ds_a, "ds_b": ds_b, "arm": arm, "notes": []})
    return final["result"]


def _check_lengths(cfg: ProtocolConfig, ds_a: Dataset, ds_b: Dataset) -> None:
    need_a = cfg.init_count + cfg.train_a_count
    if len(ds_a) < need_a:
        raise InvalidInputError(f"Dataset A has {len(ds_a)} samples, the protocol needs {need_a}")
    need_b = cfg.subset_count * cfg.subset_len
    if len(ds_b) < need_b:
        raise InvalidInputError(f"Dataset B has {len(ds_b)} samples, the protocol needs {need_b}")
    if ds_a.n != ds_b.n:
        raise InvalidInputError(f"Datasets disagree on joint count: {ds_a.n} vs {ds_b.n}")
    for name, ds in (("A", ds_a), ("B", ds_b)):
        if not np.isclose(ds.rate, cfg.rate):
            raise InvalidInputError(f"Dataset {name} rate {ds.rate} Hz differs from protocol rate {cfg.rate} Hz")


def protocol_noise_floor(cfg: ProtocolConfig, ds_b: Dataset, sigma_sim: float) -> float:
    """Noise floor over the steady part of every adaptation subset."""
    steady_start = int(cfg.transient_cutoff * cfg.rate)
    floors = []
    for sl in sequential_subsets(len(ds_b), cfg.subset_count, cfg.subset_len):
        window = ds_b.window(sl).window(slice(steady_start, None))
        if len(window) > cfg.horizon:
            floors.append(noise_floor(window, sigma_sim, cfg.horizon))
    return float(np.mean(floors)) if floors else float("nan")


def run_protocol(
    cfg: ProtocolConfig,
    ds_a: Dataset,
    ds_b: Dataset,
    arm: Optional[ArmParameters] = None,
    jobs: int = 1,
) -> ExperimentReport:
    """
    Run every configured label and aggregate.

    A label that fails is logged and listed in `failures`; the others still
    run. Results do not depend on `jobs`.
    """
    cfg.validate()
    _check_lengths(cfg, ds_a, ds_b)
    if jobs < 1:
        raise InvalidInputError(f"jobs must be >= 1, got {jobs}")

    def isolated(label: str):
        try:
            return run_variant(label, cfg, ds_a, ds_b, arm), None
        except Exception as e:  # one failing model must not abort the others
            logger.exception(f"[{label}] failed: {e}")
            return None, f"{type(e).__name__}: {e}"

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        outcomes = list(pool.map(isolated, cfg.variants))

    runs: Dict[str, VariantRun] = {}
    failures: Dict[str, str] = {}
    for label, (run, error) in zip(cfg.variants, outcomes):
        if run is not None:
            runs[label] = run
        else:
            failures[label] = error

    absorbed = cfg.positions + 1
    summary = aggregate_report({k: r.series for k, r in runs.items()}, absorbed, cfg.rate, cfg.transient_cutoff) if runs else None

    floor = protocol_noise_floor(cfg, ds_b, arm.sigma_sim) if arm is not None else None
    if floor is not None and not np.isfinite(floor):
        floor = None
    checks = ordering_checks(summary, floor) if summary is not None else {}
    if failures:
        logger.warning(f"Failed runs: {', '.join(failures)}")

    return ExperimentReport(
        config=cfg,
        runs=runs,
        failures=failures,
        summary=summary,
        checks=checks,
        noise_floor=floor,
        absorbed=absorbed,
    )
