# src/cli/config.py
"""
Run configuration. A TOML file with the tables

    variants = ["P-ML", "NP-ML", ...]
    out_dir  = "runs/default"
    jobs     = 1

    [arm]       masses, lengths, com, inertias, viscous, coulomb, g, sigma_sim
    [regime_a]  amplitudes, frequencies, phases, offsets, duration
    [regime_b]  (same keys as regime_a)
    [protocol]  init_count, train_a_count, subset_count, subset_len, horizon,
                rate, transient_cutoff, stride, vs_train_count
    [features]  d, seed
    [seeds]     sim

Every key is optional; missing ones take the defaults. Unknown keys are
rejected with their dotted path. When [arm] sets masses or lengths without
com or inertias, those are derived as uniform rods.
"""

from __future__ import annotations

import pathlib
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional

from src.dynamics.arm import ArmParameters
from src.dynamics.trajectory import TrajectoryRegime, default_regimes, sample_count
from src.utils.errors import ConfigError, RidgelineError
from src.utils.io import PathLike
from src.workflows import protocol_constants as C
from src.workflows.protocol_workflow import ProtocolConfig

DEFAULT_DURATION = 500.0  # seconds; 10000 samples at 20 Hz
DEFAULT_OUT_DIR = "runs/default"

ARM_KEYS = ("masses", "lengths", "com", "inertias", "viscous", "coulomb", "g", "sigma_sim")
REGIME_KEYS = ("amplitudes", "frequencies", "phases", "offsets", "duration")
PROTOCOL_KEYS = (
    "init_count",
    "train_a_count",
    "subset_count",
    "subset_len",
    "horizon",
    "rate",
    "transient_cutoff",
    "stride",
    "vs_train_count",
)
FEATURE_KEYS = ("d", "seed")
SEED_KEYS = ("sim",)
TOP_KEYS = ("variants", "out_dir", "jobs", "arm", "regime_a", "regime_b", "protocol", "features", "seeds")

INT_KEYS = {"init_count", "train_a_count", "subset_count", "subset_len", "horizon", "stride", "vs_train_count", "d"}


@dataclass(frozen=True)
class RegimeConfig:
    regime: TrajectoryRegime
    duration: float = DEFAULT_DURATION


@dataclass(frozen=True)
class RunConfig:
    """
    Fully resolved run description.

    Fields:
      - arm:        simulated arm
      - regime_a:   training regime (+ duration)
      - regime_b:   adaptation regime (+ duration)
      - protocol:   protocol numbers, run labels and feature settings
      - sim_seed:   noise seed of the simulator
      - out_dir:    output directory
      - jobs:       worker threads for the runs
      - feature_seed_fixed: the file set [features].seed explicitly
    """

    arm: ArmParameters = field(default_factory=ArmParameters)
    regime_a: RegimeConfig = field(default_factory=lambda: RegimeConfig(default_regimes()["A"]))
    regime_b: RegimeConfig = field(default_factory=lambda: RegimeConfig(default_regimes()["B"]))
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    sim_seed: int = C.SIM_SEED
    out_dir: str = DEFAULT_OUT_DIR
    jobs: int = 1
    feature_seed_fixed: bool = field(default=False, compare=False)

    def validate(self) -> "RunConfig":
        try:
            self.arm.validate()
            for name in ("regime_a", "regime_b"):
                rc: RegimeConfig = getattr(self, name)
                rc.regime.validate()
                if rc.regime.n != len(self.arm.masses):
                    raise ConfigError(f"{name} has {rc.regime.n} joints, the arm has {len(self.arm.masses)}")
                for f in rc.regime.frequencies:
                    if f >= self.protocol.rate / 2.0:
                        raise ConfigError(f"{name}.frequencies: {f} Hz is above the Nyquist limit")
                sample_count(rc.duration, self.protocol.rate)
            self.protocol.validate()
        except ConfigError:
            raise
        except RidgelineError as e:
            raise ConfigError(str(e)) from e
        if int(self.jobs) != self.jobs or self.jobs < 1:
            raise ConfigError(f"jobs must be a positive integer, got {self.jobs}")
        if int(self.sim_seed) != self.sim_seed or self.sim_seed < 0:
            raise ConfigError(f"seeds.sim must be a non-negative integer, got {self.sim_seed}")
        return self

    def samples(self, name: str) -> int:
        rc: RegimeConfig = getattr(self, name)
        return sample_count(rc.duration, self.protocol.rate)

    def to_dict(self) -> Dict[str, Any]:
        """Resolved config in the file layout; parse_config(to_dict()) gives it back."""
        arm = {k: (list(getattr(self.arm, k)) if k not in ("g", "sigma_sim") else getattr(self.arm, k)) for k in ARM_KEYS}
        regimes = {}
        for name in ("regime_a", "regime_b"):
            rc: RegimeConfig = getattr(self, name)
            regimes[name] = {
                "amplitudes": list(rc.regime.amplitudes),
                "frequencies": list(rc.regime.frequencies),
                "phases": list(rc.regime.phases),
                "offsets": list(rc.regime.offsets),
                "duration": rc.duration,
            }
        return {
            "variants": list(self.protocol.variants),
            "out_dir": self.out_dir,
            "jobs": self.jobs,
            "arm": arm,
            **regimes,
            "protocol": {k: getattr(self.protocol, k) for k in PROTOCOL_KEYS},
            "features": {"d": self.protocol.d, "seed": self.protocol.feature_seed},
            "seeds": {"sim": self.sim_seed},
        }


# ---------- Parsing ----------


def _check_keys(table: Dict[str, Any], allowed, path: str) -> None:
    if not isinstance(table, dict):
        raise ConfigError(f"{path or 'config'} must be a table")
    for key in table:
        if key not in allowed:
            dotted = f"{path}.{key}" if path else key
            raise ConfigError(f"Unknown config key: {dotted}")


def _number(value: Any, path: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(f"{path} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _pair(value: Any, path: str):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{path} must be a list of numbers")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _parse_regime(table: Dict[str, Any], base: RegimeConfig, path: str) -> RegimeConfig:
    _check_keys(table, REGIME_KEYS, path)
    values = {k: _pair(v, f"{path}.{k}") for k, v in table.items() if k != "duration"}
    regime = replace(base.regime, **values)
    duration = _number(table["duration"], f"{path}.duration") if "duration" in table else base.duration
    return RegimeConfig(regime=regime, duration=duration)


def parse_config(data: Dict[str, Any]) -> RunConfig:
    """Build and validate a RunConfig from a parsed TOML document."""
    _check_keys(data, TOP_KEYS, "")
    cfg = RunConfig()

    arm_table = data.get("arm", {})
    _check_keys(arm_table, ARM_KEYS, "arm")
    arm_values = {
        k: (_number(v, f"arm.{k}") if k in ("g", "sigma_sim") else _pair(v, f"arm.{k}")) for k, v in arm_table.items()
    }
    if "masses" in arm_values or "lengths" in arm_values:
        rods = ArmParameters.uniform_rods(
            arm_values.get("masses", cfg.arm.masses), arm_values.get("lengths", cfg.arm.lengths)
        )
        arm_values = {"com": rods.com, "inertias": rods.inertias, **arm_values}
    arm = replace(cfg.arm, **arm_values)

    regime_a = _parse_regime(data.get("regime_a", {}), cfg.regime_a, "regime_a")
    regime_b = _parse_regime(data.get("regime_b", {}), cfg.regime_b, "regime_b")

    proto_table = data.get("protocol", {})
    _check_keys(proto_table, PROTOCOL_KEYS, "protocol")
    proto_values = {k: _number(v, f"protocol.{k}", integer=k in INT_KEYS) for k, v in proto_table.items()}

    feat_table = data.get("features", {})
    _check_keys(feat_table, FEATURE_KEYS, "features")
    if "d" in feat_table:
        proto_values["d"] = _number(feat_table["d"], "features.d", integer=True)
    if "seed" in feat_table:
        proto_values["feature_seed"] = _number(feat_table["seed"], "features.seed", integer=True)

    seeds_table = data.get("seeds", {})
    _check_keys(seeds_table, SEED_KEYS, "seeds")
    sim_seed = _number(seeds_table["sim"], "seeds.sim", integer=True) if "sim" in seeds_table else cfg.sim_seed

    if "variants" in data:
        variants = data["variants"]
        if not isinstance(variants, list) or not all(isinstance(v, str) for v in variants):
            raise ConfigError("variants must be a list of run labels")
        proto_values["variants"] = tuple(v.strip().upper() for v in variants)

    proto_values["g"] = arm.g
    protocol = replace(cfg.protocol, **proto_values)

    out_dir = data.get("out_dir", cfg.out_dir)
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("out_dir must be a non-empty string")
    jobs = _number(data["jobs"], "jobs", integer=True) if "jobs" in data else cfg.jobs

    resolved = RunConfig(
        arm=arm,
        regime_a=regime_a,
        regime_b=regime_b,
        protocol=protocol,
        sim_seed=sim_seed,
        out_dir=out_dir,
        jobs=jobs,
        feature_seed_fixed="seed" in feat_table,
    )
    return resolved.validate()


def load_config(path: Optional[PathLike] = None) -> RunConfig:
    """Read a TOML file; None gives the defaults."""
    if path is None:
        return RunConfig().validate()
    p = pathlib.Path(path)
    try:
        with p.open("rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {p}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{p}: {e}") from e
    return parse_config(data)


def apply_overrides(
    cfg: RunConfig,
    seed: Optional[int] = None,
    out: Optional[str] = None,
    jobs: Optional[int] = None,
) -> RunConfig:
    """
    CLI flags win over the file. --seed N sets the simulator seed and, unless
    the file fixed it, the feature seed N + 1.
    """
    if seed is not None:
        protocol = cfg.protocol if cfg.feature_seed_fixed else replace(cfg.protocol, feature_seed=seed + 1)
        cfg = replace(cfg, sim_seed=seed, protocol=protocol)
    if out is not None:
        cfg = replace(cfg, out_dir=out)
    if jobs is not None:
        cfg = replace(cfg, jobs=jobs)
    return cfg.validate()
