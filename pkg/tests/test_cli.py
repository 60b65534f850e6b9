# tests/test_cli.py
import json
import pathlib

import pandas as pd
import pytest

from ridgeline import main
from src.cli.config import RunConfig, apply_overrides, load_config, parse_config
from src.utils.errors import ConfigError
from src.utils.io import load_json

SMALL_CONFIG = """
variants = ["P-ML", "ORACLE"]

[regime_a]
duration = 40.0

[regime_b]
duration = 40.0

[protocol]
init_count = 200
train_a_count = 300
subset_count = 2
subset_len = 300
horizon = 10
transient_cutoff = 5.0
vs_train_count = 140

[features]
d = 8
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL_CONFIG)
    return str(path)


@pytest.fixture
def generated(small_config, tmp_path):
    out = tmp_path / "data"
    assert main(["gen", "--config", small_config, "--out", str(out)]) == 0
    return out


# ---------- Config ----------


def test_defaults_follow_the_protocol():
    cfg = load_config()
    assert cfg.samples("regime_a") == 10000
    assert cfg.samples("regime_b") == 10000
    assert cfg.protocol.variants[-1] == "ORACLE"
    assert cfg.sim_seed == 0


def test_shipped_config_loads():
    root = pathlib.Path(__file__).resolve().parents[1]
    cfg = load_config(root / "configs" / "default.toml")
    assert len(cfg.protocol.variants) == 8
    assert cfg.protocol.d == 100
    assert not cfg.feature_seed_fixed


def test_declared_python_version_reads_toml():
    root = pathlib.Path(__file__).resolve().parents[1]
    declared = json.loads((root / "langgraph.json").read_text())["python_version"]
    assert tuple(int(part) for part in declared.split(".")) >= (3, 11)
    assert "Python >= 3.11" in (root / "requirements.txt").read_text()


def test_short_links_get_uniform_rod_geometry():
    cfg = parse_config({"arm": {"lengths": [0.2, 0.1]}})
    assert cfg.arm.com == pytest.approx((0.1, 0.05))
    assert cfg.arm.inertias == pytest.approx((1.0 * 0.2**2 / 12.0, 0.8 * 0.1**2 / 12.0))


def test_explicit_com_wins_over_derived_rods():
    cfg = parse_config({"arm": {"masses": [2.0, 1.0], "com": [0.2, 0.1]}})
    assert cfg.arm.com == pytest.approx((0.2, 0.1))
    assert cfg.arm.inertias == pytest.approx((2.0 * 0.5**2 / 12.0, 1.0 * 0.4**2 / 12.0))


@pytest.mark.parametrize(
    "data, path",
    [({"arm": {"mass": [1.0, 1.0]}}, "arm.mass"), ({"colour": 1}, "colour"), ({"protocol": {"T": 25}}, "protocol.T")],
)
def test_unknown_keys_are_named(data, path):
    with pytest.raises(ConfigError, match=f"Unknown config key: {path}"):
        parse_config(data)


def test_rejects_aliased_frequencies():
    with pytest.raises(ConfigError, match="Nyquist"):
        parse_config({"regime_b": {"frequencies": [0.5, 10.0]}})


def test_rejects_invalid_protocol():
    with pytest.raises(ConfigError):
        parse_config({"protocol": {"horizon": 0}})


def test_variant_labels_are_normalized():
    assert parse_config({"variants": [" np-ml ", "ORACLE"]}).protocol.variants == ("NP-ML", "ORACLE")


def test_resolved_config_round_trips():
    cfg = parse_config({"seeds": {"sim": 4}, "features": {"d": 12}, "jobs": 2})
    assert parse_config(cfg.to_dict()) == cfg


def test_seed_override_moves_feature_seed():
    cfg = apply_overrides(RunConfig(), seed=5)
    assert (cfg.sim_seed, cfg.protocol.feature_seed) == (5, 6)
    fixed = apply_overrides(parse_config({"features": {"seed": 3}}), seed=5)
    assert (fixed.sim_seed, fixed.protocol.feature_seed) == (5, 3)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")


# ---------- gen ----------


def test_gen_writes_both_datasets(generated):
    a = pd.read_csv(generated / "dataset_a.csv")
    b = pd.read_csv(generated / "dataset_b.csv")
    assert len(a) == len(b) == 800
    assert list(a.columns) == list(b.columns)


def test_gen_seed_changes_values_not_schema(small_config, generated, tmp_path):
    other = tmp_path / "other"
    assert main(["gen", "--config", small_config, "--out", str(other), "--seed", "7"]) == 0
    a0 = pd.read_csv(generated / "dataset_a.csv")
    a7 = pd.read_csv(other / "dataset_a.csv")
    assert list(a0.columns) == list(a7.columns)
    assert a0["q1"].equals(a7["q1"])
    assert not a0["y1"].equals(a7["y1"])


def test_dry_run_writes_nothing(small_config, tmp_path, capsys):
    out = tmp_path / "dry"
    assert main(["gen", "--config", small_config, "--out", str(out), "--dry-run"]) == 0
    assert main(["experiment", "--config", small_config, "--out", str(out), "--dry-run"]) == 0
    assert not out.exists()
    assert "would write" in capsys.readouterr().out


# ---------- fit / predict ----------


def test_fit_parametric_model(small_config, generated, tmp_path, capsys):
    out = tmp_path / "models"
    data = str(generated / "dataset_a.csv")
    assert main(["fit", "--config", small_config, "--data", data, "--variant", "p-ml", "--out", str(out)]) == 0
    assert "P-ML: final nll" in capsys.readouterr().out

    model = load_json(out / "P-ML.model.json")
    assert len(model["theta"]) == 5
    assert model["feature_map"] is None
    assert load_json(out / "P-ML.fit.json")["method"] == "ML"


def test_refit_is_byte_identical(small_config, generated, tmp_path):
    data = str(generated / "dataset_a.csv")
    for name in ("first", "second"):
        assert main(["fit", "--config", small_config, "--data", data, "--variant", "NP-VS", "--out", str(tmp_path / name)]) == 0
    first = (tmp_path / "first" / "NP-VS.model.json").read_bytes()
    assert first == (tmp_path / "second" / "NP-VS.model.json").read_bytes()


def test_predict_prints_torques(small_config, generated, tmp_path, capsys):
    out = tmp_path / "models"
    data = str(generated / "dataset_a.csv")
    main(["fit", "--config", small_config, "--data", data, "--variant", "P-ML", "--out", str(out)])
    capsys.readouterr()

    assert main(["predict", "--model", str(out / "P-ML.model.json"), "--x", "0.1,0.2,0,0,0,0"]) == 0
    values = capsys.readouterr().out.strip().split(",")
    assert len(values) == 2
    assert all(float(v) == float(v) for v in values)


def test_predict_rejects_malformed_state(small_config, generated, tmp_path, capsys):
    out = tmp_path / "models"
    main(["fit", "--config", small_config, "--data", str(generated / "dataset_a.csv"), "--variant", "P-ML", "--out", str(out)])
    assert main(["predict", "--model", str(out / "P-ML.model.json"), "--x", "0.1,0.2"]) == 2
    assert "error:" in capsys.readouterr().err


def test_bad_config_exits_with_two(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("[arm]\nmass = [1.0, 1.0]\n")
    assert main(["gen", "--config", str(path)]) == 2
    assert "Unknown config key: arm.mass" in capsys.readouterr().err


# ---------- experiment ----------


def test_experiment_writes_report(small_config, generated, tmp_path):
    out = tmp_path / "exp"
    assert main(["experiment", "--config", small_config, "--data", str(generated), "--out", str(out), "--jobs", "2"]) == 0

    report = load_json(out / "report.json")
    assert report["config"]["protocol"]["subset_len"] == 300
    assert report["config"]["jobs"] == 2
    assert report["failures"] == {}
    assert set(report["summary"]) == {"P-ML", "ORACLE"}

    frame = pd.read_csv(out / "P-ML.csv")
    assert list(frame.columns) == ["t_seconds", "eps_mean", "eps_per_subset_1", "eps_per_subset_2"]
    assert len(frame) == 290


def test_experiment_is_reproducible(small_config, generated, tmp_path):
    for name in ("one", "two"):
        main(["experiment", "--config", small_config, "--data", str(generated), "--out", str(tmp_path / name)])
    assert (tmp_path / "one" / "P-ML.csv").read_bytes() == (tmp_path / "two" / "P-ML.csv").read_bytes()
