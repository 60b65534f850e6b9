# tests/test_dynamics.py
import math

import numpy as np
import pytest

from src.dynamics.arm import (
    ArmParameters,
    JointState,
    base_parameters,
    closed_form_torques,
    rbd_regressor,
    rbd_regressor_batch,
    simulate_torques,
)
from src.dynamics.dataset import Dataset, load_dataset, save_dataset, simulate_dataset
from src.dynamics.trajectory import TrajectoryRegime, gen_trajectory, trajectory_array
from src.utils.errors import DatasetParseError, InvalidInputError


def _state(q, dq=(0.0, 0.0), ddq=(0.0, 0.0)):
    return JointState(q=np.array(q), dq=np.array(dq), ddq=np.array(ddq))


# ---------- JointState / ArmParameters ----------


def test_joint_state_rejects_mismatched_lengths():
    with pytest.raises(InvalidInputError):
        JointState(q=np.zeros(2), dq=np.zeros(3), ddq=np.zeros(2))


def test_joint_state_rejects_nan():
    with pytest.raises(InvalidInputError):
        _state((0.0, np.nan))


def test_stacked_vector_has_length_3n():
    x = _state((0.1, 0.2), (0.3, 0.4), (0.5, 0.6))
    assert x.x.shape == (6,)
    assert JointState.from_vector(x.x).x.tolist() == x.x.tolist()


def test_arm_validation_rejects_negative_mass():
    with pytest.raises(InvalidInputError):
        ArmParameters(masses=(-1.0, 0.8)).validate()


def test_arm_validation_rejects_com_beyond_link():
    with pytest.raises(InvalidInputError):
        ArmParameters(com=(0.6, 0.2)).validate()


def test_base_parameters_first_two_positive(arm):
    pi = base_parameters(arm).pi
    assert pi.shape == (5,)
    assert pi[0] > 0 and pi[1] > 0


# ---------- Regressor ----------


def test_regressor_at_rest_keeps_only_gravity():
    psi = rbd_regressor(_state((0.0, 0.0)), g=9.81)
    np.testing.assert_allclose(psi[:, 0], [0, 0, 0, 9.81, 9.81], atol=1e-15)
    np.testing.assert_allclose(psi[:, 1], [0, 0, 0, 0, 9.81], atol=1e-15)


def test_regressor_zeros_at_right_angle():
    psi = rbd_regressor(_state((0.0, math.pi / 2)), g=9.81)
    assert abs(psi[2, 0]) < 1e-15
    assert abs(psi[2, 1]) < 1e-15
    assert abs(psi[4, 1]) < 1e-14


def test_regressor_matches_closed_form(rng):
    X = rng.normal(size=(1000, 6)) * np.array([3, 3, 2, 2, 5, 5])
    pis = rng.normal(size=(1000, 5))
    psi = rbd_regressor_batch(X)
    for k in range(1000):
        x = JointState.from_vector(X[k])
        tau = closed_form_torques(x, pis[k])
        np.testing.assert_allclose(psi[k].T @ pis[k], tau, rtol=0, atol=1e-10)


def test_static_torque_is_potential_gradient(arm):
    pi = base_parameters(arm).pi
    g = arm.g

    def potential(q):
        return g * (pi[3] * math.sin(q[0]) + pi[4] * math.sin(q[0] + q[1]))

    q = np.array([0.3, -0.7])
    h = 1e-6
    grad = np.array(
        [(potential(q + h * e) - potential(q - h * e)) / (2 * h) for e in np.eye(2)]
    )
    tau = rbd_regressor(_state(q), g=g).T @ pi
    np.testing.assert_allclose(tau, grad, atol=1e-6)


def test_regressor_rejects_three_joints():
    with pytest.raises(InvalidInputError):
        rbd_regressor(JointState(q=np.zeros(3), dq=np.zeros(3), ddq=np.zeros(3)))


# ---------- Simulator ----------


def test_simulator_without_friction_or_noise_is_rbd(quiet_arm, rng):
    x = JointState.from_vector(rng.normal(size=6))
    y = simulate_torques(x, quiet_arm, rng_seed=5)
    np.testing.assert_array_equal(y, rbd_regressor(x).T @ base_parameters(quiet_arm).pi)


def test_coulomb_vanishes_at_rest():
    arm = ArmParameters(sigma_sim=0.0)
    x = _state((0.2, 0.1))
    y = simulate_torques(x, arm, rng_seed=0)
    np.testing.assert_allclose(y, rbd_regressor(x).T @ base_parameters(arm).pi, atol=1e-15)


def test_simulator_is_deterministic(arm):
    x = _state((0.2, 0.1), (1.0, -1.0), (0.5, 0.5))
    np.testing.assert_array_equal(simulate_torques(x, arm, 7, index=3), simulate_torques(x, arm, 7, index=3))


def test_simulate_dataset_matches_per_sample(arm, regimes):
    t, X = trajectory_array(regimes["A"], 2.0, 20.0)
    ds = simulate_dataset(t, X, arm, seed=11)
    for k in (0, 17, 39):
        np.testing.assert_allclose(ds.Y[k], simulate_torques(ds.state(k), arm, 11, index=k), rtol=0, atol=1e-12)


# ---------- Trajectories ----------


def test_zero_amplitude_is_constant():
    regime = TrajectoryRegime(amplitudes=(0.0, 0.0), frequencies=(0.5, 0.5), phases=(0.0, 0.0), offsets=(0.3, -0.2))
    _, X = trajectory_array(regime, 5.0, 20.0)
    np.testing.assert_allclose(X[:, 0], 0.3)
    np.testing.assert_allclose(X[:, 2:], 0.0)


def test_acceleration_is_sinusoid_identity(regimes):
    regime = regimes["A"]
    _, X = trajectory_array(regime, 10.0, 20.0)
    for i in range(2):
        w = 2 * math.pi * regime.frequencies[i]
        np.testing.assert_allclose(X[:, 4 + i], -(w**2) * (X[:, i] - regime.offsets[i]), atol=1e-12)


def test_velocity_matches_finite_differences(regimes):
    rate = 1000.0
    _, X = trajectory_array(regimes["A"], 2.0, rate)
    dt = 1.0 / rate
    central = (X[2:, :2] - X[:-2, :2]) / (2 * dt)
    np.testing.assert_allclose(central, X[1:-1, 2:4], atol=1e-4)


def test_acceleration_matches_finite_differences(regimes):
    rate = 1000.0
    _, X = trajectory_array(regimes["B"], 2.0, rate)
    dt = 1.0 / rate
    central = (X[2:, :2] - 2.0 * X[1:-1, :2] + X[:-2, :2]) / dt**2
    np.testing.assert_allclose(central, X[1:-1, 4:6], atol=1e-3)


def test_default_duration_gives_10000_samples(regimes):
    t, X = trajectory_array(regimes["A"], 500.0, 20.0)
    assert t.shape == (10000,)
    assert X.shape == (10000, 6)


def test_aliasing_frequency_rejected():
    regime = TrajectoryRegime(amplitudes=(1.0,), frequencies=(10.0,), phases=(0.0,), offsets=(0.0,))
    with pytest.raises(InvalidInputError):
        trajectory_array(regime, 1.0, 20.0)


def test_gen_trajectory_returns_states(regimes):
    states = gen_trajectory(regimes["B"], 1.0, 20.0)
    assert len(states) == 20
    assert all(s.n == 2 for s in states)


# ---------- Dataset CSV ----------


def test_csv_round_trip_is_bit_exact(tmp_path, arm, regimes):
    t, X = trajectory_array(regimes["A"], 500.0, 20.0)
    ds = simulate_dataset(t, X, arm, seed=3)
    path = save_dataset(ds, tmp_path / "a.csv")
    assert load_dataset(path) == ds


def test_empty_dataset_round_trip(tmp_path):
    path = save_dataset(Dataset.empty(2), tmp_path / "empty.csv")
    assert path.read_text().count("\n") == 1
    assert len(load_dataset(path)) == 0


def test_single_sample_row_width(tmp_path):
    ds = Dataset(t=np.zeros(1), X=np.ones((1, 6)), Y=np.ones((1, 2)))
    lines = save_dataset(ds, tmp_path / "one.csv").read_text().splitlines()
    assert len(lines) == 2
    assert len(lines[1].split(",")) == 1 + 6 + 2


def test_non_numeric_cell_names_line(tmp_path, short_a):
    path = save_dataset(short_a.window(slice(0, 5)), tmp_path / "bad.csv")
    lines = path.read_text().splitlines()
    cells = lines[3].split(",")
    cells[2] = "abc"
    lines[3] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetParseError) as err:
        load_dataset(path)
    assert "line 4" in str(err.value)


def _rewrite(path, edit):
    lines = path.read_text().splitlines()
    edit(lines)
    path.write_text("\n".join(lines) + "\n")


def test_short_row_names_line(tmp_path, short_a):
    path = save_dataset(short_a.window(slice(0, 5)), tmp_path / "short.csv")
    _rewrite(path, lambda lines: lines.__setitem__(2, ",".join(lines[2].split(",")[:-2])))
    with pytest.raises(DatasetParseError) as err:
        load_dataset(path)
    assert err.value.line == 3
    assert "line 3" in str(err.value)


def test_long_row_names_line(tmp_path, short_a):
    path = save_dataset(short_a.window(slice(0, 5)), tmp_path / "long.csv")
    _rewrite(path, lambda lines: lines.__setitem__(3, lines[3] + ",1.0,2.0"))
    with pytest.raises(DatasetParseError) as err:
        load_dataset(path)
    assert err.value.line == 4
    assert str(err.value).startswith("line 4")


def test_blank_line_is_rejected_at_its_own_line(tmp_path, short_a):
    path = save_dataset(short_a.window(slice(0, 5)), tmp_path / "gap.csv")

    def edit(lines):
        cells = lines[3].split(",")
        cells[1] = "abc"
        lines[3] = ",".join(cells)
        lines.insert(2, "")

    _rewrite(path, edit)
    with pytest.raises(DatasetParseError) as err:
        load_dataset(path)
    assert err.value.line == 3
    assert "blank" in str(err.value)


@pytest.mark.parametrize(
    "header",
    ["t,q1,q2,dq1,dq2,ddq1,ddq2,y1", "t,q1,q2,dq1,dq2,ddq1,ddq2,y1,z2", "time,q1,q2,dq1,dq2,ddq1,ddq2,y1,y2"],
)
def test_malformed_header_names_line_one(tmp_path, header):
    path = tmp_path / "header.csv"
    path.write_text(header + "\n")
    with pytest.raises(DatasetParseError) as err:
        load_dataset(path)
    assert err.value.line == 1


def test_missing_header_rejected(tmp_path):
    path = tmp_path / "blank.csv"
    path.write_text("")
    with pytest.raises(DatasetParseError):
        load_dataset(path)


def test_timestamps_must_follow_rate():
    with pytest.raises(InvalidInputError):
        Dataset(t=np.array([0.0, 0.05, 0.2]), X=np.zeros((3, 6)), Y=np.zeros((3, 2)), rate=20.0)


def test_window_keeps_timestamps(short_a):
    win = short_a.window(slice(100, 110))
    assert len(win) == 10
    assert win.t[0] == short_a.t[100]