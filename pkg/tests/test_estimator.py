# tests/test_estimator.py
import numpy as np
import pytest

from src.dynamics.arm import JointState, base_parameters, closed_form_torques
from src.estimator.batch import batch_tikhonov, normal_equations
from src.estimator.predict import predict, predict_batch
from src.estimator.rls import posterior_covariance, rls_init, rls_solve, rls_update, rls_update_batch
from src.features.random_features import median_sq_distance
from src.models.design import build_design_batch, build_prior, mean_batch
from src.models.variants import Hyperparameters, ModelVariant, make_spec
from src.utils.errors import InvalidInputError, SingularSystemError

PI = np.array([0.3, 0.1, 0.05, 0.9, 0.2])

HYPER = {
    ModelVariant.P: Hyperparameters(gamma2=2.0, sigma2=0.05),
    ModelVariant.NP: Hyperparameters(rho2=3.0, tau2=4.0, sigma2=0.05),
    ModelVariant.SP: Hyperparameters(pi_mean=PI, rho2=3.0, tau2=4.0, sigma2=0.05),
    ModelVariant.SP2: Hyperparameters(pi_hat=PI, rho2=3.0, tau2=4.0, sigma2=0.05),
    ModelVariant.SPK: Hyperparameters(gamma2=2.0, rho2=3.0, tau2=4.0, sigma2=0.05),
}


def _problem(variant, ds, count=200, d=5):
    spec = make_spec(variant, HYPER[variant], d=d, feature_seed=2)
    X, Y = ds.X[:count], ds.Y[:count]
    return spec, build_design_batch(spec, X), Y - mean_batch(spec, X)


def _stream(prec, sigma2, designs, ys):
    return rls_update_batch(rls_init(prec, sigma2), designs, ys)


# ---------- Initialization ----------


def test_fresh_state_solves_to_zero():
    state = rls_init(np.array([1.0, 2.0]), 1.0)
    assert state.t == 0
    np.testing.assert_array_equal(rls_solve(state), [0.0, 0.0])


def test_scalar_update():
    state = rls_update(rls_init(np.array([1.0]), 1.0), np.array([[1.0]]), np.array([1.0]))
    np.testing.assert_allclose(state.information, [[2.0]])
    np.testing.assert_allclose(state.b, [1.0])
    np.testing.assert_allclose(rls_solve(state), [0.5])
    assert state.t == 1


@pytest.mark.parametrize("prec, sigma2", [([1.0, -1.0], 1.0), ([1.0], 0.0), ([np.nan], 1.0), ([], 1.0)])
def test_init_rejects_bad_inputs(prec, sigma2):
    with pytest.raises(InvalidInputError):
        rls_init(np.array(prec), sigma2)


def test_update_rejects_bad_shapes_and_values():
    state = rls_init(np.ones(3), 1.0)
    with pytest.raises(InvalidInputError):
        rls_update(state, np.ones((2, 4)), np.ones(2))
    with pytest.raises(InvalidInputError):
        rls_update(state, np.ones((2, 3)), np.array([1.0, np.inf]))
    assert state.t == 0


# ---------- Recursion vs batch ----------


def _random_config(case, ds):
    """Variant cycles with the case; p <= 100 and t <= 300."""
    rng = np.random.default_rng(100 + case)
    variant = list(ModelVariant)[case % len(ModelVariant)]
    d = int(rng.integers(1, 24))
    t = int(rng.integers(1, 301))
    start = int(rng.integers(0, len(ds) - t))
    hyper = HYPER[variant].with_values(
        **{
            name: float(10.0 ** rng.uniform(-1.0, 1.0))
            for name in ("gamma2", "rho2", "tau2")
            if getattr(HYPER[variant], name) is not None
        },
        sigma2=float(10.0 ** rng.uniform(-2.0, 0.0)),
    )
    spec = make_spec(variant, hyper, d=d, feature_seed=case)
    X, Y = ds.X[start : start + t], ds.Y[start : start + t]
    return spec, build_design_batch(spec, X), Y - mean_batch(spec, X)


@pytest.mark.parametrize("case", range(50))
def test_recursion_matches_batch(case, short_a):
    spec, designs, ys = _random_config(case, short_a)
    assert spec.p_theta <= 100
    prec = 1.0 / build_prior(spec)
    sigma2 = spec.hyper.sigma2

    theta_rls = rls_solve(_stream(prec, sigma2, designs, ys))
    theta_batch = batch_tikhonov(designs, ys, prec, sigma2)
    assert np.linalg.norm(theta_rls - theta_batch) <= 1e-8 * (1.0 + np.linalg.norm(theta_batch))


def test_information_matches_normal_equations(short_a):
    spec, designs, ys = _problem(ModelVariant.SPK, short_a, count=50, d=3)
    prec = 1.0 / build_prior(spec)
    state = _stream(prec, 0.05, designs, ys)
    A, b = normal_equations(designs, ys, prec, 0.05)
    np.testing.assert_allclose(state.information, A, rtol=1e-10, atol=1e-8)
    np.testing.assert_allclose(state.b, b, rtol=1e-12, atol=1e-10)


def test_order_invariance(short_a):
    spec, designs, ys = _problem(ModelVariant.NP, short_a)
    prec = 1.0 / build_prior(spec)
    forward = rls_solve(_stream(prec, 0.05, designs, ys))
    backward = rls_solve(_stream(prec, 0.05, designs[::-1], ys[::-1]))
    np.testing.assert_allclose(forward, backward, rtol=1e-9, atol=1e-11)


def test_smallest_information_eigenvalue_never_decreases(short_a):
    spec, designs, ys = _problem(ModelVariant.SPK, short_a, count=60, d=2)
    state = rls_init(1.0 / build_prior(spec), 0.05)
    previous = np.linalg.eigvalsh(state.information)[0]
    for design, y in zip(designs, ys):
        rls_update(state, design, y)
        smallest = np.linalg.eigvalsh(state.information)[0]
        assert smallest >= previous * (1.0 - 1e-9)
        previous = smallest


def test_copy_branches_independently(short_a):
    spec, designs, ys = _problem(ModelVariant.P, short_a)
    state = _stream(1.0 / build_prior(spec), 0.05, designs[:100], ys[:100])
    snapshot = state.copy()
    rls_update_batch(state, designs[100:], ys[100:])
    assert snapshot.t == 100
    assert state.t == 200
    assert not np.allclose(rls_solve(snapshot), rls_solve(state))


# ---------- Unregularized coordinates ----------


def test_unexcited_unregularized_coordinate_is_named():
    state = rls_init(np.array([1.0, 0.0, 1.0]), 1.0)
    rls_update(state, np.array([[1.0, 0.0, 2.0]]), np.array([1.0]))
    with pytest.raises(SingularSystemError) as info:
        rls_solve(state)
    assert info.value.coordinate == 1


def test_excited_unregularized_coordinate_solves():
    state = rls_init(np.array([0.0]), 1.0)
    rls_update(state, np.array([[2.0]]), np.array([4.0]))
    np.testing.assert_allclose(rls_solve(state), [2.0])


def test_broad_rbd_prior_approaches_unregularized_block(short_a):
    spec, designs, ys = _problem(ModelVariant.SPK, short_a, d=3)
    broad = make_spec(ModelVariant.SPK, HYPER[ModelVariant.SPK].with_values(gamma2=1e8), d=3, feature_seed=2)
    prec_broad = 1.0 / build_prior(broad)
    prec_zero = prec_broad.copy()
    prec_zero[: spec.p_rbd] = 0.0

    theta_broad = rls_solve(_stream(prec_broad, 0.05, designs, ys))
    theta_zero = rls_solve(_stream(prec_zero, 0.05, designs, ys))
    np.testing.assert_allclose(theta_broad, theta_zero, rtol=1e-3, atol=1e-6)


# ---------- Posterior ----------


def test_posterior_covariance_inverts_information(rng):
    designs = rng.normal(size=(20, 2, 4))
    ys = rng.normal(size=(20, 2))
    state = _stream(np.full(4, 0.5), 0.2, designs, ys)
    np.testing.assert_allclose(posterior_covariance(state) @ state.information, np.eye(4), atol=1e-10)


# ---------- Prediction ----------


def test_parametric_model_with_true_parameters_is_exact(quiet_arm, rng):
    pi = base_parameters(quiet_arm).pi
    spec = make_spec(ModelVariant.P, HYPER[ModelVariant.P])
    x = JointState.from_vector(rng.normal(size=6))
    np.testing.assert_allclose(predict(spec, pi, x), closed_form_torques(x, pi), atol=1e-12)


def test_zero_kernel_weights_predict_the_mean(rng):
    spec = make_spec(ModelVariant.SP, HYPER[ModelVariant.SP], d=4)
    X = rng.normal(size=(5, 6))
    np.testing.assert_allclose(predict_batch(spec, np.zeros(spec.p_theta), X), mean_batch(spec, X))


def test_np_fits_a_target_in_its_span(short_a, rng):
    hyper = Hyperparameters(rho2=1e8, tau2=median_sq_distance(short_a.X[:500]), sigma2=1.0)
    spec = make_spec(ModelVariant.NP, hyper, d=8, feature_seed=5)
    X = short_a.X[:500]
    designs = build_design_batch(spec, X)
    Y = designs @ rng.normal(size=spec.p_theta)

    theta = rls_solve(_stream(1.0 / build_prior(spec), hyper.sigma2, designs, Y))
    Y_hat = predict_batch(spec, theta, X)
    assert np.linalg.norm(Y_hat - Y) <= 1e-6 * np.linalg.norm(Y)


@pytest.mark.parametrize("variant", [ModelVariant.NP, ModelVariant.SP])
def test_prediction_is_linear_in_theta(variant, rng):
    spec = make_spec(variant, HYPER[variant], d=4, feature_seed=3)
    X = rng.normal(size=(6, 6))
    theta_1, theta_2 = rng.normal(size=(2, spec.p_theta))
    a, b = 0.7, -1.9
    mean = mean_batch(spec, X)
    combined = predict_batch(spec, a * theta_1 + b * theta_2, X)
    expected = a * predict_batch(spec, theta_1, X) + b * predict_batch(spec, theta_2, X) - (a + b - 1.0) * mean
    np.testing.assert_allclose(combined, expected, rtol=1e-12, atol=1e-10)


def test_predict_rejects_wrong_theta_length():
    spec = make_spec(ModelVariant.P, HYPER[ModelVariant.P])
    with pytest.raises(InvalidInputError):
        predict(spec, np.zeros(4), JointState.from_vector(np.zeros(6)))
