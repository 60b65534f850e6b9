# tests/conftest.py
import numpy as np
import pytest

from src.dynamics.arm import ArmParameters
from src.dynamics.dataset import simulate_dataset
from src.dynamics.trajectory import default_regimes, trajectory_array
from src.features.random_features import FeatureMap


@pytest.fixture
def arm():
    return ArmParameters()


@pytest.fixture
def quiet_arm():
    """No friction and no noise: torques are exactly psi(x).T pi."""
    return ArmParameters(viscous=(0.0, 0.0), coulomb=(0.0, 0.0), sigma_sim=0.0)


@pytest.fixture
def regimes():
    return default_regimes()


@pytest.fixture
def short_a(arm, regimes):
    """60 s of regime A (1200 samples)."""
    t, X = trajectory_array(regimes["A"], 60.0, 20.0)
    return simulate_dataset(t, X, arm, seed=0, rate=20.0)


@pytest.fixture
def short_b(arm, regimes):
    """60 s of regime B (1200 samples)."""
    t, X = trajectory_array(regimes["B"], 60.0, 20.0)
    return simulate_dataset(t, X, arm, seed=1, rate=20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_map():
    return FeatureMap(d=8, m=6, tau=2.0, seed=3)
