"""
Performative Control - Test Fixtures
Instances partagées par les tests
"""

from pathlib import Path

import numpy as np
import pytest

from core.interfaces import FrobeniusBall, Policy, SystemConfig, feasible_radius
from core.factory import create_instance
from core.dynamics.noise import DiscreteNoise
from core.dynamics.perturbation import ScaledFactorPerturbation
from core.cost.models import QuadraticCost
from core.analysis.constants import SensitivityProfile, compute_constants
from core.experiments.stock import StockMarketConfig


ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = ROOT / "config"


@pytest.fixture
def stable_yaml() -> Path:
    return CONFIG_DIR / "stable.yaml"


@pytest.fixture
def system_yaml() -> Path:
    return CONFIG_DIR / "system.yaml"


@pytest.fixture
def stable_instance(stable_yaml):
    """Instance à deux états, supports finis, condition d'existence satisfaite"""
    return create_instance(stable_yaml)


def instance_constants(instance, scale: float = 1.0):
    """Constantes d'une instance, sensibilités multipliées par scale"""
    config = instance.config
    profile = SensitivityProfile(
        eps=scale * instance.perturbation.eps, xi=scale * instance.perturbation.xi
    )
    return compute_constants(
        config,
        instance.cost.mu,
        instance.cost.sigma_s,
        instance.cost.G,
        profile,
        M_bar=feasible_radius(instance.feasible_set, config.policy_shape),
    )


@pytest.fixture
def constants_of():
    return instance_constants


@pytest.fixture
def two_state_system() -> SystemConfig:
    return SystemConfig(
        A=np.array([[0.3, 0.1], [0.0, 0.2]]),
        B=np.array([[1.0], [0.5]]),
        K=np.array([[0.1, 0.0]]),
        T=6,
        H=2,
        W=np.sqrt(2.0),
        x0_bound=2.0,
        sigma2=1.0,
        kappa=2.0,
        gamma=0.5,
    )


@pytest.fixture
def two_state_model(two_state_system):
    """(coût, perturbation, bruit) du système à deux états"""
    config = two_state_system
    cost = QuadraticCost(np.diag([1.0, 2.0]), np.array([[0.5]]))
    perturbation = ScaledFactorPerturbation.symmetric(
        scales=np.linspace(0.05, 0.3, config.T),
        direction=np.ones(config.policy_shape),
        factor=np.array([[0.0, 1.0], [1.0, 0.0]]),
    )
    noise = DiscreteNoise.sign_cube(config.d_x)
    return cost, perturbation, noise


@pytest.fixture
def two_state_policy(two_state_system) -> Policy:
    matrix = np.array([[0.2, -0.1, 0.05, 0.3]])
    return Policy(matrix=matrix, feasible_set=FrobeniusBall(radius=1.0))


@pytest.fixture
def reduced_stock() -> StockMarketConfig:
    """Instance boursière réduite (L=3, T=12), exécution courte"""
    return StockMarketConfig.reduced(N=20, eval_samples=16, reference="none")


@pytest.fixture
def short_system() -> SystemConfig:
    """Horizon court : 8³ branches énumérables"""
    return SystemConfig(
        A=np.array([[0.3, 0.1], [0.0, 0.2]]),
        B=np.array([[1.0], [0.5]]),
        K=np.array([[0.1, 0.0]]),
        T=3,
        H=2,
        W=np.sqrt(2.0),
        x0_bound=2.0,
        sigma2=1.0,
        kappa=2.0,
        gamma=0.5,
    )


@pytest.fixture
def short_model(short_system):
    cost = QuadraticCost(np.diag([1.0, 2.0]), np.array([[0.5]]))
    perturbation = ScaledFactorPerturbation.symmetric(
        [0.1, 0.2, 0.3], np.ones(short_system.policy_shape), np.array([[0.0, 1.0], [1.0, 0.0]])
    )
    return cost, perturbation, DiscreteNoise.sign_cube(2)
