"""
Performative Control - Property Tests
Forme close, gradients, convexité forte, régularité en M', contraction RRM
et régime stable sur des instances aléatoires
"""

import numpy as np
import pytest

from core.interfaces import FrobeniusBall, Policy, SeedPair, SystemConfig
from core.dynamics.noise import DiscreteNoise
from core.dynamics.perturbation import ScaledFactorPerturbation
from core.dynamics.stability import check_strong_stability
from core.dynamics.trajectory import closed_form_state, simulate_trajectory
from core.cost.expectation import (
    batch_gradients,
    enumerate_realizations,
    expected_cost_exact,
    expected_gradient_exact,
)
from core.cost.gradient import fd_gradient, grad_total, grad_total_from_realizations, total_cost
from core.cost.models import QuadraticCost
from core.analysis.constants import SensitivityProfile, compute_constants
from core.analysis.conditions import check_psc_condition, rrm_iteration_bound, stable_case_threshold
from core.solvers.rrm import psc_reference, rrm_run


def random_instance(rng: np.random.Generator):
    """Système, coût, perturbation, bruit, x0 et politique tirés au hasard"""
    d_x = int(rng.integers(1, 5))
    d_u = int(rng.integers(1, 5))
    H = int(rng.integers(1, 4))
    T = int(rng.integers(H + 1, 21))
    x0 = rng.normal(size=d_x)
    config = SystemConfig(
        A=0.3 * rng.normal(size=(d_x, d_x)) / d_x,
        B=rng.normal(size=(d_x, d_u)),
        K=0.2 * rng.normal(size=(d_u, d_x)),
        T=T,
        H=H,
        W=np.sqrt(d_x),
        x0_bound=float(np.linalg.norm(x0)) + 1.0,
        sigma2=1.0,
        kappa=2.0,
        gamma=0.5,
    )
    cost = QuadraticCost(np.diag(rng.uniform(0.5, 2.0, d_x)), np.diag(rng.uniform(0.5, 2.0, d_u)))
    perturbation = ScaledFactorPerturbation.symmetric(
        rng.uniform(0.0, 0.3, T), rng.normal(size=config.policy_shape), rng.normal(size=(d_x, d_x))
    )
    M = 0.5 * rng.normal(size=config.policy_shape)
    return config, cost, perturbation, DiscreteNoise.sign_cube(d_x), x0, M


def _ball_point(rng: np.random.Generator, shape, radius: float = 1.0) -> np.ndarray:
    matrix = rng.normal(size=shape)
    return radius * rng.uniform() * matrix / np.linalg.norm(matrix)


class TestRandomInstances:

    @pytest.mark.parametrize("seed", range(200))
    def test_closed_form_matches_recursion(self, seed):
        config, _, perturbation, noise, x0, M = random_instance(np.random.default_rng(seed))
        record = simulate_trajectory(config, M, perturbation, noise, x0, SeedPair(seed))
        for t in range(1, config.T + 1):
            closed = closed_form_state(config, M, record.perturbations, record.noises, x0, t)
            scale = max(1.0, float(np.linalg.norm(record.states[t])))
            assert np.linalg.norm(closed - record.states[t]) / scale <= 1e-10

    @pytest.mark.parametrize("seed", range(50))
    def test_gradient_matches_finite_differences(self, seed):
        config, cost, perturbation, noise, x0, M = random_instance(np.random.default_rng(100 + seed))
        record = simulate_trajectory(config, M, perturbation, noise, x0, SeedPair(seed))

        def objective(matrix):
            return total_cost(config, cost, matrix, x0, record.noises, record.perturbations)

        analytic = grad_total_from_realizations(config, cost, M, x0, record.noises, record.perturbations)
        numeric = fd_gradient(objective, M, h=1e-6)
        scale = max(1.0, float(np.linalg.norm(numeric)))
        assert np.linalg.norm(analytic - numeric) / scale <= 1e-5


class TestOracleBounds:

    X0 = np.array([1.0, -0.5])

    @pytest.fixture
    def short_bundle(self, short_system, short_model):
        cost, perturbation, _ = short_model
        return compute_constants(
            short_system, cost.mu, cost.sigma_s, cost.G,
            SensitivityProfile(eps=perturbation.eps, xi=perturbation.xi),
            M_bar=1.0,
        )

    def test_shifted_cost_is_strongly_convex(self, short_system, short_model, short_bundle):
        cost, perturbation, noise = short_model
        rng = np.random.default_rng(3)
        shape = short_system.policy_shape
        for _ in range(100):
            M1, M2, deployed = (_ball_point(rng, shape) for _ in range(3))
            c1 = expected_cost_exact(short_system, cost, perturbation, noise, M1, deployed, self.X0).estimate
            c2 = expected_cost_exact(short_system, cost, perturbation, noise, M2, deployed, self.X0).estimate
            g1 = expected_gradient_exact(short_system, cost, perturbation, noise, M1, deployed, self.X0)
            gap = M2 - M1
            residual = c2 - c1 - np.sum(g1 * gap) - 0.5 * short_bundle.mu_tilde * np.sum(gap ** 2)
            assert residual >= -1e-8

    def test_gradient_is_lipschitz_in_deployed_policy(self, short_system, short_model, short_bundle):
        cost, perturbation, noise = short_model
        rng = np.random.default_rng(4)
        shape = short_system.policy_shape
        for _ in range(100):
            M, first, second = (_ball_point(rng, shape) for _ in range(3))
            g1 = expected_gradient_exact(short_system, cost, perturbation, noise, M, first, self.X0)
            g2 = expected_gradient_exact(short_system, cost, perturbation, noise, M, second, self.X0)
            bound = short_bundle.condition_lhs * np.linalg.norm(first - second)
            assert np.linalg.norm(g1 - g2) <= bound + 1e-8

    def test_gradient_is_lipschitz_in_evaluated_policy(self, short_system, short_model, short_bundle):
        cost, perturbation, noise = short_model
        rng = np.random.default_rng(5)
        shape = short_system.policy_shape
        smoothness = float(np.sum(short_bundle.lam))
        for _ in range(100):
            M1, M2, deployed = (_ball_point(rng, shape) for _ in range(3))
            g1 = expected_gradient_exact(short_system, cost, perturbation, noise, M1, deployed, self.X0)
            g2 = expected_gradient_exact(short_system, cost, perturbation, noise, M2, deployed, self.X0)
            assert np.linalg.norm(g1 - g2) <= smoothness * np.linalg.norm(M1 - M2) + 1e-8

    def test_gradient_is_jointly_lipschitz(self, short_system, short_model, short_bundle):
        cost, perturbation, noise = short_model
        rng = np.random.default_rng(6)
        shape = short_system.policy_shape
        smoothness = float(np.sum(short_bundle.lam))
        for _ in range(100):
            M1, M2, first, second = (_ball_point(rng, shape) for _ in range(4))
            g1 = expected_gradient_exact(short_system, cost, perturbation, noise, M1, first, self.X0)
            g2 = expected_gradient_exact(short_system, cost, perturbation, noise, M2, second, self.X0)
            bound = (
                smoothness * np.linalg.norm(M1 - M2)
                + short_bundle.condition_lhs * np.linalg.norm(first - second)
            )
            assert np.linalg.norm(g1 - g2) <= bound + 1e-8

    def test_gradient_variance_is_bounded(self, stable_instance, constants_of):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        bundle = constants_of(stable_instance)
        bound = config.T * float(np.sum(bundle.vartheta ** 2))
        rng = np.random.default_rng(7)
        for _ in range(3):
            M = _ball_point(rng, config.policy_shape)
            realizations = enumerate_realizations(config, perturbation, noise, M, stable_instance.x0)
            gradients = batch_gradients(config, cost, M, realizations)
            mean = np.tensordot(realizations.weights, gradients, axes=1)
            variance = float(realizations.weights @ np.sum((gradients - mean) ** 2, axis=(1, 2)))
            assert variance <= bound

            deviations = []
            for k in range(200):
                record = simulate_trajectory(
                    config, M, perturbation, noise, stable_instance.x0, SeedPair(40).fork(k)
                )
                deviations.append(np.sum((grad_total(config, cost, M, record) - mean) ** 2))
            assert np.mean(deviations) <= bound


class TestRrmContraction:

    def test_observed_rate_within_predicted_ratio(self, stable_instance, constants_of):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        base = check_psc_condition(constants_of(stable_instance))
        stronger = perturbation.scaled(0.5 / base.contraction_ratio)
        bundle = compute_constants(
            config, cost.mu, cost.sigma_s, cost.G,
            SensitivityProfile(eps=stronger.eps, xi=stronger.xi),
            M_bar=1.0,
        )
        report = check_psc_condition(bundle)
        assert report.holds
        assert report.contraction_ratio == pytest.approx(0.5, rel=0.05)

        reference = psc_reference(
            config, cost, stronger, noise, stable_instance.x0, stable_instance.feasible_set, bundle=bundle
        )
        M0 = Policy.zeros(config, stable_instance.feasible_set)
        result = rrm_run(
            config, cost, stronger, noise, stable_instance.x0, M0,
            max_iters=50, tol=1e-11, reference=reference,
        )
        distances = result.reference_gaps
        for previous, current in zip(distances, distances[1:]):
            if previous > 1e-7:
                assert current <= (report.contraction_ratio + 0.05) * previous

        rho = 1e-4 * distances[0]
        reached = next(n for n, d in enumerate(distances) if d <= rho)
        assert reached <= rrm_iteration_bound(bundle, distances[0], rho)


class TestStableRegime:

    @pytest.mark.parametrize("seed", range(20))
    def test_threshold_implies_existence(self, seed):
        rng = np.random.default_rng(500 + seed)
        d_x = int(rng.integers(1, 4))
        H = int(rng.integers(1, 3))
        T = int(rng.integers(H + 1, 10))
        gamma = float(rng.uniform(0.3, 0.8))
        kappa = float(rng.uniform(1.0, 2.0))
        config = SystemConfig(
            A=np.diag(rng.uniform(-0.9, 0.9, d_x) * (1.0 - gamma)),
            B=np.eye(d_x),
            K=np.zeros((d_x, d_x)),
            T=T,
            H=H,
            W=np.sqrt(d_x),
            x0_bound=float(rng.uniform(0.0, 2.0)),
            sigma2=1.0,
            kappa=kappa,
            gamma=gamma,
        )
        assert check_strong_stability(config).certified

        xi = rng.uniform(0.0, 0.5 * gamma / kappa ** 2, T)
        zeta = float(np.max(1.0 - gamma + kappa ** 2 * xi))
        mu, sigma_s = float(rng.uniform(0.5, 2.0)), float(rng.uniform(2.0, 4.0))
        M_bar = FrobeniusBall(radius=1.0).radius

        def bundle_for(eps):
            profile = SensitivityProfile(eps=eps, xi=xi)
            return compute_constants(config, mu, sigma_s, sigma_s, profile, M_bar=M_bar)

        threshold, _ = stable_case_threshold(bundle_for(np.zeros(T)), zeta)
        weights = rng.dirichlet(np.ones(T))
        bundle = bundle_for(0.9 * threshold * weights)
        _, satisfied = stable_case_threshold(bundle, zeta)
        assert satisfied
        assert check_psc_condition(bundle).holds
