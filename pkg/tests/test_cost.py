"""
Performative Control - Cost Tests
Gradients analytiques, espérances exactes et Monte-Carlo, modèles de coût
"""

import numpy as np
import pytest

from core.interfaces import (
    SeedPair,
    BudgetExceededException,
    ConfigException,
)
from core.dynamics.noise import ZeroNoise
from core.dynamics.trajectory import simulate_trajectory
from core.cost.expectation import (
    ENUMERATION,
    MONTE_CARLO,
    batch_gradients,
    count_branches,
    enumerate_realizations,
    expected_cost_exact,
    expected_cost_mc,
    expected_gradient_exact,
    expected_gradient_mc,
)
from core.cost.gradient import (
    fd_gradient,
    grad_policy_stage,
    grad_total,
    grad_total_from_realizations,
    total_cost,
)
from core.cost.models import QuadraticCost, StockRiskCost


X0 = np.array([1.0, -0.5])


class TestGradient:

    def test_analytic_gradient_matches_finite_differences(
        self, two_state_system, two_state_model, two_state_policy
    ):
        cost, perturbation, noise = two_state_model
        record = simulate_trajectory(two_state_system, two_state_policy, perturbation, noise, X0, SeedPair(1))

        def objective(M):
            return total_cost(two_state_system, cost, M, X0, record.noises, record.perturbations)

        analytic = grad_total_from_realizations(
            two_state_system, cost, two_state_policy, X0, record.noises, record.perturbations
        )
        numeric = fd_gradient(objective, np.array(two_state_policy.matrix))
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-6)

    def test_stage_gradients_sum_to_total(self, two_state_system, two_state_model, two_state_policy):
        cost, perturbation, noise = two_state_model
        record = simulate_trajectory(two_state_system, two_state_policy, perturbation, noise, X0, SeedPair(2))
        stages = sum(
            grad_policy_stage(
                two_state_system, cost, two_state_policy, X0, record.noises, record.perturbations, t
            )
            for t in range(two_state_system.T + 1)
        )
        total = grad_total(two_state_system, cost, two_state_policy, record)
        np.testing.assert_allclose(stages, total, rtol=1e-10, atol=1e-12)

    def test_stage_gradient_vanishes_without_past_noise(self, short_system, short_model):
        cost, perturbation, noise = short_model
        M = np.array([[0.3, -0.2, 0.1, 0.4]])
        record = simulate_trajectory(short_system, M, perturbation, noise, X0, SeedPair(3))
        first = grad_policy_stage(short_system, cost, M, X0, record.noises, record.perturbations, 0)
        np.testing.assert_array_equal(first, np.zeros_like(M))

        quiet = simulate_trajectory(short_system, M, perturbation, ZeroNoise(2), X0, SeedPair(3))
        for t in range(short_system.T + 1):
            stage = grad_policy_stage(short_system, cost, M, X0, quiet.noises, quiet.perturbations, t)
            np.testing.assert_array_equal(stage, np.zeros_like(M))

    def test_fd_gradient_of_quadratic_form(self):
        weights = np.array([[2.0, 0.0], [0.0, 3.0]])
        gradient = fd_gradient(lambda M: float(np.sum(weights * M ** 2)), np.array([[1.0, -1.0]]), h=1e-5)
        np.testing.assert_allclose(gradient, [[4.0, -6.0]], rtol=1e-8)


class TestExpectation:

    def test_branch_count(self, short_system, short_model):
        cost, perturbation, noise = short_model
        assert count_branches(short_system, perturbation, noise, np.zeros(short_system.policy_shape)) == 8 ** 3

    def test_enumeration_budget(self, short_system, short_model):
        cost, perturbation, noise = short_model
        M = np.zeros(short_system.policy_shape)
        with pytest.raises(BudgetExceededException):
            expected_cost_exact(short_system, cost, perturbation, noise, M, M, X0, budget=100)

    def test_monte_carlo_agrees_with_enumeration(self, short_system, short_model):
        cost, perturbation, noise = short_model
        M = np.array([[0.3, -0.2, 0.1, 0.4]])
        exact = expected_cost_exact(short_system, cost, perturbation, noise, M, M, X0)
        sampled = expected_cost_mc(short_system, cost, perturbation, noise, M, M, X0, 4000, SeedPair(9))
        assert exact.method == ENUMERATION and exact.std_error == 0.0
        assert sampled.method == MONTE_CARLO and sampled.std_error > 0
        assert abs(sampled.estimate - exact.estimate) <= 5.0 * sampled.std_error

    def test_exact_gradient_matches_finite_differences(self, short_system, short_model):
        cost, perturbation, noise = short_model
        deployed = np.array([[0.5, 0.1, -0.3, 0.2]])
        evaluated = np.array([[0.2, -0.1, 0.0, 0.3]])

        def objective(M):
            return expected_cost_exact(short_system, cost, perturbation, noise, M, deployed, X0).estimate

        analytic = expected_gradient_exact(short_system, cost, perturbation, noise, evaluated, deployed, X0)
        np.testing.assert_allclose(analytic, fd_gradient(objective, evaluated), rtol=1e-5, atol=1e-6)

    def test_shifted_cost_depends_on_deployed_policy(self, short_system, short_model):
        cost, perturbation, noise = short_model
        M = np.array([[0.3, -0.2, 0.1, 0.4]])
        at_zero = expected_cost_exact(short_system, cost, perturbation, noise, M, np.zeros_like(M), X0)
        at_M = expected_cost_exact(short_system, cost, perturbation, noise, M, M, X0)
        assert at_zero.estimate != pytest.approx(at_M.estimate, rel=1e-12)

    def test_standard_error_shrinks_with_sample_size(self, short_system, short_model):
        cost, perturbation, noise = short_model
        M = np.array([[0.3, -0.2, 0.1, 0.4]])
        ratios = []
        args = (short_system, cost, perturbation, noise, M, M, X0)
        for k in range(10):
            small = expected_cost_mc(*args, 200, SeedPair(30).fork(k))
            large = expected_cost_mc(*args, 400, SeedPair(31).fork(k))
            ratios.append(large.std_error / small.std_error)
        assert 0.6 <= np.mean(ratios) <= 0.82

    def test_shifted_cost_is_midpoint_convex(self, short_system, short_model):
        cost, perturbation, noise = short_model
        rng = np.random.default_rng(12)
        shape = short_system.policy_shape
        for _ in range(20):
            M1, M2, deployed = (rng.uniform(-0.5, 0.5, size=shape) for _ in range(3))

            def value(M):
                return expected_cost_exact(short_system, cost, perturbation, noise, M, deployed, X0).estimate

            assert value(0.5 * (M1 + M2)) <= 0.5 * (value(M1) + value(M2)) + 1e-10

    def test_monte_carlo_gradient_agrees_with_enumeration(self, short_system, short_model):
        cost, perturbation, noise = short_model
        M = np.array([[0.3, -0.2, 0.1, 0.4]])
        realizations = enumerate_realizations(short_system, perturbation, noise, M, X0)
        gradients = batch_gradients(short_system, cost, M, realizations)
        exact = np.tensordot(realizations.weights, gradients, axes=1)
        variance = float(realizations.weights @ np.sum((gradients - exact) ** 2, axis=(1, 2)))
        n = 2000
        sampled = expected_gradient_mc(short_system, cost, perturbation, noise, M, M, X0, n, SeedPair(14))
        np.testing.assert_allclose(
            exact, expected_gradient_exact(short_system, cost, perturbation, noise, M, M, X0), rtol=1e-12
        )
        assert np.sum((sampled - exact) ** 2) <= 10.0 * variance / n


class TestCostModels:

    def test_quadratic_constants(self):
        cost = QuadraticCost(np.diag([1.0, 4.0]), np.array([[0.5]]))
        assert cost.mu == pytest.approx(0.5)
        assert cost.sigma_s == pytest.approx(8.0)
        assert cost.G == pytest.approx(8.0)
        assert cost.stage_cost(0, np.array([1.0, 1.0]), np.array([2.0])) == pytest.approx(7.0)

    def test_degenerate_weights_rejected(self):
        with pytest.raises(ConfigException):
            QuadraticCost(np.diag([1.0, 0.0]), np.eye(1))

    def test_asymmetric_weights_rejected(self):
        with pytest.raises(ConfigException):
            QuadraticCost(np.array([[1.0, 1.0], [0.0, 1.0]]), np.eye(1))

    def test_stock_risk_cost_projects_first_block(self):
        cost = StockRiskCost(2)
        assert cost.mu == 0.0
        x = np.array([1.0, 2.0, 10.0, 20.0])
        u = np.array([0.5, 0.5, 7.0, 7.0])
        assert cost.stage_cost(0, x, u) == pytest.approx(5.5)
