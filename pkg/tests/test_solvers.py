"""
Performative Control - Solver Tests
Projections, RRM (Φ et point fixe) et RSGD
"""

import numpy as np
import pytest

from core.interfaces import (
    FrobeniusBall,
    ICostModel,
    Policy,
    RowSimplex,
    SeedPair,
    SystemConfig,
    ConfigException,
    SolverException,
    StepSizeException,
)
from core.dynamics.noise import DiscreteNoise, UniformBoxNoise
from core.dynamics.perturbation import NullPerturbation
from core.dynamics.trajectory import simulate_trajectory
from core.cost.models import QuadraticCost
from core.analysis.step_sizes import (
    find_diminishing_plan,
    plan_constant_steps,
    plan_diminishing_steps,
    sup_step_bound,
    theorem1_error_bound,
)
from core.solvers.projection import (
    affine_project_vector,
    project_matrix,
    project_policy,
    simplex_project_vector,
)
from core.solvers.rrm import minimize_shifted, psc_reference, rrm_run
from core.solvers.rsgd import RsgdConfig, recover_noises, rsgd_run


@pytest.fixture
def scalar_instance():
    """Système scalaire non performatif (Δ ≡ 0)"""
    config = SystemConfig(
        A=[[0.5]], B=[[1.0]], K=[[0.0]], T=3, H=1, W=1.0, x0_bound=0.0, sigma2=1.0, kappa=1.0, gamma=0.5
    )
    cost = QuadraticCost(np.eye(1), np.eye(1))
    return config, cost, NullPerturbation(3, 1), DiscreteNoise.sign_cube(1)


@pytest.fixture
def stable_plan(stable_instance, constants_of):
    bundle = constants_of(stable_instance)
    return plan_constant_steps(bundle, 0.5 * sup_step_bound(bundle))


def _zero_policy(instance) -> Policy:
    return Policy.zeros(instance.config, instance.feasible_set)


class QuarticCost(ICostModel):
    """c_t(x, u) = ‖x‖⁴ + ‖u‖²"""

    mu = 0.0
    sigma_s = 1.0
    G = 1.0
    kind = "quartic"

    def stage_cost(self, t, x, u):
        return float((x @ x) ** 2 + u @ u)

    def stage_grads(self, t, x, u):
        return 4.0 * (x @ x) * x, 2.0 * u


class TestProjection:

    def test_simplex_vector_projection(self):
        np.testing.assert_allclose(simplex_project_vector(np.array([2.0, 0.0])), [1.0, 0.0])
        np.testing.assert_allclose(simplex_project_vector(np.array([-1.0, -1.0, -1.0])), [1 / 3] * 3)
        projected = simplex_project_vector(np.array([0.9, 0.4, -0.3]), scale=2.0)
        assert projected.sum() == pytest.approx(2.0)
        assert np.all(projected >= 0)

    def test_affine_projection(self):
        projected = affine_project_vector(np.array([1.0, 2.0, 3.0]))
        assert projected.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(np.diff(projected), [1.0, 1.0])

    def test_frobenius_projection_scales_down(self):
        ball = FrobeniusBall(radius=1.0)
        projected = project_matrix(np.array([[3.0, 4.0]]), ball)
        np.testing.assert_allclose(projected, [[0.6, 0.8]])
        inside = np.array([[0.1, 0.2]])
        np.testing.assert_array_equal(project_matrix(inside, ball), inside)

    @pytest.mark.parametrize("feasible_set", [
        FrobeniusBall(radius=0.7),
        RowSimplex(scale=1.0),
        RowSimplex(scale=1.0, width=2),
        RowSimplex(scale=2.0, nonnegative=False),
    ])
    def test_projection_is_idempotent(self, feasible_set):
        raw = np.random.default_rng(4).normal(size=(3, 3))
        once = project_matrix(raw, feasible_set)
        twice = project_matrix(once, feasible_set)
        np.testing.assert_array_equal(once, twice)
        assert Policy(matrix=once, feasible_set=feasible_set).is_feasible()

    def test_simplex_width_zeroes_outside_block(self):
        policy = project_policy(np.ones((3, 3)), RowSimplex(scale=1.0, width=2))
        np.testing.assert_allclose(policy.matrix, [[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 0.0]])


class TestRepeatedRiskMinimization:

    def test_non_performative_fixed_point_after_one_step(self, scalar_instance):
        config, cost, perturbation, noise = scalar_instance
        M0 = Policy(matrix=[[0.5]], feasible_set=FrobeniusBall(radius=1.0))
        result = rrm_run(config, cost, perturbation, noise, np.zeros(1), M0, max_iters=10, tol=1e-8)
        assert result.converged
        assert result.iterations == 1
        assert result.gaps[1] <= 1e-8
        assert result.gaps[0] > 1e-3

    def test_inner_solution_beats_other_feasible_points(self, stable_instance):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        M_prime = np.full(config.policy_shape, 0.1)
        inner = minimize_shifted(
            config, cost, perturbation, noise, M_prime, stable_instance.x0, stable_instance.feasible_set
        )
        assert inner.exact
        assert inner.converged
        assert inner.policy.is_feasible()
        other = minimize_shifted(
            config, cost, perturbation, noise, M_prime, stable_instance.x0, stable_instance.feasible_set,
            M_init=np.zeros(config.policy_shape), budget=1,
        )
        assert inner.objective <= other.objective + 1e-12

    def test_rrm_converges_on_stable_instance(self, stable_instance):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        result = rrm_run(
            config, cost, perturbation, noise, stable_instance.x0, _zero_policy(stable_instance),
            max_iters=50, tol=1e-9,
        )
        assert result.converged
        assert result.residual <= 1e-9
        assert len(result.gaps) == result.iterations + 1
        assert all(result.inner_flags)

    def test_reference_is_a_fixed_point(self, stable_instance, constants_of):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        bundle = constants_of(stable_instance)
        reference = psc_reference(
            config, cost, perturbation, noise, stable_instance.x0, stable_instance.feasible_set, bundle=bundle
        )
        image = minimize_shifted(
            config, cost, perturbation, noise, reference, stable_instance.x0, stable_instance.feasible_set
        )
        assert np.linalg.norm(image.policy.matrix - reference.matrix) <= 1e-8

    def test_reference_needs_finite_supports(self, stable_instance):
        config, cost, perturbation, _ = stable_instance.as_tuple()
        with pytest.raises(ConfigException):
            psc_reference(
                config, cost, perturbation, UniformBoxNoise(-1.0, 1.0, 2),
                stable_instance.x0, stable_instance.feasible_set,
            )

    def test_sampled_inner_problem_needs_seed(self, stable_instance):
        config, cost, perturbation, _ = stable_instance.as_tuple()
        with pytest.raises(ConfigException):
            minimize_shifted(
                config, cost, perturbation, UniformBoxNoise(-1.0, 1.0, 2),
                np.zeros(config.policy_shape), stable_instance.x0, stable_instance.feasible_set,
            )

    def test_inner_solver_rejects_non_quadratic_cost(self, stable_instance):
        config, _, perturbation, noise = stable_instance.as_tuple()
        with pytest.raises(SolverException):
            minimize_shifted(
                config, QuarticCost(), perturbation, noise,
                np.zeros(config.policy_shape), stable_instance.x0, stable_instance.feasible_set,
            )


class TestRsgd:

    def _config(self, instance, plan, N=10, **kwargs) -> RsgdConfig:
        return RsgdConfig(plan=plan, N=N, M0=_zero_policy(instance), seed=SeedPair(21), **kwargs)

    def test_logs_every_iterate(self, stable_instance, stable_plan):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        reference = Policy(matrix=np.full(config.policy_shape, 0.1), feasible_set=stable_instance.feasible_set)
        trace = rsgd_run(
            config, cost, perturbation, noise, stable_instance.x0,
            self._config(stable_instance, stable_plan), reference=reference,
        )
        assert len(trace) == 11
        assert trace.iterations == list(range(11))
        assert trace.ps_error[0] == pytest.approx(np.sum(reference.matrix ** 2))
        assert not trace.diverged
        assert trace.final_policy.is_feasible()
        assert all(np.isnan(c) for c in trace.expected_cost)

    def test_log_every_keeps_last_iterate(self, stable_instance, stable_plan):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        trace = rsgd_run(
            config, cost, perturbation, noise, stable_instance.x0,
            self._config(stable_instance, stable_plan, N=7, log_every=3),
        )
        assert trace.iterations == [0, 3, 6, 7]
        assert trace.ps_error is None

    def test_runs_are_reproducible(self, stable_instance, stable_plan):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        first = rsgd_run(config, cost, perturbation, noise, stable_instance.x0, self._config(stable_instance, stable_plan))
        second = rsgd_run(config, cost, perturbation, noise, stable_instance.x0, self._config(stable_instance, stable_plan))
        for a, b in zip(first.iterates, second.iterates):
            np.testing.assert_array_equal(a, b)

    def test_evaluation_reports_standard_error(self, stable_instance, stable_plan):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        trace = rsgd_run(
            config, cost, perturbation, noise, stable_instance.x0,
            self._config(stable_instance, stable_plan, N=2, eval_samples=32, eval_seed=SeedPair(21, 1)),
        )
        assert all(c > 0 for c in trace.expected_cost)
        assert all(s >= 0 for s in trace.cost_std_error)

    def test_evaluation_needs_seed(self, stable_instance, stable_plan):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        with pytest.raises(ConfigException):
            rsgd_run(
                config, cost, perturbation, noise, stable_instance.x0,
                self._config(stable_instance, stable_plan, eval_samples=4),
            )

    def test_invalid_plan_is_rejected(self, stable_instance, constants_of):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        bundle = constants_of(stable_instance)
        plan = plan_constant_steps(bundle, 2.0 * sup_step_bound(bundle))
        with pytest.raises(StepSizeException):
            rsgd_run(config, cost, perturbation, noise, stable_instance.x0, self._config(stable_instance, plan))

    def test_divergence_stops_the_run(self, stable_instance, constants_of):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        plan = plan_constant_steps(constants_of(stable_instance), 1e6)
        trace = rsgd_run(
            config, cost, perturbation, noise, stable_instance.x0,
            self._config(stable_instance, plan, enforce_plan=False, divergence_threshold=10.0),
        )
        assert trace.diverged
        assert trace.divergence_iteration == 0
        assert len(trace) == 1

    def test_noise_recovery_from_states(self, stable_instance):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        M = np.full(config.policy_shape, 0.2)
        record = simulate_trajectory(config, M, perturbation, noise, stable_instance.x0, SeedPair(6))
        np.testing.assert_allclose(recover_noises(config, record), record.noises, atol=1e-12)

    def test_initial_policy_must_be_feasible(self, stable_instance, stable_plan):
        M0 = Policy(matrix=np.full(stable_instance.config.policy_shape, 5.0), feasible_set=stable_instance.feasible_set)
        with pytest.raises(ConfigException):
            RsgdConfig(plan=stable_plan, N=1, M0=M0, seed=SeedPair(0))

    @pytest.mark.slow
    def test_practical_diminishing_plan_converges(self, stable_instance, constants_of):
        config, cost, perturbation, noise = stable_instance.as_tuple()
        bundle = constants_of(stable_instance)
        reference = psc_reference(
            config, cost, perturbation, noise, stable_instance.x0, stable_instance.feasible_set, bundle=bundle
        )
        plan = plan_diminishing_steps(bundle, 2.0, 20.0)
        trace = rsgd_run(
            config, cost, perturbation, noise, stable_instance.x0,
            RsgdConfig(
                plan=plan, N=2000, M0=_zero_policy(stable_instance), seed=SeedPair(7),
                log_every=100, enforce_plan=False,
            ),
            reference=reference,
        )
        assert not trace.diverged
        assert trace.iterations[-1] == 2000
        assert trace.ps_error[-1] <= trace.ps_error[0] / 10.0

    @pytest.mark.slow
    def test_error_stays_under_diminishing_bound(self, stable_instance, constants_of):
        """
        Le plan (φ₁, φ₂) validé a un φ₂ si grand que les pas sont
        négligeables : les itérés bougent à peine et la borne est respectée
        de loin. La convergence effective est couverte par le plan pratique.
        """
        config, cost, perturbation, noise = stable_instance.as_tuple()
        bundle = constants_of(stable_instance)
        plan = find_diminishing_plan(bundle)
        assert plan.valid
        reference = psc_reference(
            config, cost, perturbation, noise, stable_instance.x0, stable_instance.feasible_set, bundle=bundle
        )
        trace = rsgd_run(
            config, cost, perturbation, noise, stable_instance.x0,
            RsgdConfig(plan=plan, N=2000, M0=_zero_policy(stable_instance), seed=SeedPair(7), log_every=200),
            reference=reference,
        )
        initial = trace.ps_error[0]
        for n, error in zip(trace.iterations, trace.ps_error):
            if n >= 1:
                assert error <= theorem1_error_bound(bundle, plan, initial, n)
        assert trace.ps_error[-1] == pytest.approx(initial, rel=1e-2)
