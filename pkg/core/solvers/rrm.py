"""
Performative Control - Repeated Risk Minimization
Application Φ (minimisation à distribution figée), itération de point fixe et référence M^PS
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.optimize
from loguru import logger

from core.interfaces import (
    FeasibleSet,
    FrobeniusBall,
    RowSimplex,
    ICostModel,
    INoiseModel,
    IPerturbationMap,
    Policy,
    SeedPair,
    SystemConfig,
    BudgetExceededException,
    ConditionException,
    ConfigException,
    SolverException,
)
from core.dynamics.trajectory import PolicyLike, policy_matrix
from core.cost.expectation import (
    DEFAULT_BUDGET,
    RealizationSet,
    count_branches,
    enumerate_realizations,
    sample_realization_set,
    saa_objective,
)
from core.analysis.constants import ConstantsBundle
from core.analysis.conditions import check_psc_condition
from core.solvers.projection import project_matrix


EXACT_INNER_TOLERANCE = 1e-9
SAMPLED_INNER_TOLERANCE = 1e-5


@dataclass
class InnerResult:
    """Résultat d'une minimisation à distribution figée"""
    policy: Policy
    objective: float
    residual: float
    iterations: int
    converged: bool
    exact: bool


@dataclass
class FixedPointResult:
    """Résultat de l'itération M_{n+1} = Φ(M_n)"""
    M_star: Policy
    iterations: int
    residual: float
    converged: bool
    gaps: List[float] = field(default_factory=list)
    reference_gaps: List[float] = field(default_factory=list)
    iterates: List[np.ndarray] = field(default_factory=list)
    inner_flags: List[bool] = field(default_factory=list)


class QuadraticModel:
    """
    Objectif quadratique f(m) = ½mᵀHm + gᵀm + c à réalisations fixées

    H est reconstruit en sondant le gradient exact le long des coordonnées
    libres de l'ensemble admissible (les autres sont fixées à 0).
    """

    def __init__(
        self,
        config: SystemConfig,
        model: ICostModel,
        realizations: RealizationSet,
        feasible_set: FeasibleSet,
    ):
        self.shape = config.policy_shape
        self.feasible_set = feasible_set
        self.free = np.flatnonzero(free_coordinates(self.shape, feasible_set))
        base_value, base_grad = saa_objective(config, model, np.zeros(self.shape), realizations)
        self.constant = base_value
        self.linear = base_grad.ravel()[self.free]
        p = len(self.free)
        hessian = np.zeros((p, p))
        for k in range(p):
            direction = np.zeros(p)
            direction[k] = 1.0
            _, column = saa_objective(config, model, self.embed(direction), realizations)
            hessian[:, k] = column.ravel()[self.free] - self.linear
        self.hessian = 0.5 * (hessian + hessian.T)
        eigenvalues = np.linalg.eigvalsh(self.hessian)
        self.smallest = float(eigenvalues.min())
        self.largest = float(max(eigenvalues.max(), 1e-300))

    def embed(self, m: np.ndarray) -> np.ndarray:
        full = np.zeros(int(np.prod(self.shape)))
        full[self.free] = m
        return full.reshape(self.shape)

    def restrict(self, M: np.ndarray) -> np.ndarray:
        return np.asarray(M).ravel()[self.free]

    def project(self, m: np.ndarray) -> np.ndarray:
        return self.restrict(project_matrix(self.embed(m), self.feasible_set))

    def value(self, m: np.ndarray) -> float:
        return float(0.5 * m @ self.hessian @ m + self.linear @ m + self.constant)

    def gradient(self, m: np.ndarray) -> np.ndarray:
        return self.hessian @ m + self.linear

    def unconstrained_minimizer(self) -> np.ndarray:
        return np.linalg.lstsq(self.hessian, -self.linear, rcond=None)[0]


def free_coordinates(shape, feasible_set: FeasibleSet) -> np.ndarray:
    """Masque des coefficients non contraints à 0"""
    mask = np.ones(shape, dtype=bool)
    if isinstance(feasible_set, RowSimplex) and feasible_set.width is not None:
        mask[:] = False
        mask[:feasible_set.width, :feasible_set.width] = True
    return mask


def _gradient_mapping(model: QuadraticModel, m: np.ndarray) -> float:
    step = 1.0 / model.largest
    moved = model.project(m - step * model.gradient(m))
    return float(np.linalg.norm(m - moved) / step)


def _trust_region_solve(model: QuadraticModel, radius: float) -> np.ndarray:
    """argmin ½mᵀHm + gᵀm sous ‖m‖ ≤ radius (H ⪰ 0)"""
    eigenvalues, basis = np.linalg.eigh(model.hessian)
    projected_linear = basis.T @ model.linear

    def step_norm(shift: float) -> float:
        return float(np.linalg.norm(projected_linear / (eigenvalues + shift)))

    if eigenvalues.min() > 1e-14 * model.largest and step_norm(0.0) <= radius:
        return basis @ (-projected_linear / eigenvalues)
    if np.linalg.norm(projected_linear) == 0:
        return np.zeros_like(model.linear)

    lower = max(0.0, -eigenvalues.min()) + 1e-13 * model.largest
    if step_norm(lower) <= radius:
        # noyau de H orthogonal à g : solution de norme minimale
        solution = model.unconstrained_minimizer()
        norm = np.linalg.norm(solution)
        return solution * (radius / norm) if norm > radius else solution
    upper = lower + np.linalg.norm(projected_linear) / radius + model.largest
    while step_norm(upper) > radius:
        upper *= 2.0
    shift = scipy.optimize.brentq(lambda s: step_norm(s) - radius, lower, upper, xtol=1e-15, rtol=4e-16)
    solution = basis @ (-projected_linear / (eigenvalues + shift))
    norm = np.linalg.norm(solution)
    return solution * (radius / norm) if norm > radius else solution


def _projected_gradient(model: QuadraticModel, start: np.ndarray, tol: float, budget: int):
    step = 1.0 / model.largest
    m = start
    residual = _gradient_mapping(model, m)
    iterations = 0
    while residual > tol and iterations < budget:
        m = model.project(m - step * model.gradient(m))
        iterations += 1
        residual = _gradient_mapping(model, m)
    return m, residual, iterations


def build_realizations(
    config: SystemConfig,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    M_prime: np.ndarray,
    x0: np.ndarray,
    n_samples: int,
    seed: Optional[SeedPair],
    budget: int = DEFAULT_BUDGET,
) -> RealizationSet:
    """Énumération si les supports sont finis et petits, sinon échantillon fixe"""
    if perturbation.is_discrete and noise.is_discrete:
        if count_branches(config, perturbation, noise, M_prime) <= budget:
            return enumerate_realizations(config, perturbation, noise, M_prime, x0, budget)
    if seed is None:
        raise ConfigException("A seed is required for sampled inner problems")
    return sample_realization_set(config, perturbation, noise, M_prime, x0, n_samples, seed)


def minimize_shifted(
    config: SystemConfig,
    model: ICostModel,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    M_prime: PolicyLike,
    x0: np.ndarray,
    feasible_set: FeasibleSet,
    budget: int = 200_000,
    tol: Optional[float] = None,
    n_samples: int = 256,
    seed: Optional[SeedPair] = None,
    M_init: Optional[PolicyLike] = None,
) -> InnerResult:
    """
    Approche argmin_{M ∈ 𝕄} C_T(M; M') avec D_t figée en M'

    Gradients exacts par énumération quand elle est possible, sinon
    approximation par échantillon fixe. Le point de départ ne dépend que
    du problème, donc Φ est une fonction déterministe de M'.

    Seuls les coûts quadratiques (QuadraticCost, StockRiskCost) sont
    acceptés : le sous-problème est résolu sous sa forme quadratique
    (SolverException sinon). Sur l'instance boursière le support n'est pas
    énumérable : Φ y est celle de l'échantillon fixe, et la référence M^PS
    qui en découle n'est exacte qu'à l'erreur d'échantillonnage près.

    Args:
        M_prime: politique déployée
        feasible_set: ensemble admissible
        budget: itérations maximales de gradient projeté
        tol: tolérance sur le résidu (1e-9 exact, 1e-5 échantillonné)
        n_samples, seed: échantillon du cas non énumérable
        M_init: point de départ explicite (gradient projeté seul)

    Returns:
        InnerResult (converged=False si le budget est épuisé)
    """
    if budget <= 0:
        raise ConfigException(f"Inner budget must be > 0, got {budget}")
    if not model.is_quadratic:
        raise SolverException("Inner solver supports quadratic stage costs only")
    M_prime = policy_matrix(M_prime)
    frozen = perturbation.frozen_at(M_prime)
    realizations = build_realizations(config, frozen, noise, M_prime, x0, n_samples, seed)
    exact = realizations.method == "Enumeration"
    if tol is None:
        tol = EXACT_INNER_TOLERANCE if exact else SAMPLED_INNER_TOLERANCE

    quadratic = QuadraticModel(config, model, realizations, feasible_set)
    iterations = 0
    if M_init is not None:
        start = quadratic.project(quadratic.restrict(policy_matrix(M_init)))
        m, residual, iterations = _projected_gradient(quadratic, start, tol, budget)
    elif isinstance(feasible_set, FrobeniusBall):
        m = _trust_region_solve(quadratic, feasible_set.radius)
        residual = _gradient_mapping(quadratic, m)
        if residual > tol:
            m, residual, iterations = _projected_gradient(quadratic, m, tol, budget)
    else:
        start = quadratic.project(quadratic.unconstrained_minimizer())
        m, residual, iterations = _projected_gradient(quadratic, start, tol, budget)

    converged = residual <= tol
    if not converged:
        logger.warning(f"⚠️ Inner solve stopped at residual {residual:.3g} > tol {tol:.3g}")
    policy = Policy(matrix=project_matrix(quadratic.embed(m), feasible_set), feasible_set=feasible_set)
    return InnerResult(
        policy=policy,
        objective=quadratic.value(quadratic.restrict(policy.matrix)),
        residual=residual,
        iterations=iterations,
        converged=converged,
        exact=exact,
    )


def rrm_run(
    config: SystemConfig,
    model: ICostModel,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    x0: np.ndarray,
    M0: Policy,
    max_iters: int = 100,
    tol: float = 1e-8,
    inner_tol: Optional[float] = None,
    inner_budget: int = 200_000,
    n_samples: int = 256,
    seed: Optional[SeedPair] = None,
    reference: Optional[PolicyLike] = None,
) -> FixedPointResult:
    """
    Itère M_{n+1} = Φ(M_n) jusqu'à ‖Φ(M_n) − M_n‖_F ≤ tol

    Le cas échantillonné réutilise la même graine à chaque itération.

    Returns:
        FixedPointResult (iterations = n tel que ‖Φ(M_n) − M_n‖ ≤ tol)
    """
    if max_iters < 1:
        raise ConfigException(f"max_iters must be >= 1, got {max_iters}")
    logger.info(f"🚀 RRM: up to {max_iters} iterations, tol={tol:.3g}")
    reference_matrix = None if reference is None else policy_matrix(reference)

    current = M0.matrix
    result = FixedPointResult(M_star=M0, iterations=0, residual=float("inf"), converged=False)
    result.iterates.append(current)
    for n in range(max_iters):
        if reference_matrix is not None:
            result.reference_gaps.append(float(np.linalg.norm(current - reference_matrix)))
        inner = minimize_shifted(
            config, model, perturbation, noise, current, x0, M0.feasible_set,
            budget=inner_budget, tol=inner_tol, n_samples=n_samples, seed=seed,
        )
        residual = float(np.linalg.norm(inner.policy.matrix - current))
        result.gaps.append(residual)
        result.inner_flags.append(inner.converged)
        result.iterates.append(inner.policy.matrix)
        result.M_star = inner.policy
        result.iterations = n
        result.residual = residual
        logger.debug(f"RRM n={n}: ‖Φ(M_n) − M_n‖={residual:.3e}")
        if not np.all(np.isfinite(inner.policy.matrix)):
            raise SolverException(f"Non-finite RRM iterate at n={n}")
        if residual <= tol:
            result.converged = True
            break
        current = inner.policy.matrix

    if reference_matrix is not None:
        result.reference_gaps.append(float(np.linalg.norm(result.M_star.matrix - reference_matrix)))
    if result.converged:
        logger.success(f"✅ RRM converged at n={result.iterations} (residual {result.residual:.3e})")
    else:
        logger.warning(f"⚠️ RRM did not converge in {max_iters} iterations (residual {result.residual:.3e})")
    return result


def psc_reference(
    config: SystemConfig,
    model: ICostModel,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    x0: np.ndarray,
    feasible_set: FeasibleSet,
    tol: float = 1e-10,
    bundle: Optional[ConstantsBundle] = None,
    max_iters: int = 500,
    M0: Optional[Policy] = None,
) -> Policy:
    """
    Solution performativement stable de haute précision

    RRM avec minimisation interne exacte (tolérance tol/10).

    Raises:
        ConditionException: la condition d'existence échoue
        BudgetExceededException: point fixe non atteint
    """
    if not (perturbation.is_discrete and noise.is_discrete):
        raise ConfigException("Reference solution needs finite noise and perturbation supports")
    if bundle is not None:
        report = check_psc_condition(bundle)
        if not report.holds:
            raise ConditionException(
                f"Existence condition fails (lhs={report.lhs:.6g} ≥ μ̃={report.rhs:.6g})"
            )
    if M0 is None:
        M0 = Policy(
            matrix=project_matrix(np.zeros(config.policy_shape), feasible_set),
            feasible_set=feasible_set,
        )
    result = rrm_run(
        config, model, perturbation, noise, x0, M0,
        max_iters=max_iters, tol=tol, inner_tol=tol / 10.0,
    )
    if not result.converged:
        raise BudgetExceededException(
            f"Reference fixed point not reached in {max_iters} iterations (residual {result.residual:.3g})"
        )
    return result.M_star
