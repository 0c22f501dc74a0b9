"""
Performative Control - Shifted Expectations
C_T(M; M') et ∇C_T(M; M') par énumération exacte ou Monte-Carlo, évaluation par lots
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from core.interfaces import (
    ICostModel,
    INoiseModel,
    IPerturbationMap,
    SeedPair,
    SystemConfig,
    BudgetExceededException,
    ConfigException,
    DimensionException,
)
from core.dynamics.trajectory import PolicyLike, policy_matrix


ENUMERATION = "Enumeration"
MONTE_CARLO = "MonteCarlo"

DEFAULT_BUDGET = 10 ** 6


@dataclass(frozen=True)
class ShiftedExpectation:
    """Estimation de C_T(M; M') : M évaluée, M' déployée"""
    deploy_policy: np.ndarray
    eval_policy: np.ndarray
    estimate: float
    std_error: float
    method: str
    n_samples: int = 0

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be non-negative")
        if self.method == ENUMERATION and self.std_error != 0:
            raise ValueError("Enumeration estimates are exact")
        if self.method not in (ENUMERATION, MONTE_CARLO):
            raise ValueError(f"Unknown estimation method: {self.method}")


@dataclass(frozen=True)
class RealizationSet:
    """
    Réalisations pondérées (w, Δ) d'un horizon complet

    noises: (S, T, d_x), perturbations: (S, T, d_x, d_x), weights: (S,)
    """
    x0: np.ndarray
    noises: np.ndarray
    perturbations: np.ndarray
    weights: np.ndarray
    method: str

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def T(self) -> int:
        return self.noises.shape[1]


def count_branches(
    config: SystemConfig,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    M_prime: np.ndarray,
) -> int:
    """Nombre de séquences jointes Π_t |supp(w)|·|supp(D_t(M'))|"""
    n_noise = len(noise.support())
    count = 1
    for t in range(config.T):
        count *= n_noise * len(perturbation.support(M_prime, t))
    return count


def enumerate_realizations(
    config: SystemConfig,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    M_prime: PolicyLike,
    x0: np.ndarray,
    budget: int = DEFAULT_BUDGET,
) -> RealizationSet:
    """
    Énumère toutes les séquences de réalisations sous D_t(M')

    Raises:
        BudgetExceededException: plus de `budget` branches
    """
    M_prime = policy_matrix(M_prime)
    branches = count_branches(config, perturbation, noise, M_prime)
    if branches > budget:
        logger.error(f"❌ Enumeration needs {branches} branches (budget {budget})")
        raise BudgetExceededException(f"{branches} joint realizations exceed budget {budget}")

    d_x = config.d_x
    noise_atoms = noise.support()
    noises = np.zeros((1, 0, d_x))
    perturbations = np.zeros((1, 0, d_x, d_x))
    weights = np.ones(1)

    for t in range(config.T):
        combos = [
            (w, delta, p_w * p_delta)
            for delta, p_delta in perturbation.support(M_prime, t)
            for w, p_w in noise_atoms
        ]
        k = len(combos)
        step_noises = np.array([c[0] for c in combos])
        step_perturbations = np.array([c[1] for c in combos])
        step_probs = np.array([c[2] for c in combos])
        S = len(weights)
        noises = np.concatenate(
            [np.repeat(noises, k, axis=0), np.tile(step_noises, (S, 1))[:, None, :]], axis=1
        )
        perturbations = np.concatenate(
            [np.repeat(perturbations, k, axis=0), np.tile(step_perturbations, (S, 1, 1))[:, None]],
            axis=1,
        )
        weights = np.repeat(weights, k) * np.tile(step_probs, S)

    return RealizationSet(
        x0=np.asarray(x0, dtype=float),
        noises=noises,
        perturbations=perturbations,
        weights=weights,
        method=ENUMERATION,
    )


def sample_realization_set(
    config: SystemConfig,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    M_prime: PolicyLike,
    x0: np.ndarray,
    n_samples: int,
    seed: SeedPair,
) -> RealizationSet:
    """Tire n_samples horizons sous D_t(M'), flux bruit/perturbation séparés"""
    if n_samples < 1:
        raise ConfigException(f"n_samples must be >= 1, got {n_samples}")
    M_prime = policy_matrix(M_prime)
    noise_rng, perturbation_rng = seed.generators()
    noises = np.zeros((n_samples, config.T, config.d_x))
    perturbations = np.zeros((n_samples, config.T, config.d_x, config.d_x))
    for t in range(config.T):
        perturbations[:, t] = perturbation.sample_many(M_prime, t, perturbation_rng, n_samples)
        noises[:, t] = noise.sample_many(noise_rng, n_samples)
    return RealizationSet(
        x0=np.asarray(x0, dtype=float),
        noises=noises,
        perturbations=perturbations,
        weights=np.full(n_samples, 1.0 / n_samples),
        method=MONTE_CARLO,
    )


def batch_windows(config: SystemConfig, noises: np.ndarray) -> np.ndarray:
    """Fenêtres [w]_0..[w]_T pour un lot, shape (S, T+1, H·d_x)"""
    S, T, d_x = noises.shape
    H = config.H
    padded = np.concatenate([np.zeros((S, H, d_x)), noises], axis=1)
    windows = np.zeros((S, T + 1, H * d_x))
    for t in range(T + 1):
        # bloc i (1..H) ↔ w_{t−i} ↔ padded[t − i + H]
        indices = [t - i + H for i in range(1, H + 1)]
        windows[:, t] = padded[:, indices].reshape(S, H * d_x)
    return windows


def batch_rollout(
    config: SystemConfig,
    M: np.ndarray,
    realizations: RealizationSet,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Rejoue toutes les réalisations en parallèle

    Returns:
        (états (S, T+1, d_x), actions u_0..u_T (S, T+1, d_u), fenêtres)
    """
    M = policy_matrix(M)
    if M.shape != config.policy_shape:
        raise DimensionException(f"Policy shape {M.shape} != expected {config.policy_shape}")
    S, T = realizations.size, realizations.T
    windows = batch_windows(config, realizations.noises)
    states = np.zeros((S, T + 1, config.d_x))
    actions = np.zeros((S, T + 1, config.d_u))
    states[:, 0] = realizations.x0
    for t in range(T + 1):
        actions[:, t] = -states[:, t] @ config.K.T + windows[:, t] @ M.T
        if t == T:
            break
        transitions = config.A + realizations.perturbations[:, t]
        states[:, t + 1] = (
            np.einsum("sij,sj->si", transitions, states[:, t])
            + actions[:, t] @ config.B.T
            + realizations.noises[:, t]
        )
    return states, actions, windows


def batch_total_costs(
    config: SystemConfig,
    model: ICostModel,
    M: PolicyLike,
    realizations: RealizationSet,
) -> np.ndarray:
    """J_T pour chaque réalisation, shape (S,)"""
    states, actions, _ = batch_rollout(config, policy_matrix(M), realizations)
    totals = np.zeros(realizations.size)
    for t in range(realizations.T + 1):
        totals += model.batch_cost(t, states[:, t], actions[:, t])
    return totals


def batch_gradients(
    config: SystemConfig,
    model: ICostModel,
    M: PolicyLike,
    realizations: RealizationSet,
) -> np.ndarray:
    """∇_M J_T pour chaque réalisation (récurrence adjointe), shape (S, d_u, H·d_x)"""
    states, actions, windows = batch_rollout(config, policy_matrix(M), realizations)
    S, T = realizations.size, realizations.T
    A_tilde = config.A_tilde

    h = np.zeros((S, T + 1, config.d_x))
    gradients = np.zeros((S,) + config.policy_shape)
    for t in range(T + 1):
        g_x, g_u = model.batch_grads(t, states[:, t], actions[:, t])
        h[:, t] = g_x - g_u @ config.K
        gradients += np.einsum("si,sj->sij", g_u, windows[:, t])

    adjoint = h[:, T]
    for i in range(T - 1, -1, -1):
        if i < T - 1:
            transitions = A_tilde + realizations.perturbations[:, i + 1]
            adjoint = h[:, i + 1] + np.einsum("sji,sj->si", transitions, adjoint)
        gradients += np.einsum("si,sj->sij", adjoint @ config.B, windows[:, i])
    return gradients


def saa_objective(
    config: SystemConfig,
    model: ICostModel,
    M: PolicyLike,
    realizations: RealizationSet,
) -> Tuple[float, np.ndarray]:
    """Objectif pondéré Σ p_s J_T^s et son gradient"""
    totals = batch_total_costs(config, model, M, realizations)
    gradients = batch_gradients(config, model, M, realizations)
    value = float(realizations.weights @ totals)
    gradient = np.tensordot(realizations.weights, gradients, axes=1)
    return value, gradient


def _summarize(totals: np.ndarray, realizations: RealizationSet) -> Tuple[float, float]:
    if realizations.method == ENUMERATION:
        return float(realizations.weights @ totals), 0.0
    n = len(totals)
    if n == 1:
        logger.warning("⚠️ Single Monte-Carlo sample: standard error reported as 0")
        return float(totals[0]), 0.0
    return float(np.mean(totals)), float(np.std(totals, ddof=1) / np.sqrt(n))


def expected_cost_exact(
    config: SystemConfig,
    model: ICostModel,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    M: PolicyLike,
    M_prime: PolicyLike,
    x0: np.ndarray,
    budget: int = DEFAULT_BUDGET,
) -> ShiftedExpectation:
    """C_T(M; M') exact par énumération des supports finis"""
    realizations = enumerate_realizations(config, perturbation, noise, M_prime, x0, budget)
    estimate, _ = _summarize(batch_total_costs(config, model, M, realizations), realizations)
    return ShiftedExpectation(
        deploy_policy=policy_matrix(M_prime),
        eval_policy=policy_matrix(M),
        estimate=estimate,
        std_error=0.0,
        method=ENUMERATION,
        n_samples=realizations.size,
    )


def expected_cost_mc(
    config: SystemConfig,
    model: ICostModel,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    M: PolicyLike,
    M_prime: PolicyLike,
    x0: np.ndarray,
    n_samples: int,
    seed: SeedPair,
) -> ShiftedExpectation:
    """
    C_T(M; M') par Monte-Carlo

    Args:
        M: politique évaluée (gouverne la trajectoire)
        M_prime: politique déployée (gouverne D_t)
        n_samples: nombre de trajectoires (≥ 1)
        seed: graine de l'évaluation

    Returns:
        ShiftedExpectation avec erreur standard
    """
    realizations = sample_realization_set(config, perturbation, noise, M_prime, x0, n_samples, seed)
    estimate, std_error = _summarize(batch_total_costs(config, model, M, realizations), realizations)
    return ShiftedExpectation(
        deploy_policy=policy_matrix(M_prime),
        eval_policy=policy_matrix(M),
        estimate=estimate,
        std_error=std_error,
        method=MONTE_CARLO,
        n_samples=n_samples,
    )


def expected_gradient_exact(
    config: SystemConfig,
    model: ICostModel,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    M: PolicyLike,
    M_prime: PolicyLike,
    x0: np.ndarray,
    budget: int = DEFAULT_BUDGET,
    realizations: Optional[RealizationSet] = None,
) -> np.ndarray:
    """∇_M C_T(M; M') exact"""
    if realizations is None:
        realizations = enumerate_realizations(config, perturbation, noise, M_prime, x0, budget)
    gradients = batch_gradients(config, model, M, realizations)
    return np.tensordot(realizations.weights, gradients, axes=1)


def expected_gradient_mc(
    config: SystemConfig,
    model: ICostModel,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    M: PolicyLike,
    M_prime: PolicyLike,
    x0: np.ndarray,
    n_samples: int,
    seed: SeedPair,
) -> np.ndarray:
    """∇_M C_T(M; M') par Monte-Carlo"""
    realizations = sample_realization_set(config, perturbation, noise, M_prime, x0, n_samples, seed)
    return np.mean(batch_gradients(config, model, M, realizations), axis=0)
