"""
Performative Control - Policy Gradients
Gradient analytique de c_t et de J_T par rapport à M, et différences finies centrées
"""

from typing import Callable

import numpy as np

from core.interfaces import ICostModel, SystemConfig, DimensionException
from core.dynamics.trajectory import (
    PolicyLike,
    TrajectoryRecord,
    disturbance_window,
    policy_matrix,
    replay_trajectory,
)


def _windows(config: SystemConfig, noises: np.ndarray) -> np.ndarray:
    """Fenêtres [w]_0..[w]_T, shape (T+1, H·d_x)"""
    T = noises.shape[0]
    return np.array([disturbance_window(noises, t, config.H, config.d_x) for t in range(T + 1)])


def grad_policy_stage(
    config: SystemConfig,
    model: ICostModel,
    policy: PolicyLike,
    x0: np.ndarray,
    noises: np.ndarray,
    perturbations: np.ndarray,
    t: int,
) -> np.ndarray:
    """
    ∇_M c_t à réalisations fixées

    ∇_M c_t = Σ_{i<t} Bᵀ Φ_{t,i}ᵀ (∇_x c_t − Kᵀ∇_u c_t) [w]_iᵀ + ∇_u c_t [w]_tᵀ
    avec Φ_{t,i} = (Ã+Δ_{t−1})…(Ã+Δ_{i+1}) (produit vide = I).

    Args:
        config: système
        model: coût par étape
        policy: politique M
        x0: état initial
        noises: w_0..w_{T−1}
        perturbations: Δ_0..Δ_{T−1}
        t: pas (0..T)

    Returns:
        Matrice de même forme que M
    """
    noises = np.asarray(noises, dtype=float)
    perturbations = np.asarray(perturbations, dtype=float)
    T = noises.shape[0]
    if not 0 <= t <= T:
        raise DimensionException(f"t must lie in [0, {T}], got {t}")

    M = policy_matrix(policy)
    states, actions, terminal_action = replay_trajectory(config, M, x0, noises, perturbations)
    u_t = terminal_action if t == T else actions[t]
    g_x, g_u = model.stage_grads(t, states[t], u_t)
    h = g_x - config.K.T @ g_u

    windows = _windows(config, noises)
    A_tilde = config.A_tilde
    gradient = np.outer(g_u, windows[t])
    # Φ_{t,i}ᵀ h se propage de i = t−1 vers 0
    propagated = h
    for i in range(t - 1, -1, -1):
        gradient += np.outer(config.B.T @ propagated, windows[i])
        propagated = (A_tilde + perturbations[i]).T @ propagated
    return gradient


def grad_total_from_realizations(
    config: SystemConfig,
    model: ICostModel,
    policy: PolicyLike,
    x0: np.ndarray,
    noises: np.ndarray,
    perturbations: np.ndarray,
) -> np.ndarray:
    """∇_M J_T par récurrence adjointe"""
    noises = np.asarray(noises, dtype=float)
    perturbations = np.asarray(perturbations, dtype=float)
    M = policy_matrix(policy)
    states, actions, terminal_action = replay_trajectory(config, M, x0, noises, perturbations)
    return _adjoint_gradient(config, model, states, actions, terminal_action, noises, perturbations)


def _adjoint_gradient(
    config: SystemConfig,
    model: ICostModel,
    states: np.ndarray,
    actions: np.ndarray,
    terminal_action: np.ndarray,
    noises: np.ndarray,
    perturbations: np.ndarray,
) -> np.ndarray:
    T = noises.shape[0]
    windows = _windows(config, noises)
    A_tilde = config.A_tilde

    gradient = np.zeros(config.policy_shape)
    h = np.zeros((T + 1, config.d_x))
    for t in range(T + 1):
        u_t = terminal_action if t == T else actions[t]
        g_x, g_u = model.stage_grads(t, states[t], u_t)
        h[t] = g_x - config.K.T @ g_u
        gradient += np.outer(g_u, windows[t])

    # p_{T−1} = h_T ; p_i = h_{i+1} + (Ã+Δ_{i+1})ᵀ p_{i+1}
    adjoint = h[T]
    for i in range(T - 1, -1, -1):
        if i < T - 1:
            adjoint = h[i + 1] + (A_tilde + perturbations[i + 1]).T @ adjoint
        gradient += np.outer(config.B.T @ adjoint, windows[i])
    return gradient


def grad_total(
    config: SystemConfig,
    model: ICostModel,
    policy: PolicyLike,
    trajectory: TrajectoryRecord,
) -> np.ndarray:
    """∇_M J_T = Σ_{t=0}^{T} ∇_M c_t le long d'une trajectoire enregistrée"""
    return _adjoint_gradient(
        config,
        model,
        trajectory.states,
        trajectory.actions,
        trajectory.terminal_action,
        trajectory.noises,
        trajectory.perturbations,
    )


def total_cost(
    config: SystemConfig,
    model: ICostModel,
    policy: PolicyLike,
    x0: np.ndarray,
    noises: np.ndarray,
    perturbations: np.ndarray,
) -> float:
    """J_T = Σ_{t=0}^{T} c_t à réalisations fixées"""
    states, actions, terminal_action = replay_trajectory(config, policy, x0, noises, perturbations)
    T = len(actions)
    total = sum(model.stage_cost(t, states[t], actions[t]) for t in range(T))
    return float(total + model.stage_cost(T, states[T], terminal_action))


def fd_gradient(f: Callable[[np.ndarray], float], M: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """
    Gradient par différences finies centrées

    (f(M + h·E_ij) − f(M − h·E_ij)) / 2h pour chaque coefficient.
    """
    if not h > 0:
        raise ValueError(f"Finite-difference step must be > 0, got {h}")
    M = np.array(M, dtype=float)
    gradient = np.zeros_like(M)
    for index in np.ndindex(M.shape):
        shifted = M.copy()
        shifted[index] = M[index] + h
        upper = f(shifted)
        shifted[index] = M[index] - h
        lower = f(shifted)
        gradient[index] = (upper - lower) / (2.0 * h)
    return gradient
