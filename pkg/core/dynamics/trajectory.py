"""
Performative Control - Trajectories
Simulation récursive, rejeu et forme close de l'état sous politique DAP
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from core.interfaces import (
    ICostModel,
    INoiseModel,
    IPerturbationMap,
    Policy,
    SeedPair,
    SystemConfig,
    ConfigException,
    DimensionException,
)
from core.dynamics.noise import check_noise_bound, check_noise_dimension
from core.dynamics.perturbation import check_perturbation_support


PolicyLike = Union[Policy, np.ndarray]


def policy_matrix(policy: PolicyLike) -> np.ndarray:
    """Matrice empilée M d'une politique (ou d'un tableau brut)"""
    if isinstance(policy, Policy):
        return policy.matrix
    return np.asarray(policy, dtype=float)


@dataclass(frozen=True)
class TrajectoryRecord:
    """
    Trajectoire réalisée complète

    states: x_0..x_T, actions: u_0..u_{T−1}, terminal_action: u_T (utilisée
    par c_T), noises: w_0..w_{T−1}, perturbations: Δ_0..Δ_{T−1},
    stage_costs: c_0..c_T (None sans modèle de coût).
    """
    states: np.ndarray
    actions: np.ndarray
    terminal_action: np.ndarray
    noises: np.ndarray
    perturbations: np.ndarray
    stage_costs: Optional[np.ndarray] = None
    seed: Optional[SeedPair] = None

    def __post_init__(self):
        for name in ("states", "actions", "terminal_action", "noises", "perturbations", "stage_costs"):
            value = getattr(self, name)
            if value is not None:
                value = np.array(value, dtype=float)
                value.setflags(write=False)
                object.__setattr__(self, name, value)
        T = self.noises.shape[0]
        if self.states.shape[0] != T + 1 or self.actions.shape[0] != T:
            raise DimensionException("Trajectory arrays have inconsistent horizons")
        if self.perturbations.shape[0] != T:
            raise DimensionException("One perturbation per step is required")
        if self.stage_costs is not None and self.stage_costs.shape != (T + 1,):
            raise DimensionException("Stage costs must cover t = 0..T")

    @property
    def T(self) -> int:
        return self.noises.shape[0]

    @property
    def total_cost(self) -> float:
        if self.stage_costs is None:
            raise ConfigException("Trajectory was simulated without a cost model")
        return float(np.sum(self.stage_costs))

    def action_at(self, t: int) -> np.ndarray:
        return self.terminal_action if t == self.T else self.actions[t]

    def equals(self, other: "TrajectoryRecord") -> bool:
        """Égalité bit à bit de toutes les réalisations"""
        fields = ("states", "actions", "terminal_action", "noises", "perturbations")
        same = all(np.array_equal(getattr(self, f), getattr(other, f)) for f in fields)
        if self.stage_costs is None or other.stage_costs is None:
            return same and self.stage_costs is other.stage_costs
        return same and np.array_equal(self.stage_costs, other.stage_costs)


def disturbance_window(
    noises: Sequence[np.ndarray],
    t: int,
    H: int,
    d_x: Optional[int] = None,
) -> np.ndarray:
    """
    Fenêtre de perturbations [w_{t−1}; …; w_{t−H}]

    Les blocs d'indice négatif sont nuls.

    Args:
        noises: w_0, w_1, … (au moins t éléments)
        t: pas courant (≥ 0)
        H: mémoire de la politique
        d_x: dimension d'état (déduite des bruits si absente)

    Returns:
        Vecteur de longueur H·d_x
    """
    if t < 0:
        raise DimensionException(f"Step index must be >= 0, got {t}")
    noises = np.asarray(noises, dtype=float)
    if d_x is None:
        if noises.size == 0:
            raise DimensionException("d_x is required when no noise has been recorded")
        d_x = noises.shape[-1]
    if t > 0 and (noises.ndim != 2 or noises.shape[1] != d_x):
        raise DimensionException(f"Noises must be vectors of length {d_x}")
    if t > len(noises):
        raise DimensionException(f"Window at t={t} needs w_0..w_{t - 1}, got {len(noises)} noises")

    window = np.zeros(H * d_x)
    for i in range(1, H + 1):
        if t - i < 0:
            break
        window[(i - 1) * d_x:i * d_x] = noises[t - i]
    return window


def control_action(policy: PolicyLike, K: np.ndarray, x: np.ndarray, window: np.ndarray) -> np.ndarray:
    """u = −Kx + M·[w]"""
    M = policy_matrix(policy)
    if window.shape != (M.shape[1],):
        raise DimensionException(f"Window length {window.shape} does not match policy width {M.shape[1]}")
    if K.shape != (M.shape[0], x.shape[0]):
        raise DimensionException(f"K shape {K.shape} inconsistent with u, x")
    return -K @ x + M @ window


def step(A_t: np.ndarray, B: np.ndarray, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """x_{t+1} = A_t x + B u + w"""
    if A_t.shape != (x.shape[0], x.shape[0]) or B.shape != (x.shape[0], u.shape[0]):
        raise DimensionException("Transition, input gain and vectors have inconsistent shapes")
    return A_t @ x + B @ u + w


def replay_trajectory(
    config: SystemConfig,
    policy: PolicyLike,
    x0: np.ndarray,
    noises: np.ndarray,
    perturbations: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Rejoue une réalisation (x_0, w, Δ) à travers step

    Returns:
        (états x_0..x_T, actions u_0..u_{T−1}, action terminale u_T)
    """
    M = policy_matrix(policy)
    if M.shape != config.policy_shape:
        raise DimensionException(f"Policy shape {M.shape} != expected {config.policy_shape}")
    noises = np.asarray(noises, dtype=float)
    perturbations = np.asarray(perturbations, dtype=float)
    T = noises.shape[0]
    if perturbations.shape != (T, config.d_x, config.d_x):
        raise DimensionException(f"Perturbations must have shape {(T, config.d_x, config.d_x)}")

    states = np.zeros((T + 1, config.d_x))
    actions = np.zeros((T, config.d_u))
    states[0] = x0
    for t in range(T):
        window = disturbance_window(noises, t, config.H, config.d_x)
        actions[t] = control_action(M, config.K, states[t], window)
        states[t + 1] = step(config.A + perturbations[t], config.B, states[t], actions[t], noises[t])

    terminal_window = disturbance_window(noises, T, config.H, config.d_x)
    terminal_action = control_action(M, config.K, states[T], terminal_window)
    return states, actions, terminal_action


def sample_realizations(
    config: SystemConfig,
    policy: PolicyLike,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    seed: SeedPair,
) -> Tuple[np.ndarray, np.ndarray]:
    """Tire (w_0..w_{T−1}, Δ_0..Δ_{T−1}) sur deux flux indépendants"""
    M = policy_matrix(policy)
    noise_rng, perturbation_rng = seed.generators()
    noises = np.zeros((config.T, config.d_x))
    perturbations = np.zeros((config.T, config.d_x, config.d_x))
    for t in range(config.T):
        perturbations[t] = perturbation.sample(M, t, perturbation_rng)
        noises[t] = noise.sample(noise_rng)
    return noises, perturbations


def simulate_trajectory(
    config: SystemConfig,
    policy: PolicyLike,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    x0: np.ndarray,
    seed: SeedPair,
    cost: Optional[ICostModel] = None,
) -> TrajectoryRecord:
    """
    Simule une trajectoire déterministe pour une graine donnée

    Δ_t ne dépend que de M (pas de l'état), donc les réalisations sont tirées
    d'abord puis rejouées : rejeu et simulation coïncident bit à bit.
    Le bruit doit respecter W et chaque tirage ‖Δ_t‖ ≤ ξ_t quand la famille
    certifie ses bornes (SamplerException sinon).

    Args:
        config: système
        policy: politique DAP déployée
        perturbation: famille D_t(M)
        noise: modèle de bruit
        x0: état initial (‖x0‖ ≤ x0_bound)
        seed: paire de graines de la trajectoire
        cost: modèle de coût optionnel pour enregistrer c_0..c_T

    Returns:
        TrajectoryRecord
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (config.d_x,):
        raise DimensionException(f"x0 must have length {config.d_x}, got shape {x0.shape}")
    if np.linalg.norm(x0) > config.x0_bound * (1 + 1e-12):
        logger.error(f"❌ Initial state norm {np.linalg.norm(x0):.6g} exceeds bound {config.x0_bound}")
        raise ConfigException("Initial state violates its norm bound")
    check_noise_dimension(noise, config.d_x)
    check_noise_bound(noise, config.W)
    if perturbation.T < config.T:
        raise DimensionException(f"Perturbation schedule covers {perturbation.T} steps, need {config.T}")

    noises, perturbations = sample_realizations(config, policy, perturbation, noise, seed)
    if perturbation.support_certified:
        for t in range(config.T):
            check_perturbation_support(perturbation, perturbations[t], t)
    states, actions, terminal_action = replay_trajectory(config, policy, x0, noises, perturbations)

    stage_costs = None
    if cost is not None:
        stage_costs = np.array(
            [cost.stage_cost(t, states[t], actions[t]) for t in range(config.T)]
            + [cost.stage_cost(config.T, states[config.T], terminal_action)]
        )

    return TrajectoryRecord(
        states=states,
        actions=actions,
        terminal_action=terminal_action,
        noises=noises,
        perturbations=perturbations,
        stage_costs=stage_costs,
        seed=seed,
    )


def closed_form_state(
    config: SystemConfig,
    policy: PolicyLike,
    perturbations: Sequence[np.ndarray],
    noises: Sequence[np.ndarray],
    x0: np.ndarray,
    t: int,
) -> np.ndarray:
    """
    État x_t en forme close

    x_t = Π_{j<t}(Ã+Δ_j)x_0 + Σ_{i<t} Π_{i<j<t}(Ã+Δ_j)(B·M·[w]_i + w_i),
    chaque produit étant évalué indépendamment de la récursion.
    """
    if not 1 <= t <= config.T:
        raise DimensionException(f"t must lie in [1, {config.T}], got {t}")
    perturbations = np.asarray(perturbations, dtype=float)
    noises = np.asarray(noises, dtype=float)
    if len(perturbations) < t or len(noises) < t:
        raise DimensionException(f"Closed form at t={t} needs {t} perturbations and noises")

    M = policy_matrix(policy)
    A_tilde = config.A_tilde
    d_x = config.d_x

    def transition_product(start: int) -> np.ndarray:
        product = np.eye(d_x)
        for j in range(start, t):
            product = (A_tilde + perturbations[j]) @ product
        return product

    state = transition_product(0) @ np.asarray(x0, dtype=float)
    for i in range(t):
        window = disturbance_window(noises, i, config.H, d_x)
        state = state + transition_product(i + 1) @ (config.B @ (M @ window) + noises[i])
    return state
