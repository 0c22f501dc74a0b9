"""
Performative Control - Repeated Stochastic Gradient Descent
Une trajectoire déployée, un pas de gradient projeté par itération
"""

import time
from dataclasses import dataclass, field
from typing import List, Optional

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
    SolverException,
    StepSizeException,
)
from core.dynamics.trajectory import PolicyLike, TrajectoryRecord, policy_matrix, simulate_trajectory
from core.cost.gradient import grad_total_from_realizations
from core.cost.expectation import expected_cost_mc
from core.analysis.step_sizes import StepSizePlan
from core.solvers.projection import project_matrix


NOISE_RECOVERY_TOLERANCE = 1e-10
DIVERGENCE_THRESHOLD = 1e6


@dataclass
class RsgdConfig:
    """Paramètres d'une exécution RSGD"""
    plan: StepSizePlan
    N: int
    M0: Policy
    seed: SeedPair
    log_every: int = 1
    batch_size: int = 1
    enforce_plan: bool = True
    eval_samples: int = 0
    eval_seed: Optional[SeedPair] = None
    divergence_threshold: float = DIVERGENCE_THRESHOLD

    def __post_init__(self):
        if self.N < 1:
            raise ConfigException(f"N must be >= 1, got {self.N}")
        if self.log_every < 1 or self.batch_size < 1:
            raise ConfigException("log_every and batch_size must be >= 1")
        if self.eval_samples < 0:
            raise ConfigException("eval_samples must be >= 0")
        if not self.M0.is_feasible():
            raise ConfigException("Initial policy M0 is not feasible")


@dataclass
class RunTrace:
    """Itérés journalisés M_n et métriques associées"""
    iterations: List[int] = field(default_factory=list)
    iterates: List[np.ndarray] = field(default_factory=list)
    ps_error: Optional[List[float]] = None
    expected_cost: List[float] = field(default_factory=list)
    cost_std_error: List[float] = field(default_factory=list)
    wall_time: List[float] = field(default_factory=list)
    diverged: bool = False
    divergence_iteration: Optional[int] = None
    final_policy: Optional[Policy] = None
    plan: str = ""

    def __len__(self) -> int:
        return len(self.iterations)


def recover_noises(config: SystemConfig, record: TrajectoryRecord) -> np.ndarray:
    """w_t = x_{t+1} − A_t x_t − B u_t avec A_t = A + Δ_t"""
    states, actions = record.states, record.actions
    transitions = config.A + record.perturbations
    return states[1:] - np.einsum("tij,tj->ti", transitions, states[:-1]) - actions @ config.B.T


def _log_iterate(
    trace: RunTrace,
    n: int,
    M: np.ndarray,
    reference: Optional[np.ndarray],
    config: SystemConfig,
    model: ICostModel,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    x0: np.ndarray,
    rsgd_config: RsgdConfig,
    elapsed: float,
) -> None:
    trace.iterations.append(n)
    trace.iterates.append(M.copy())
    trace.wall_time.append(elapsed)
    if reference is not None:
        trace.ps_error.append(float(np.sum((M - reference) ** 2)))
    if rsgd_config.eval_samples > 0:
        estimate = expected_cost_mc(
            config, model, perturbation, noise, M, M, x0,
            rsgd_config.eval_samples, rsgd_config.eval_seed,
        )
        trace.expected_cost.append(estimate.estimate)
        trace.cost_std_error.append(estimate.std_error)
    else:
        trace.expected_cost.append(float("nan"))
        trace.cost_std_error.append(float("nan"))


def rsgd_run(
    config: SystemConfig,
    model: ICostModel,
    perturbation: IPerturbationMap,
    noise: INoiseModel,
    x0: np.ndarray,
    rsgd_config: RsgdConfig,
    reference: Optional[PolicyLike] = None,
) -> RunTrace:
    """
    Algorithme RSGD

    Pour n = 0..N : déploie M_n, simule une trajectoire avec Δ_t ∼ D_t(M_n),
    reconstruit w_t à partir des états, accumule ∇J_T et met à jour
    M_{n+1} = Proj(M_n − η_n∇J_T). Les itérés M_0..M_N sont journalisés
    (N+1 lignes avec log_every = 1), M_{N+1} est rendu dans final_policy.

    Args:
        config: système
        model: coût par étape
        perturbation: famille D_t(M)
        noise: modèle de bruit
        x0: état initial
        rsgd_config: plan de pas, N, M_0, graines
        reference: M^PS optionnelle pour l'erreur ‖M_n − M^PS‖_F²

    Returns:
        RunTrace (diverged=True si gradient non fini ou itéré explosif)
    """
    plan = rsgd_config.plan
    if not plan.valid:
        if rsgd_config.enforce_plan:
            logger.error(f"❌ Invalid step-size plan: {plan.violated_conditions}")
            raise StepSizeException("; ".join(plan.violated_conditions) or "invalid step-size plan")
        logger.warning(f"⚠️ Running with an unvalidated plan {plan.describe()}: {plan.violated_conditions}")
    if rsgd_config.eval_samples > 0 and rsgd_config.eval_seed is None:
        raise ConfigException("eval_seed is required when eval_samples > 0")

    feasible_set = rsgd_config.M0.feasible_set
    reference_matrix = None if reference is None else policy_matrix(reference)
    trace = RunTrace(ps_error=[] if reference_matrix is not None else None, plan=plan.describe())
    M = rsgd_config.M0.matrix.copy()
    started = time.perf_counter()

    logger.info(f"🚀 RSGD: N={rsgd_config.N}, batch={rsgd_config.batch_size}, plan={plan.describe()}")
    for n in range(rsgd_config.N + 1):
        if n % rsgd_config.log_every == 0 or n == rsgd_config.N:
            _log_iterate(
                trace, n, M, reference_matrix, config, model, perturbation, noise, x0,
                rsgd_config, time.perf_counter() - started,
            )

        gradient = np.zeros_like(M)
        for b in range(rsgd_config.batch_size):
            record = simulate_trajectory(
                config, M, perturbation, noise, x0, rsgd_config.seed.fork(n).fork(b)
            )
            recovered = recover_noises(config, record)
            mismatch = float(np.max(np.abs(recovered - record.noises), initial=0.0))
            scale = max(1.0, float(np.max(np.abs(record.states))))
            if mismatch > NOISE_RECOVERY_TOLERANCE * scale:
                raise SolverException(f"Noise recovery mismatch {mismatch:.3g} at iteration {n}")
            gradient += grad_total_from_realizations(
                config, model, M, x0, recovered, record.perturbations
            )
        gradient /= rsgd_config.batch_size

        if not np.all(np.isfinite(gradient)):
            logger.warning(f"⚠️ Non-finite gradient at iteration {n}: stopping")
            trace.diverged, trace.divergence_iteration = True, n
            break
        M_raw = M - plan.step(n) * gradient
        if np.linalg.norm(M_raw) > rsgd_config.divergence_threshold:
            logger.warning(f"⚠️ Iterate norm {np.linalg.norm(M_raw):.3g} exceeds threshold at n={n}")
            trace.diverged, trace.divergence_iteration = True, n
            break
        M = project_matrix(M_raw, feasible_set)
        logger.debug(f"RSGD n={n}: ‖∇J‖={np.linalg.norm(gradient):.3e}")

    trace.final_policy = Policy(matrix=M, feasible_set=feasible_set)
    if trace.diverged:
        logger.warning(f"⚠️ RSGD diverged at iteration {trace.divergence_iteration}")
    else:
        logger.success(f"✅ RSGD finished {rsgd_config.N + 1} updates")
    return trace
