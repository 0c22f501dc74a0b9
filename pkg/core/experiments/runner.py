"""
Performative Control - Experiment Runner
Orchestration d'une exécution RSGD sur l'instance boursière
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np
from loguru import logger

from core.interfaces import (
    InstanceBundle,
    Policy,
    SeedPair,
    feasible_radius,
    SolverException,
)
from core.analysis.constants import ConstantsBundle, SensitivityProfile, compute_constants
from core.analysis.conditions import ConditionReport, check_psc_condition
from core.analysis.step_sizes import StepSizePlan, plan_constant_steps
from core.cost.expectation import expected_gradient_mc
from core.solvers.projection import project_matrix
from core.solvers.rrm import rrm_run
from core.solvers.rsgd import RsgdConfig, RunTrace, rsgd_run
from core.experiments.io import TraceRow, config_hash
from core.experiments.schedules import SensitivitySchedule
from core.experiments.stock import StockMarketConfig, build_stock_instance, random_portfolio


# Flux de graines : trajectoires RSGD, évaluation, référence, M_0
RSGD_STREAM = 0
EVAL_STREAM = 1
REFERENCE_STREAM = 2
INIT_STREAM = 3

ReferenceSource = Union[str, Policy, None]


@dataclass
class ExperimentOutput:
    """Trace d'une expérience et métadonnées permettant de la reproduire"""
    rows: List[TraceRow]
    metadata: Dict[str, Any]
    trace: RunTrace
    condition: ConditionReport
    reference: Optional[Policy] = None
    diverged: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def ps_errors(self) -> List[Optional[float]]:
        return [row.ps_error for row in self.rows]

    @property
    def initial_ps_error(self) -> Optional[float]:
        return self.rows[0].ps_error if self.rows else None

    @property
    def final_ps_error(self) -> Optional[float]:
        return self.rows[-1].ps_error if self.rows else None


def stock_constants(instance: InstanceBundle) -> ConstantsBundle:
    """Constantes d'analyse de l'instance (μ = 0 : la condition échoue)"""
    config = instance.config
    profile = SensitivityProfile(eps=instance.perturbation.eps, xi=instance.perturbation.xi)
    M_bar = feasible_radius(instance.feasible_set, config.policy_shape)
    if not np.isfinite(M_bar):
        # hyperplan affine : on garde le rayon déclaré du simplexe positif
        M_bar = float(np.sqrt(instance.feasible_set.width or config.d_u) * instance.feasible_set.scale)
        logger.warning(f"⚠️ Unbounded feasible set: using declared radius M̄={M_bar:.4g}")
    return compute_constants(
        config,
        instance.cost.mu,
        instance.cost.sigma_s,
        instance.cost.G,
        profile,
        M_bar=M_bar,
    )


def uniform_portfolio(cfg: StockMarketConfig, instance: InstanceBundle) -> Policy:
    matrix = np.zeros(instance.config.policy_shape)
    matrix[: cfg.L, : cfg.L] = 1.0 / cfg.L
    return Policy(matrix=matrix, feasible_set=instance.feasible_set)


def compute_reference(
    cfg: StockMarketConfig,
    instance: InstanceBundle,
) -> Optional[Policy]:
    """
    M^PS approchée par RRM avec minimisations internes échantillonnées

    La précision est limitée par l'échantillon (reference_samples) et la
    tolérance (reference_tol). Retourne None si RRM ne converge pas.
    """
    config, cost, perturbation, noise = instance.as_tuple()
    try:
        result = rrm_run(
            config, cost, perturbation, noise, instance.x0,
            uniform_portfolio(cfg, instance),
            max_iters=cfg.reference_iters,
            tol=cfg.reference_tol,
            n_samples=cfg.reference_samples,
            seed=SeedPair(cfg.seed).child(REFERENCE_STREAM),
        )
    except SolverException as e:
        logger.warning(f"⚠️ Reference solve failed: {e}")
        return None
    if not result.converged:
        logger.warning("⚠️ No converged reference: ps_error omitted")
        return None
    return result.M_star


def reference_stationarity(
    cfg: StockMarketConfig,
    instance: InstanceBundle,
    reference: Policy,
) -> float:
    """
    Résidu de gradient projeté ‖M* − P(M* − ∇C_T(M*; M*))‖_F

    Le gradient est estimé sur un échantillon indépendant de celui des
    minimisations internes : un petit résidu confirme que la référence
    n'est pas un artefact de l'échantillon.
    """
    config, cost, perturbation, noise = instance.as_tuple()
    gradient = expected_gradient_mc(
        config, cost, perturbation, noise, reference.matrix, reference.matrix, instance.x0,
        cfg.reference_samples, SeedPair(cfg.seed).child(REFERENCE_STREAM).fork(1),
    )
    projected = project_matrix(reference.matrix - gradient, instance.feasible_set)
    return float(np.linalg.norm(reference.matrix - projected))


def _resolve_reference(
    source: ReferenceSource,
    cfg: StockMarketConfig,
    instance: InstanceBundle,
) -> Optional[Policy]:
    if isinstance(source, Policy):
        return source
    if source is None:
        source = cfg.reference
    if source == "none":
        return None
    return compute_reference(cfg, instance)


def _reference_label(source: ReferenceSource, policy: Optional[Policy]) -> str:
    if policy is None:
        return "none"
    return "explicit" if isinstance(source, Policy) else "rrm"


def trace_rows(trace: RunTrace) -> List[TraceRow]:
    rows = []
    for k, n in enumerate(trace.iterations):
        cost = trace.expected_cost[k]
        std = trace.cost_std_error[k]
        rows.append(TraceRow(
            n=n,
            ps_error=None if trace.ps_error is None else trace.ps_error[k],
            expected_cost=None if not np.isfinite(cost) else cost,
            cost_std_error=None if not np.isfinite(std) else std,
        ))
    return rows


def run_experiment(
    cfg: StockMarketConfig,
    schedule: SensitivitySchedule,
    reference: ReferenceSource = None,
    M0: Optional[Policy] = None,
    plan: Optional[StepSizePlan] = None,
) -> ExperimentOutput:
    """
    Exécute RSGD sur l'instance boursière

    Args:
        cfg: paramètres de l'expérience
        schedule: calendrier ε_t
        reference: 'rrm', 'none', une Policy explicite, ou None (cfg.reference)
        M0: politique initiale (tirage aléatoire admissible par défaut)
        plan: plan de pas (η constant = cfg.eta par défaut, non validé)

    Returns:
        ExperimentOutput (trace tronquée et diverged=True en cas de divergence)
    """
    logger.info(
        f"🚀 Stock experiment: L={cfg.L}, T={cfg.T}, N={cfg.N}, "
        f"schedule={schedule.order}, regime={cfg.regime}, seed={cfg.seed}"
    )
    instance = build_stock_instance(cfg, schedule)
    config, cost, perturbation, noise = instance.as_tuple()

    bundle = stock_constants(instance)
    condition = check_psc_condition(bundle)
    if plan is None:
        plan = plan_constant_steps(bundle, cfg.eta)
    if M0 is None:
        M0 = random_portfolio(cfg, SeedPair(cfg.seed).child(INIT_STREAM))

    reference_policy = _resolve_reference(reference, cfg, instance)
    label = _reference_label(reference, reference_policy)
    stationarity = None
    if label == "rrm":
        stationarity = reference_stationarity(cfg, instance, reference_policy)
        logger.info(f"Reference stationarity residual (fresh sample): {stationarity:.3e}")

    rsgd_config = RsgdConfig(
        plan=plan,
        N=cfg.N,
        M0=M0,
        seed=SeedPair(cfg.seed).child(RSGD_STREAM),
        log_every=cfg.log_every,
        batch_size=cfg.batch_size,
        enforce_plan=False,
        eval_samples=cfg.eval_samples,
        eval_seed=SeedPair(cfg.seed).child(EVAL_STREAM) if cfg.eval_samples > 0 else None,
    )
    trace = rsgd_run(config, cost, perturbation, noise, instance.x0, rsgd_config, reference=reference_policy)
    rows = trace_rows(trace)

    metadata = {
        "config": cfg.as_dict(),
        "config_hash": config_hash({"config": cfg.as_dict(), "schedule": schedule.values.tolist()}),
        "seed": cfg.seed,
        "schedule": {
            "name": schedule.order,
            "synthetic": schedule.synthetic,
            "values": schedule.values.tolist(),
        },
        "condition_report": condition.as_dict(),
        "plan": plan.describe(),
        "plan_violations": list(plan.violated_conditions),
        "reference": label,
        "reference_stationarity": stationarity,
        "diverged": trace.diverged,
        "divergence_iteration": trace.divergence_iteration,
        "rows": len(rows),
        "notes": list(instance.notes),
    }
    if trace.diverged:
        logger.warning(f"⚠️ Experiment '{schedule.order}' diverged at n={trace.divergence_iteration}")
    else:
        logger.success(f"✅ Experiment '{schedule.order}' done ({len(rows)} rows)")
    return ExperimentOutput(
        rows=rows,
        metadata=metadata,
        trace=trace,
        condition=condition,
        reference=reference_policy,
        diverged=trace.diverged,
        notes=list(instance.notes),
    )
