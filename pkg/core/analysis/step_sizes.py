"""
Performative Control - Step Sizes
Plans de pas pour RSGD (décroissant, constant, arbitraire) et bornes d'erreur
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from core.interfaces import StepSizeException
from core.analysis.constants import ConstantsBundle
from core.analysis.conditions import check_psc_condition


DIMINISHING = "diminishing"
CONSTANT = "constant"
CUSTOM = "custom"

DEFAULT_PHI2_GRID = tuple(10.0 ** k for k in range(7))


@dataclass(frozen=True)
class StepSizePlan:
    """
    Plan de pas η_n

    diminishing : η_n = φ₁/(n + φ₂) ; constant : η_n = η ; custom : calendrier fini.
    """
    kind: str
    valid: bool
    phi1: Optional[float] = None
    phi2: Optional[float] = None
    eta: Optional[float] = None
    schedule: Optional[np.ndarray] = None
    phi3: Optional[float] = None
    violated_conditions: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in (DIMINISHING, CONSTANT, CUSTOM):
            raise StepSizeException(f"Unknown step-size plan: {self.kind}")

    def step(self, n: int) -> float:
        """η_n"""
        if self.kind == DIMINISHING:
            return self.phi1 / (n + self.phi2)
        if self.kind == CONSTANT:
            return self.eta
        if n >= len(self.schedule):
            raise StepSizeException(f"Custom schedule has {len(self.schedule)} steps, asked for n={n}")
        return float(self.schedule[n])

    def steps(self, count: int) -> np.ndarray:
        return np.array([self.step(n) for n in range(count)])

    def describe(self) -> str:
        if self.kind == DIMINISHING:
            return f"diminishing(phi1={self.phi1:.6g}, phi2={self.phi2:.6g})"
        if self.kind == CONSTANT:
            return f"constant(eta={self.eta:.6g})"
        return f"custom({len(self.schedule)} steps)"


def _condition_violation(bundle: ConstantsBundle) -> List[str]:
    report = check_psc_condition(bundle)
    if report.holds:
        return []
    return [f"existence condition fails (lhs={report.lhs:.6g} ≥ μ̃={report.rhs:.6g})"]


def sup_step_bound(bundle: ConstantsBundle) -> float:
    """min{gap/(2S²), 2/gap} avec gap = μ̃ − lhs et S = Σλ + lhs"""
    gap = bundle.gap
    return min(gap / (2.0 * bundle.smoothness_sum ** 2), 2.0 / gap)


def plan_diminishing_steps(bundle: ConstantsBundle, phi1: float, phi2: float) -> StepSizePlan:
    """
    Valide un plan η_n = φ₁/(n + φ₂)

    ratio : φ₁/φ₂ ≤ min{gap/(2S²), 1/gap}
    floor : φ₁/(1 + 1/φ₂) ≥ 2/gap
    """
    if phi2 < 1:
        raise StepSizeException(f"phi2 must be >= 1, got {phi2}")
    if not phi1 > 0:
        raise StepSizeException(f"phi1 must be > 0, got {phi1}")

    violations = _condition_violation(bundle)
    phi3 = None
    if not violations:
        gap = bundle.gap
        upper = min(gap / (2.0 * bundle.smoothness_sum ** 2), 1.0 / gap)
        if phi1 / phi2 > upper:
            violations.append(f"ratio condition: phi1/phi2={phi1 / phi2:.6g} > {upper:.6g}")
        lower = 2.0 / gap
        if phi1 / (1.0 + 1.0 / phi2) < lower:
            violations.append(
                f"floor condition: phi1/(1+1/phi2)={phi1 / (1.0 + 1.0 / phi2):.6g} < {lower:.6g}"
            )
        phi3 = 4.0 * phi1 * bundle.T * float(np.sum(bundle.vartheta ** 2)) / gap

    return StepSizePlan(
        kind=DIMINISHING,
        valid=not violations,
        phi1=phi1,
        phi2=phi2,
        phi3=phi3,
        violated_conditions=violations,
    )


def find_diminishing_plan(
    bundle: ConstantsBundle,
    phi2_grid: Sequence[float] = DEFAULT_PHI2_GRID,
) -> StepSizePlan:
    """
    Cherche un couple (φ₁, φ₂) valide

    Pour chaque φ₂ de la grille, φ₁ est le plus petit satisfaisant la condition floor.
    Si la grille échoue, φ₂ est pris à la racine des deux conditions combinées.
    """
    violations = _condition_violation(bundle)
    if violations:
        return StepSizePlan(kind=DIMINISHING, valid=False, violated_conditions=violations)

    gap = bundle.gap
    for phi2 in phi2_grid:
        phi1 = (2.0 / gap) * (1.0 + 1.0 / phi2) * (1 + 1e-12)
        plan = plan_diminishing_steps(bundle, phi1, phi2)
        if plan.valid:
            logger.debug(f"Diminishing plan found on grid: {plan.describe()}")
            return plan

    # m·φ₂² − (2/gap)·φ₂ − 2/gap ≥ 0
    m = min(gap / (2.0 * bundle.smoothness_sum ** 2), 1.0 / gap)
    a = 2.0 / gap
    phi2 = max(1.0, (a + math.sqrt(a * a + 4.0 * m * a)) / (2.0 * m)) * (1 + 1e-9)
    phi1 = a * (1.0 + 1.0 / phi2) * (1 + 1e-12)
    plan = plan_diminishing_steps(bundle, phi1, phi2)
    logger.info(f"Diminishing plan beyond grid: {plan.describe()} (valid={plan.valid})")
    return plan


def validate_step_sizes_general(bundle: ConstantsBundle, schedule: Sequence[float]) -> StepSizePlan:
    """
    Valide un calendrier arbitraire sur son préfixe fini

    sup η_n ≤ min{gap/(2S²), 2/gap} (avec η_0 < 2/gap) et
    η_n/η_{n+1} ≤ 1 + ½·gap·η_{n+1}.
    """
    etas = np.asarray(schedule, dtype=float)
    if etas.size == 0:
        raise StepSizeException("Step-size schedule is empty")
    if np.any(etas <= 0):
        raise StepSizeException("Step sizes must be positive")
    return _validate_schedule(bundle, etas, CUSTOM)


def _validate_schedule(bundle: ConstantsBundle, etas: np.ndarray, kind: str) -> StepSizePlan:
    violations = _condition_violation(bundle)
    if not violations:
        gap = bundle.gap
        sup_bound = sup_step_bound(bundle)
        if etas.max() > sup_bound:
            violations.append(f"sup condition: max eta={etas.max():.6g} > {sup_bound:.6g}")
        if etas[0] >= 2.0 / gap:
            violations.append(f"initial step: eta_0={etas[0]:.6g} ≥ 2/gap={2.0 / gap:.6g}")
        ratios = etas[:-1] / etas[1:]
        limits = 1.0 + 0.5 * gap * etas[1:]
        broken = np.nonzero(ratios > limits * (1 + 1e-12))[0]
        if broken.size:
            violations.append(f"ratio condition fails first at n={int(broken[0])}")

    return StepSizePlan(
        kind=kind,
        valid=not violations,
        eta=float(etas[0]) if kind == CONSTANT else None,
        schedule=etas if kind == CUSTOM else None,
        violated_conditions=violations,
    )


def plan_constant_steps(bundle: ConstantsBundle, eta: float, horizon: int = 2) -> StepSizePlan:
    """Plan constant η validé par les conditions générales"""
    if not eta > 0:
        raise StepSizeException(f"Constant step must be > 0, got {eta}")
    return _validate_schedule(bundle, np.full(max(horizon, 1), float(eta)), CONSTANT)


def theorem1_error_bound(
    bundle: ConstantsBundle,
    plan: StepSizePlan,
    initial_gap_sq: float,
    N: int,
) -> float:
    """
    Borne e^{−Σ_{n=1}^{N} φ₁·gap/n}·E‖M_0 − M^PS‖² + φ₃/N
    """
    if plan.kind != DIMINISHING or not plan.valid:
        raise StepSizeException(f"Error bound needs a valid diminishing plan ({plan.violated_conditions})")
    if N < 1:
        raise StepSizeException(f"N must be >= 1, got {N}")
    harmonic = float(np.sum(1.0 / np.arange(1, N + 1)))
    return math.exp(-harmonic * plan.phi1 * bundle.gap) * initial_gap_sq + plan.phi3 / N


def general_error_bound(
    bundle: ConstantsBundle,
    plan: StepSizePlan,
    initial_gap_sq: float,
    N: int,
) -> float:
    """
    Borne Π_{n<N}(1 − η_n·gap)·E‖M_0 − M^PS‖² + 4η_{N−1}·T·Σϑ²/gap
    """
    if not plan.valid:
        raise StepSizeException(f"Error bound needs a valid plan ({plan.violated_conditions})")
    if N < 1:
        raise StepSizeException(f"N must be >= 1, got {N}")
    gap = bundle.gap
    etas = plan.steps(N)
    contraction = float(np.prod(1.0 - etas * gap))
    fluctuation = 4.0 * etas[-1] * bundle.T * float(np.sum(bundle.vartheta ** 2)) / gap
    return contraction * initial_gap_sq + fluctuation
