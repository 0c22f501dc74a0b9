"""
Performative Control - Existence Conditions
Condition d'existence du point stable, borne d'itérations RRM et seuils par régime
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np
from loguru import logger

from core.interfaces import ConditionException, ConfigException
from core.analysis.constants import ConstantsBundle, condition_contributions


BOUNDARY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ConditionReport:
    """Résultat de Σ ε_t Σ_{i>t} ν_i < μ̃"""
    holds: bool
    lhs: float
    rhs: float
    margin: float
    contraction_ratio: float
    per_step_contributions: np.ndarray
    at_boundary: bool = False

    def as_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "contraction_ratio": self.contraction_ratio,
            "at_boundary": self.at_boundary,
            "per_step_contributions": self.per_step_contributions.tolist(),
        }


def check_psc_condition(bundle: ConstantsBundle) -> ConditionReport:
    """
    Évalue la condition d'existence et d'unicité du point stable

    Une marge à moins de 1e-12 de zéro est rejetée (inégalité stricte).
    """
    contributions = condition_contributions(bundle.eps, bundle.nu)
    lhs = float(np.sum(contributions))
    rhs = bundle.mu_tilde
    margin = rhs - lhs
    at_boundary = abs(margin) <= BOUNDARY_TOLERANCE * max(1.0, abs(rhs))
    holds = margin > 0 and not at_boundary
    ratio = lhs / rhs if rhs > 0 else math.inf

    if at_boundary:
        logger.warning("⚠️ Existence condition is numerically at its boundary")
    logger.debug(f"Condition: lhs={lhs:.6g} rhs={rhs:.6g} holds={holds}")
    return ConditionReport(
        holds=holds,
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        contraction_ratio=ratio,
        per_step_contributions=contributions,
        at_boundary=at_boundary,
    )


def rrm_iteration_bound(bundle: ConstantsBundle, initial_gap: float, rho: float) -> int:
    """
    Nombre d'itérations RRM garantissant ‖M_n − M^PS‖_F ≤ ρ

    n ≥ (1 − lhs/μ̃)⁻¹ · log(‖M_0 − M^PS‖_F / ρ)
    """
    if not initial_gap > 0 or not 0 < rho < initial_gap:
        raise ConfigException(f"Need initial_gap > rho > 0, got gap={initial_gap}, rho={rho}")
    report = check_psc_condition(bundle)
    if not report.holds:
        logger.error("❌ No RRM iteration bound: existence condition fails")
        raise ConditionException(
            f"Existence condition fails (lhs={report.lhs:.6g} ≥ μ̃={report.rhs:.6g})"
        )
    value = math.log(initial_gap / rho) / (1.0 - report.contraction_ratio)
    return max(1, math.ceil(value - 1e-9))


def stable_case_threshold(bundle: ConstantsBundle, zeta: float) -> Tuple[float, bool]:
    """
    Seuil du régime presque sûrement stable

    φ = (c₁ + c₂/(1−ζ))⁻¹ (x₀ + c₃/(1−ζ))⁻¹ ; la condition suffisante
    est Σε_t < φ(1 − H/T)μ̄.

    Returns:
        (seuil, Σε_t < seuil)
    """
    if not 0 < zeta < 1:
        raise ConfigException(f"Stable regime needs zeta in (0, 1), got {zeta}")
    factors = 1.0 - bundle.gamma + bundle.kappa ** 2 * bundle.xi
    if np.any(factors > zeta * (1 + 1e-12)):
        raise ConfigException(f"zeta={zeta} is below max(1−γ+κ²ξ_t)={factors.max():.6g}")

    inverse_gap = 1.0 / (1.0 - zeta)
    phi = 1.0 / ((bundle.c1 + bundle.c2 * inverse_gap) * (bundle.x0_bound + bundle.c3 * inverse_gap))
    threshold = phi * (1.0 - bundle.H / bundle.T) * bundle.mu_bar
    return threshold, bool(np.sum(bundle.eps) < threshold)


def unstable_case_schedule(bundle: ConstantsBundle, zeta_tilde: float) -> np.ndarray:
    """
    Bornes nécessaires ε_t < φ̄(T−H+1)μ̄ / (ζ̃^{T−t} − 1) pour t = 0..T−1

    φ̄ = (ζ̃ − 1) / (c₁x₀ + (c₁c₃ + c₂c₃ + c₃x₀)/ζ̃). Diagnostic seulement :
    respecter ces bornes ne certifie pas l'existence.
    """
    if not zeta_tilde > 1:
        raise ConfigException(f"Unstable regime needs zeta_tilde > 1, got {zeta_tilde}")
    c1, c2, c3, x0 = bundle.c1, bundle.c2, bundle.c3, bundle.x0_bound
    phi_bar = (zeta_tilde - 1.0) / (c1 * x0 + (c1 * c3 + c2 * c3 + c3 * x0) / zeta_tilde)
    remaining = bundle.T - np.arange(bundle.T)
    return phi_bar * (bundle.T - bundle.H + 1) * bundle.mu_bar / (zeta_tilde ** remaining - 1.0)


def unstable_case_requirement(bundle: ConstantsBundle, zeta_tilde: float, t: int) -> float:
    """Borne nécessaire sur ε_t dans le régime presque sûrement instable"""
    if not 0 <= t < bundle.T:
        raise ConfigException(f"t must lie in [0, {bundle.T}), got {t}")
    return float(unstable_case_schedule(bundle, zeta_tilde)[t])
