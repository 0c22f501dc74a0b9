"""
Performative Control - Stability
Récurrences α_t/β_t, borne de norme de l'état et certificat de (κ, γ)-stabilité forte
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from loguru import logger

from core.interfaces import (
    SystemConfig,
    DimensionException,
    StabilityException,
    spectral_norm,
)


CERTIFIED = "CertifiedStronglyStable"
DECLARED_ONLY = "DeclaredOnly"
NOT_CERTIFIED = "NotCertified"

RESIDUAL_TOLERANCE = 1e-8


@dataclass(frozen=True)
class StabilityCertificate:
    """Verdict de stabilité forte et données de factorisation Ã = QLQ⁻¹"""
    verdict: str
    residual: float = float("nan")
    norms: Tuple[float, float, float, float] = (float("nan"),) * 4
    Q: Optional[np.ndarray] = None
    L: Optional[np.ndarray] = None
    reason: str = ""

    def __post_init__(self):
        if self.verdict not in (CERTIFIED, DECLARED_ONLY, NOT_CERTIFIED):
            raise ValueError(f"Unknown verdict: {self.verdict}")

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED


def alpha_beta_schedule(gamma: float, kappa: float, xi: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    α_t et β_t pour t = 0..len(xi)

    α_{t+1} = α_t(1−γ+κ²ξ_t), β_{t+1} = β_t(1−γ+κ²ξ_t) + 1, α_0 = 1, β_0 = 0.
    """
    xi = np.asarray(xi, dtype=float)
    factors = 1.0 - gamma + kappa ** 2 * xi
    alpha = np.ones(len(xi) + 1)
    beta = np.zeros(len(xi) + 1)
    for t, factor in enumerate(factors):
        alpha[t + 1] = alpha[t] * factor
        beta[t + 1] = beta[t] * factor + 1.0
    return alpha, beta


def alpha_beta(gamma: float, kappa: float, xi: Sequence[float], t: int) -> Tuple[float, float]:
    """(α_t, β_t) au pas t"""
    if not 0 <= t <= len(xi):
        raise DimensionException(f"t must lie in [0, {len(xi)}], got {t}")
    alpha, beta = alpha_beta_schedule(gamma, kappa, np.asarray(xi)[:t])
    return float(alpha[t]), float(beta[t])


def state_norm_bound(config: SystemConfig, M_bar: float, xi: Sequence[float], t: int) -> float:
    """Borne x₀κ²α_t + κ²W(‖B‖HM̄+1)β_t sur ‖x_t‖"""
    alpha_t, beta_t = alpha_beta(config.gamma, config.kappa, xi, t)
    kappa2 = config.kappa ** 2
    return (
        config.x0_bound * kappa2 * alpha_t
        + kappa2 * config.W * (config.B_norm * config.H * M_bar + 1.0) * beta_t
    )


def _within(value: float, bound: float) -> bool:
    return value <= bound * (1 + 1e-12) + 1e-15


def _evaluate_factorization(config: SystemConfig, Q: np.ndarray, L: np.ndarray) -> StabilityCertificate:
    try:
        Q_inv = scipy.linalg.inv(Q)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise StabilityException(f"Q is singular: {e}") from e
    if not np.all(np.isfinite(Q_inv)):
        raise StabilityException("Q is numerically singular")

    residual = spectral_norm(config.A_tilde - Q @ L @ Q_inv)
    norms = (spectral_norm(config.K), spectral_norm(L), spectral_norm(Q), spectral_norm(Q_inv))
    kappa, gamma = config.kappa, config.gamma
    failures = []
    if not _within(norms[0], kappa):
        failures.append(f"‖K‖={norms[0]:.4g} > κ")
    if not _within(norms[1], 1 - gamma):
        failures.append(f"‖L‖={norms[1]:.4g} > 1−γ")
    if not _within(norms[2], kappa):
        failures.append(f"‖Q‖={norms[2]:.4g} > κ")
    if not _within(norms[3], kappa):
        failures.append(f"‖Q⁻¹‖={norms[3]:.4g} > κ")
    if residual > RESIDUAL_TOLERANCE:
        failures.append(f"residual={residual:.3g}")

    verdict = CERTIFIED if not failures else NOT_CERTIFIED
    return StabilityCertificate(
        verdict=verdict, residual=residual, norms=norms, Q=Q, L=L, reason="; ".join(failures)
    )


def check_strong_stability(
    config: SystemConfig,
    Q: Optional[np.ndarray] = None,
    L: Optional[np.ndarray] = None,
) -> StabilityCertificate:
    """
    Certifie que Ã = A − BK est (κ, γ)-fortement stable

    Avec (Q, L) fournis : vérifie les quatre bornes et le résidu.
    Sinon : construit (Q, L) par décomposition de Schur (Ã normale) ou
    spectrale ; en cas d'échec, le verdict se dégrade en DeclaredOnly.

    Args:
        config: système (κ, γ déclarés)
        Q, L: factorisation optionnelle

    Returns:
        StabilityCertificate
    """
    if (Q is None) != (L is None):
        raise StabilityException("Q and L must be supplied together")

    if Q is not None:
        Q = np.asarray(Q)
        L = np.asarray(L)
        shape = (config.d_x, config.d_x)
        if Q.shape != shape or L.shape != shape:
            raise DimensionException(f"Q and L must be {shape}")
        certificate = _evaluate_factorization(config, Q, L)
        logger.debug(f"Supplied factorization verdict: {certificate.verdict}")
        return certificate

    A_tilde = config.A_tilde
    radius = float(np.max(np.abs(np.linalg.eigvals(A_tilde))))
    if radius > (1 - config.gamma) * (1 + 1e-12):
        logger.info(f"Spectral radius {radius:.4g} exceeds 1−γ={1 - config.gamma:.4g}")
        return StabilityCertificate(
            verdict=NOT_CERTIFIED,
            reason=f"spectral radius {radius:.6g} > 1−γ",
        )

    commutator = A_tilde @ A_tilde.T - A_tilde.T @ A_tilde
    if spectral_norm(commutator) <= 1e-12 * max(1.0, spectral_norm(A_tilde)) ** 2:
        T_schur, Z = scipy.linalg.schur(A_tilde.astype(complex), output="complex")
        Q_built, L_built = Z, np.diag(np.diag(T_schur))
    else:
        eigenvalues, vectors = scipy.linalg.eig(A_tilde)
        Q_built = vectors / np.linalg.norm(vectors, axis=0)
        L_built = np.diag(eigenvalues)

    try:
        certificate = _evaluate_factorization(config, Q_built, L_built)
    except StabilityException as e:
        logger.warning(f"⚠️ Defective transition, falling back to declared (κ, γ): {e}")
        return StabilityCertificate(verdict=DECLARED_ONLY, reason=str(e))

    if certificate.certified:
        return certificate
    logger.warning(f"⚠️ Stability not certified ({certificate.reason}); using declared (κ, γ)")
    return StabilityCertificate(
        verdict=DECLARED_ONLY,
        residual=certificate.residual,
        norms=certificate.norms,
        Q=certificate.Q,
        L=certificate.L,
        reason=certificate.reason,
    )
