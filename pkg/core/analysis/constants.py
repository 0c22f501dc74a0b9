"""
Performative Control - Sensitivity Constants
Constantes de propagation c₁–c₅, λ_t, ν_t, ϑ_t, μ̃ et μ̄
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np
from loguru import logger

from core.interfaces import (
    RegimeHint,
    SystemConfig,
    ConfigException,
    DimensionException,
)
from core.dynamics.stability import alpha_beta_schedule


@dataclass(frozen=True)
class SensitivityProfile:
    """Calendriers ε_t (sensibilité) et ξ_t (support) pour t = 0..T−1"""
    eps: np.ndarray
    xi: np.ndarray
    regime: RegimeHint = field(default_factory=RegimeHint)

    def __post_init__(self):
        eps = np.array(self.eps, dtype=float)
        xi = np.array(self.xi, dtype=float)
        if eps.ndim != 1 or eps.shape != xi.shape:
            raise DimensionException(f"eps and xi must be 1-D of equal length, got {eps.shape}, {xi.shape}")
        if np.any(eps < 0) or np.any(xi < 0):
            raise ConfigException("Sensitivities and support bounds must be non-negative")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "xi", xi)

    @property
    def T(self) -> int:
        return len(self.eps)

    def step_factors(self, gamma: float, kappa: float) -> np.ndarray:
        """1 − γ + κ²ξ_t"""
        return 1.0 - gamma + kappa ** 2 * self.xi

    def check_regime(self, gamma: float, kappa: float) -> None:
        """Vérifie la cohérence de l'indication de régime avec ξ"""
        factors = self.step_factors(gamma, kappa)
        if self.regime.kind == "stable" and np.any(factors > self.regime.zeta * (1 + 1e-12)):
            raise ConfigException(
                f"Stable regime needs 1−γ+κ²ξ_t ≤ ζ={self.regime.zeta}, max is {factors.max():.6g}"
            )
        if self.regime.kind == "unstable" and np.any(factors < self.regime.zeta * (1 - 1e-12)):
            raise ConfigException(
                f"Unstable regime needs ζ̃={self.regime.zeta} ≤ 1−γ+κ²ξ_t, min is {factors.min():.6g}"
            )


@dataclass(frozen=True)
class ConstantsBundle:
    """
    Toutes les constantes d'analyse d'une instance

    alpha, beta : t = 0..T ; lam, nu, vartheta : t = 1..T (index 0 ↔ t = 1).
    """
    alpha: np.ndarray
    beta: np.ndarray
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    lam: np.ndarray
    nu: np.ndarray
    vartheta: np.ndarray
    mu_tilde: float
    mu_bar: float
    condition_lhs: float
    M_bar: float
    eps: np.ndarray
    xi: np.ndarray
    T: int
    H: int
    x0_bound: float
    gamma: float
    kappa: float

    @property
    def gap(self) -> float:
        """μ̃ − Σ ε_t Σ_{i>t} ν_i"""
        return self.mu_tilde - self.condition_lhs

    @property
    def smoothness_sum(self) -> float:
        """Σλ_t + Σ ε_t Σ_{i>t} ν_i"""
        return float(np.sum(self.lam)) + self.condition_lhs

    def as_dict(self) -> Dict[str, Any]:
        return {
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
            "c4": self.c4,
            "c5": self.c5,
            "mu_tilde": self.mu_tilde,
            "mu_bar": self.mu_bar,
            "condition_lhs": self.condition_lhs,
            "M_bar": self.M_bar,
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "lambda": self.lam.tolist(),
            "nu": self.nu.tolist(),
            "vartheta": self.vartheta.tolist(),
        }


def mu_bar(mu: float, sigma2: float, gamma: float, kappa: float) -> float:
    """μ̄ = min{μσ²/2, μσ²γ²/(64κ¹⁰)}"""
    return min(mu * sigma2 / 2.0, mu * sigma2 * gamma ** 2 / (64.0 * kappa ** 10))


def mu_tilde(T: int, H: int, mu: float, sigma2: float, gamma: float, kappa: float) -> float:
    """μ̃ = (T − H + 1)·μ̄"""
    if not H < T:
        raise ConfigException(f"mu_tilde needs H < T, got H={H}, T={T}")
    return (T - H + 1) * mu_bar(mu, sigma2, gamma, kappa)


def condition_contributions(eps: Sequence[float], nu: Sequence[float]) -> np.ndarray:
    """ε_t Σ_{i=t+1}^{T} ν_i pour t = 0..T−1 (nu indexé par t = 1..T)"""
    eps = np.asarray(eps, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if eps.shape != nu.shape:
        raise DimensionException("eps and nu must both have length T")
    # suffixes[t] = Σ_{i ≥ t+1} ν_i
    suffixes = np.cumsum(nu[::-1])[::-1]
    return eps * suffixes


def compute_constants(
    config: SystemConfig,
    mu: float,
    sigma_s: float,
    G: float,
    profile: SensitivityProfile,
    M_bar: float,
    sigma2: Optional[float] = None,
) -> ConstantsBundle:
    """
    Calcule le jeu complet de constantes

    Args:
        config: système (d_x, H, W, x₀, κ, γ, ‖B‖)
        mu, sigma_s, G: constantes du coût
        profile: calendriers ε_t, ξ_t
        M_bar: rayon de Frobenius de l'ensemble admissible
        sigma2: plancher de covariance (config.sigma2 par défaut)

    Returns:
        ConstantsBundle
    """
    if profile.T != config.T:
        raise DimensionException(f"Profile covers {profile.T} steps, system horizon is {config.T}")
    if not 0 < config.gamma < 1:
        raise ConfigException(f"gamma must lie in (0, 1), got {config.gamma}")
    if sigma_s <= 0 or G <= 0 or M_bar < 0 or not np.isfinite(M_bar):
        raise ConfigException("Smoothness, growth and policy radius must be positive and finite")
    if mu < 0:
        raise ConfigException(f"mu must be >= 0, got {mu}")
    if mu == 0:
        logger.warning("⚠️ Cost is not strongly convex: μ̃ = 0, the existence condition cannot hold")
    profile.check_regime(config.gamma, config.kappa)
    sigma2 = config.sigma2 if sigma2 is None else sigma2

    d_x, H, W = config.d_x, config.H, config.W
    kappa, gamma = config.kappa, config.gamma
    B_norm = config.B_norm
    x0 = config.x0_bound
    k23 = kappa ** 2 + kappa ** 3
    k45 = kappa ** 4 + kappa ** 5
    scale = d_x * H ** 1.5 * W / (1.0 - gamma)

    c1 = scale * sigma_s * (1.0 + k23 * B_norm) * k23
    c2 = scale * G * k45 * B_norm
    c3 = (H * M_bar * B_norm + 1.0) * W
    c4 = H * W * (1.0 - gamma) * c1
    c5 = H * W * (1.0 - gamma) * c1 / k23

    alpha, beta = alpha_beta_schedule(gamma, kappa, profile.xi)
    a, b = alpha[1:], beta[1:]
    state_scale = x0 * a + c3 * b
    lam = c1 * (c4 * b + c5)
    nu = (c1 + c2 * b) * state_scale
    vartheta = (
        kappa ** 3 * G * ((H * W + kappa ** 2) * kappa * B_norm * b + 1.0) * state_scale
        + G * H * W * M_bar * (kappa ** 3 * b + 1.0)
    )

    bar = mu_bar(mu, sigma2, gamma, kappa)
    tilde = (config.T - H + 1) * bar
    lhs = float(np.sum(condition_contributions(profile.eps, nu)))

    bundle = ConstantsBundle(
        alpha=alpha,
        beta=beta,
        c1=c1,
        c2=c2,
        c3=c3,
        c4=c4,
        c5=c5,
        lam=lam,
        nu=nu,
        vartheta=vartheta,
        mu_tilde=tilde,
        mu_bar=bar,
        condition_lhs=lhs,
        M_bar=M_bar,
        eps=profile.eps,
        xi=profile.xi,
        T=config.T,
        H=H,
        x0_bound=x0,
        gamma=gamma,
        kappa=kappa,
    )
    logger.debug(f"Constants: c1={c1:.4g} c2={c2:.4g} c3={c3:.4g} μ̃={tilde:.4g} lhs={lhs:.4g}")
    return bundle
