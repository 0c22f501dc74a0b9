"""
Performative Control - Perturbation Maps
Familles de lois {D_t(M)} des perturbations Δ_t de la matrice de transition
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from core.interfaces import (
    IPerturbationMap,
    ConfigException,
    DimensionException,
    SamplerException,
)


class NullPerturbation(IPerturbationMap):
    """Δ_t ≡ 0 : système non performatif"""

    def __init__(self, T: int, d_x: int):
        self.d_x = d_x
        self.eps = np.zeros(T)
        self.xi = np.zeros(T)

    def sample(self, M: np.ndarray, t: int, rng: np.random.Generator) -> np.ndarray:
        return np.zeros((self.d_x, self.d_x))

    def sample_many(self, M: np.ndarray, t: int, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.zeros((n, self.d_x, self.d_x))

    @property
    def is_discrete(self) -> bool:
        return True

    def support(self, M: np.ndarray, t: int) -> List[Tuple[np.ndarray, float]]:
        return [(np.zeros((self.d_x, self.d_x)), 1.0)]


class ScaledFactorPerturbation(IPerturbationMap):
    """
    Δ_t(M) = a_t · tanh(⟨P, M⟩_F) · U_t

    U_t suit une loi discrète fixe de matrices centrées ; P est de norme de
    Frobenius unité, donc M ↦ tanh(⟨P, M⟩) est 1-Lipschitz et borné par 1.
    Sous le couplage identité, W¹(D_t(M), D_t(M')) ≤ a_t·E‖U‖_F·‖M − M'‖_F.

    Args:
        scales: a_0..a_{T−1} (≥ 0)
        direction: matrice P (normalisée si besoin), même forme que M
        factors: matrices U (d_x × d_x)
        probs: probabilités des facteurs (uniformes par défaut)
    """

    def __init__(
        self,
        scales: Sequence[float],
        direction: np.ndarray,
        factors: Sequence[np.ndarray],
        probs: Optional[Sequence[float]] = None,
    ):
        self.scales = np.array(scales, dtype=float)
        if self.scales.ndim != 1 or np.any(self.scales < 0):
            raise ConfigException("Perturbation scales must be a 1-D non-negative schedule")

        direction = np.array(direction, dtype=float)
        norm = np.linalg.norm(direction)
        if norm == 0:
            raise ConfigException("Perturbation direction P must be nonzero")
        self.direction = direction / norm

        self.factors = np.array([np.array(U, dtype=float) for U in factors])
        if self.factors.ndim != 3 or self.factors.shape[1] != self.factors.shape[2]:
            raise DimensionException("Perturbation factors must be square matrices of one shape")
        n_factors = self.factors.shape[0]
        self.probs = (
            np.full(n_factors, 1.0 / n_factors) if probs is None else np.array(probs, dtype=float)
        )
        if self.probs.shape != (n_factors,) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise ConfigException("Factor probabilities must match factors and sum to 1")
        if np.any(self.probs < 0):
            raise ConfigException("Factor probabilities must be non-negative")

        factor_mean = np.tensordot(self.probs, self.factors, axes=1)
        if np.linalg.norm(factor_mean) > 1e-12:
            raise ConfigException("Perturbation factors must have zero mean")

        self.d_x = self.factors.shape[1]
        expected_frobenius = float(self.probs @ np.linalg.norm(self.factors, axis=(1, 2)))
        max_spectral = float(max(np.linalg.norm(U, 2) for U in self.factors))
        self.eps = self.scales * expected_frobenius
        self.xi = self.scales * max_spectral

    @classmethod
    def symmetric(
        cls,
        scales: Sequence[float],
        direction: np.ndarray,
        factor: np.ndarray,
    ) -> "ScaledFactorPerturbation":
        """Facteurs {U, −U} équiprobables"""
        factor = np.array(factor, dtype=float)
        return cls(scales, direction, [factor, -factor])

    def _link(self, M: np.ndarray) -> float:
        if M.shape != self.direction.shape:
            raise DimensionException(
                f"Policy shape {M.shape} does not match direction {self.direction.shape}"
            )
        return float(np.tanh(np.sum(self.direction * M)))

    def sample(self, M: np.ndarray, t: int, rng: np.random.Generator) -> np.ndarray:
        # Un tirage par pas même si a_t = 0, pour aligner les flux
        index = rng.choice(len(self.probs), p=self.probs)
        return self.scales[t] * self._link(M) * self.factors[index]

    def sample_many(self, M: np.ndarray, t: int, rng: np.random.Generator, n: int) -> np.ndarray:
        indices = rng.choice(len(self.probs), size=n, p=self.probs)
        return self.scales[t] * self._link(M) * self.factors[indices]

    @property
    def is_discrete(self) -> bool:
        return True

    def support(self, M: np.ndarray, t: int) -> List[Tuple[np.ndarray, float]]:
        amplitude = self.scales[t] * self._link(M)
        return [(amplitude * U, float(p)) for U, p in zip(self.factors, self.probs)]

    def scaled(self, factor: float) -> "ScaledFactorPerturbation":
        """Même famille avec a_t multiplié par factor (ε_t et ξ_t suivent)"""
        if factor < 0:
            raise ConfigException("Sensitivity scaling must be non-negative")
        return ScaledFactorPerturbation(
            self.scales * factor, self.direction, list(self.factors), self.probs
        )


class FrozenPerturbation(IPerturbationMap):
    """
    Famille D_t(M') figée : la loi ignore la politique évaluée

    Sert à C_T(M; M') et à l'application Φ.
    """

    def __init__(self, base: IPerturbationMap, M_prime: np.ndarray):
        self.base = base
        self.M_prime = np.array(M_prime, dtype=float)
        self.d_x = base.d_x
        self.eps = np.zeros_like(base.eps)
        self.xi = np.array(base.xi, dtype=float)

    def sample(self, M: np.ndarray, t: int, rng: np.random.Generator) -> np.ndarray:
        return self.base.sample(self.M_prime, t, rng)

    def sample_many(self, M: np.ndarray, t: int, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.base.sample_many(self.M_prime, t, rng, n)

    @property
    def is_discrete(self) -> bool:
        return self.base.is_discrete

    @property
    def zero_mean(self) -> bool:
        return self.base.zero_mean

    @property
    def support_certified(self) -> bool:
        return self.base.support_certified

    def support(self, M: np.ndarray, t: int) -> List[Tuple[np.ndarray, float]]:
        return self.base.support(self.M_prime, t)

    def frozen_at(self, M_prime: np.ndarray) -> IPerturbationMap:
        return FrozenPerturbation(self.base, M_prime)


def check_perturbation_support(perturbation: IPerturbationMap, delta: np.ndarray, t: int) -> None:
    """Vérifie ‖Δ_t‖ ≤ ξ_t pour un tirage"""
    norm = float(np.linalg.norm(delta, 2))
    if norm > perturbation.xi[t] * (1 + 1e-9) + 1e-12:
        logger.error(f"❌ Perturbation at t={t} has norm {norm:.6g} > xi={perturbation.xi[t]:.6g}")
        raise SamplerException(f"Sample at t={t} violates its support bound")
