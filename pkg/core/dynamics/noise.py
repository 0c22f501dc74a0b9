"""
Performative Control - Noise Models
Modèles de bruit i.i.d. bornés w_t (boîte uniforme, support discret, bruit nul)
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from core.interfaces import (
    INoiseModel,
    ConfigException,
    DimensionException,
    SamplerException,
)


class UniformBoxNoise(INoiseModel):
    """
    Bruit à coordonnées i.i.d. Uniform[lo, hi]

    Avec shifted_stack=True, tire w ∈ U[lo, hi]^dim et retourne le vecteur
    empilé [w − E[w]; w] de dimension 2·dim (construction du marché boursier).
    """

    def __init__(self, lo: float, hi: float, dim: int, shifted_stack: bool = False):
        if not hi > lo:
            raise ConfigException(f"Uniform noise requires hi > lo, got [{lo}, {hi}]")
        if dim < 1:
            raise ConfigException(f"Noise dimension must be >= 1, got {dim}")
        self.lo = float(lo)
        self.hi = float(hi)
        self.base_dim = dim
        self.shifted_stack = shifted_stack
        self.dim = 2 * dim if shifted_stack else dim

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        w = rng.uniform(self.lo, self.hi, size=self.base_dim)
        if self.shifted_stack:
            return np.concatenate([w - 0.5 * (self.lo + self.hi), w])
        return w

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        w = rng.uniform(self.lo, self.hi, size=(n, self.base_dim))
        if self.shifted_stack:
            return np.hstack([w - 0.5 * (self.lo + self.hi), w])
        return w

    def mean(self) -> np.ndarray:
        center = np.full(self.base_dim, 0.5 * (self.lo + self.hi))
        if self.shifted_stack:
            return np.concatenate([np.zeros(self.base_dim), center])
        return center

    def entry_variance(self) -> float:
        return (self.hi - self.lo) ** 2 / 12.0

    def covariance_lower_bound(self) -> float:
        # Les deux moitiés de la pile sont parfaitement corrélées
        if self.shifted_stack:
            return 0.0
        return self.entry_variance()

    def norm_bound(self) -> float:
        peak = max(abs(self.lo), abs(self.hi))
        if self.shifted_stack:
            half = 0.5 * (self.hi - self.lo)
            return float(np.sqrt(self.base_dim * (half ** 2 + peak ** 2)))
        return float(np.sqrt(self.base_dim) * peak)

    @property
    def zero_mean(self) -> bool:
        return not self.shifted_stack and self.lo == -self.hi


class DiscreteNoise(INoiseModel):
    """Bruit à support fini {(atome, probabilité)}"""

    def __init__(
        self,
        atoms: Sequence[Sequence[float]],
        probs: Optional[Sequence[float]] = None,
        zero_mean: bool = True,
    ):
        atoms_array = np.atleast_2d(np.array(atoms, dtype=float))
        if atoms_array.size == 0:
            raise ConfigException("Discrete noise needs at least one atom")
        n_atoms = atoms_array.shape[0]
        if probs is None:
            probs_array = np.full(n_atoms, 1.0 / n_atoms)
        else:
            probs_array = np.array(probs, dtype=float)
        if probs_array.shape != (n_atoms,):
            raise DimensionException(f"Expected {n_atoms} probabilities, got {probs_array.shape}")
        if np.any(probs_array < 0) or abs(probs_array.sum() - 1.0) > 1e-12:
            raise ConfigException("Noise probabilities must be non-negative and sum to 1")

        self.atoms = atoms_array
        self.probs = probs_array
        self.dim = atoms_array.shape[1]
        self._zero_mean = zero_mean

        if zero_mean and np.linalg.norm(self.mean()) > 1e-12:
            raise ConfigException(f"Discrete noise declared zero-mean has mean {self.mean()}")

    @classmethod
    def binary_symmetric(cls, vectors: Sequence[Sequence[float]]) -> "DiscreteNoise":
        """Support {±v} pour chaque v, équiprobable"""
        base = np.atleast_2d(np.array(vectors, dtype=float))
        return cls(np.vstack([base, -base]))

    @classmethod
    def sign_cube(cls, dim: int, scale: float = 1.0) -> "DiscreteNoise":
        """Sommets de l'hypercube {±scale}^dim, covariance scale²·I"""
        grid = np.array(np.meshgrid(*[[-1.0, 1.0]] * dim, indexing="ij")).reshape(dim, -1).T
        return cls(scale * grid)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        index = rng.choice(len(self.probs), p=self.probs)
        return self.atoms[index].copy()

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.atoms[rng.choice(len(self.probs), size=n, p=self.probs)]

    def mean(self) -> np.ndarray:
        return self.probs @ self.atoms

    def covariance_lower_bound(self) -> float:
        centered = self.atoms - self.mean()
        covariance = (centered * self.probs[:, None]).T @ centered
        return float(max(np.linalg.eigvalsh(covariance).min(), 0.0))

    def norm_bound(self) -> float:
        return float(np.linalg.norm(self.atoms, axis=1).max())

    @property
    def zero_mean(self) -> bool:
        return self._zero_mean

    @property
    def is_discrete(self) -> bool:
        return True

    def support(self) -> List[Tuple[np.ndarray, float]]:
        return [(self.atoms[i], float(self.probs[i])) for i in range(len(self.probs))]


class ZeroNoise(INoiseModel):
    """Bruit identiquement nul"""

    def __init__(self, dim: int):
        if dim < 1:
            raise ConfigException(f"Noise dimension must be >= 1, got {dim}")
        self.dim = dim

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(self.dim)

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.zeros((n, self.dim))

    def mean(self) -> np.ndarray:
        return np.zeros(self.dim)

    def covariance_lower_bound(self) -> float:
        return 0.0

    def norm_bound(self) -> float:
        return 0.0

    @property
    def zero_mean(self) -> bool:
        return True

    @property
    def is_discrete(self) -> bool:
        return True

    def support(self) -> List[Tuple[np.ndarray, float]]:
        return [(np.zeros(self.dim), 1.0)]


def check_noise_dimension(noise: INoiseModel, d_x: int) -> None:
    """Vérifie que le bruit vit dans l'espace d'état"""
    if noise.dim != d_x:
        logger.error(f"❌ Noise dimension {noise.dim} does not match state dimension {d_x}")
        raise DimensionException(f"Noise dimension {noise.dim} != d_x {d_x}")


def check_noise_bound(noise: INoiseModel, W: float) -> None:
    """Vérifie ‖w‖ ≤ W pour le modèle déclaré"""
    bound = noise.norm_bound()
    if bound > W * (1 + 1e-12):
        logger.error(f"❌ Noise norm bound {bound:.6g} exceeds declared W={W:.6g}")
        raise SamplerException(f"Noise norm bound {bound:.6g} exceeds declared W={W:.6g}")
