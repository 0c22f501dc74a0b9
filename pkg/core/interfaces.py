"""
Performative Control - Core Interfaces
Définition des contrats (objets valeur, interfaces, exceptions) partagés par tous les modules
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np


# ============================================================================
# EXCEPTIONS
# ============================================================================

class PerformativeException(Exception):
    """Exception de base pour le contrôle performatif"""
    pass


class ConfigException(PerformativeException):
    """Configuration invalide (fichier, clés inconnues, valeurs hors domaine)"""
    pass


class DimensionException(PerformativeException):
    """Dimensions incohérentes entre matrices et vecteurs"""
    pass


class SamplerException(PerformativeException):
    """Échec d'un échantillonneur (bruit ou perturbation)"""
    pass


class StabilityException(PerformativeException):
    """Certificat de stabilité impossible à évaluer"""
    pass


class BudgetExceededException(PerformativeException):
    """Budget combinatoire ou d'itérations dépassé"""
    pass


class ConditionException(PerformativeException):
    """Condition d'existence du point stable non satisfaite"""
    pass


class StepSizeException(PerformativeException):
    """Plan de pas invalide"""
    pass


class DivergenceException(PerformativeException):
    """Itérés non finis ou explosifs"""

    def __init__(self, message: str, iteration: int = -1):
        super().__init__(message)
        self.iteration = iteration


class SolverException(PerformativeException):
    """Échec d'un solveur"""
    pass


# ============================================================================
# DATA CLASSES (Value Objects)
# ============================================================================

def as_matrix(value, shape: Tuple[int, int], name: str) -> np.ndarray:
    """Convertit en matrice float64 et vérifie la forme"""
    array = np.array(value, dtype=float)
    if array.ndim != 2 or array.shape != shape:
        raise DimensionException(f"{name} must have shape {shape}, got {array.shape}")
    return array


def spectral_norm(matrix: np.ndarray) -> float:
    """Norme spectrale (plus grande valeur singulière)"""
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.norm(matrix, 2))


@dataclass(frozen=True)
class SeedPair:
    """
    Graine (base, flux) d'une trajectoire

    Chaque paire produit deux générateurs Philox indépendants (bruit, perturbations)
    dérivés par SeedSequence : le résultat ne dépend que de la paire, jamais de
    l'ordre d'exécution.
    """
    seed: int
    stream: int = 0
    path: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.seed < 0 or self.stream < 0 or any(k < 0 for k in self.path):
            raise ConfigException("Seeds must be non-negative integers")

    def generators(self) -> Tuple[np.random.Generator, np.random.Generator]:
        """Retourne (générateur du bruit, générateur des perturbations)"""
        root = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,) + self.path)
        noise_seq, perturbation_seq = root.spawn(2)
        return (
            np.random.Generator(np.random.Philox(noise_seq)),
            np.random.Generator(np.random.Philox(perturbation_seq)),
        )

    def child(self, stream: int) -> "SeedPair":
        """Flux nommé de la même graine (chemin remis à zéro)"""
        return SeedPair(seed=self.seed, stream=stream)

    def fork(self, key: int) -> "SeedPair":
        """Sous-flux indépendant (itération, lot d'évaluation, …)"""
        return SeedPair(seed=self.seed, stream=self.stream, path=self.path + (key,))

    def as_dict(self) -> dict:
        return {"seed": self.seed, "stream": self.stream, "path": list(self.path)}


@dataclass(frozen=True)
class FrobeniusBall:
    """Boule de Frobenius ‖M‖_F ≤ radius"""
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigException(f"Frobenius radius must be > 0, got {self.radius}")


@dataclass(frozen=True)
class RowSimplex:
    """
    Lignes sur le simplexe mis à l'échelle

    width restreint le simplexe au bloc carré supérieur gauche (width × width) ;
    les autres coefficients sont fixés à 0. nonnegative=False donne la
    contrainte de somme seule (hyperplan affine).
    """
    scale: float = 1.0
    width: Optional[int] = None
    nonnegative: bool = True

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigException(f"Simplex scale must be > 0, got {self.scale}")
        if self.width is not None and self.width < 1:
            raise ConfigException(f"Simplex width must be >= 1, got {self.width}")


FeasibleSet = Union[FrobeniusBall, RowSimplex]


def feasible_radius(feasible_set: FeasibleSet, shape: Tuple[int, int]) -> float:
    """Rayon de Frobenius M̄ couvrant l'ensemble admissible"""
    if isinstance(feasible_set, FrobeniusBall):
        return feasible_set.radius
    rows = shape[0] if feasible_set.width is None else feasible_set.width
    if feasible_set.nonnegative:
        # ‖ligne‖₂ ≤ somme de la ligne pour des coefficients positifs
        return float(np.sqrt(rows) * feasible_set.scale)
    return float("inf")


@dataclass(frozen=True)
class SystemConfig:
    """Quantités statiques du système linéaire"""
    A: np.ndarray
    B: np.ndarray
    K: np.ndarray
    T: int
    H: int
    W: float
    x0_bound: float
    sigma2: float
    kappa: float
    gamma: float

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionException(f"A must be square, got shape {A.shape}")
        d_x = A.shape[0]
        B = np.array(self.B, dtype=float)
        if B.ndim != 2 or B.shape[0] != d_x:
            raise DimensionException(f"B must be {d_x}×d_u, got shape {B.shape}")
        K = as_matrix(self.K, (B.shape[1], d_x), "K")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "K", K)

        if self.T < 1:
            raise ConfigException(f"Horizon T must be >= 1, got {self.T}")
        if not 1 <= self.H < self.T:
            raise ConfigException(f"Memory H must satisfy 1 <= H < T, got H={self.H}, T={self.T}")
        if self.kappa < 1:
            raise ConfigException(f"kappa must be >= 1, got {self.kappa}")
        if not 0 < self.gamma < 1:
            raise ConfigException(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.W > 0:
            raise ConfigException(f"W must be > 0, got {self.W}")
        if not self.sigma2 > 0:
            raise ConfigException(f"sigma2 must be > 0, got {self.sigma2}")
        if self.x0_bound < 0:
            raise ConfigException(f"x0 bound must be >= 0, got {self.x0_bound}")

    @property
    def d_x(self) -> int:
        return self.A.shape[0]

    @property
    def d_u(self) -> int:
        return self.B.shape[1]

    @property
    def policy_shape(self) -> Tuple[int, int]:
        return (self.d_u, self.H * self.d_x)

    @property
    def A_tilde(self) -> np.ndarray:
        """Ã = A − BK"""
        return self.A - self.B @ self.K

    @property
    def B_norm(self) -> float:
        return spectral_norm(self.B)


@dataclass(frozen=True)
class Policy:
    """Politique DAP M = [M⁽¹⁾ … M⁽ᴴ⁾] et son ensemble admissible"""
    matrix: np.ndarray
    feasible_set: FeasibleSet

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2:
            raise DimensionException(f"Policy matrix must be 2-D, got shape {matrix.shape}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_blocks(cls, blocks: List[np.ndarray], feasible_set: FeasibleSet) -> "Policy":
        if not blocks:
            raise DimensionException("Policy needs at least one block")
        shapes = {np.shape(block) for block in blocks}
        if len(shapes) != 1:
            raise DimensionException(f"All policy blocks must share a shape, got {shapes}")
        return cls(matrix=np.hstack([np.asarray(b, dtype=float) for b in blocks]),
                   feasible_set=feasible_set)

    @classmethod
    def zeros(cls, config: SystemConfig, feasible_set: FeasibleSet) -> "Policy":
        return cls(matrix=np.zeros(config.policy_shape), feasible_set=feasible_set)

    def blocks(self, d_x: int) -> List[np.ndarray]:
        """Découpe M en ses H blocs d_u×d_x"""
        if self.matrix.shape[1] % d_x:
            raise DimensionException(f"Policy width {self.matrix.shape[1]} is not a multiple of {d_x}")
        return np.hsplit(self.matrix, self.matrix.shape[1] // d_x)

    def with_matrix(self, matrix: np.ndarray) -> "Policy":
        return Policy(matrix=matrix, feasible_set=self.feasible_set)

    @property
    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def is_feasible(self, tol: float = 1e-9) -> bool:
        """Vérifie les invariants de l'ensemble admissible"""
        feasible = self.feasible_set
        if isinstance(feasible, FrobeniusBall):
            return self.frobenius_norm <= feasible.radius * (1 + tol)
        block, rest = split_simplex_block(self.matrix, feasible)
        if rest is not None and np.any(rest != 0):
            return False
        if feasible.nonnegative and np.any(block < 0):
            return False
        return bool(np.all(np.abs(block.sum(axis=1) - feasible.scale) <= tol * feasible.scale))


def split_simplex_block(matrix: np.ndarray, feasible: RowSimplex):
    """Retourne (bloc contraint, coefficients hors bloc ou None)"""
    if feasible.width is None:
        return matrix, None
    w = feasible.width
    if w > min(matrix.shape):
        raise DimensionException(f"Simplex width {w} exceeds policy shape {matrix.shape}")
    mask = np.ones(matrix.shape, dtype=bool)
    mask[:w, :w] = False
    return matrix[:w, :w], matrix[mask]


@dataclass
class RegimeHint:
    """Indication de régime : 'unknown', 'stable' (ζ<1) ou 'unstable' (ζ̃>1)"""
    kind: str = "unknown"
    zeta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("unknown", "stable", "unstable"):
            raise ConfigException(f"Invalid regime: {self.kind}")
        if self.kind == "stable" and not (self.zeta is not None and 0 < self.zeta < 1):
            raise ConfigException("Stable regime requires zeta in (0, 1)")
        if self.kind == "unstable" and not (self.zeta is not None and self.zeta > 1):
            raise ConfigException("Unstable regime requires zeta_tilde > 1")


# ============================================================================
# INTERFACES (Abstract Base Classes)
# ============================================================================

class INoiseModel(ABC):
    """Interface pour les modèles de bruit w_t (i.i.d., bornés)"""

    dim: int

    @abstractmethod
    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Tire une réalisation w_t"""
        pass

    @abstractmethod
    def mean(self) -> np.ndarray:
        """Moyenne exacte du bruit"""
        pass

    @abstractmethod
    def covariance_lower_bound(self) -> float:
        """Plancher σ² de la covariance (plus petite valeur propre)"""
        pass

    @abstractmethod
    def norm_bound(self) -> float:
        """Borne W telle que ‖w‖ ≤ W"""
        pass

    @property
    def is_discrete(self) -> bool:
        return False

    def support(self) -> List[Tuple[np.ndarray, float]]:
        """Atomes et probabilités (modèles discrets uniquement)"""
        raise SamplerException(f"{type(self).__name__} has no finite support")

    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Tire n réalisations, shape (n, dim)"""
        return np.array([self.sample(rng) for _ in range(n)]).reshape(n, self.dim)


class IPerturbationMap(ABC):
    """Interface pour la famille de lois {D_t(M)} des perturbations Δ_t"""

    eps: np.ndarray
    xi: np.ndarray
    d_x: int

    @property
    def T(self) -> int:
        return len(self.eps)

    @abstractmethod
    def sample(self, M: np.ndarray, t: int, rng: np.random.Generator) -> np.ndarray:
        """Tire Δ_t ∼ D_t(M)"""
        pass

    @property
    def is_discrete(self) -> bool:
        return False

    @property
    def zero_mean(self) -> bool:
        return True

    @property
    def support_certified(self) -> bool:
        """ξ_t borne prouvée de ‖Δ_t‖ (sinon valeur seulement déclarée)"""
        return True

    def support(self, M: np.ndarray, t: int) -> List[Tuple[np.ndarray, float]]:
        """Atomes et probabilités de D_t(M) (familles discrètes uniquement)"""
        raise SamplerException(f"{type(self).__name__} has no finite support")

    def sample_many(self, M: np.ndarray, t: int, rng: np.random.Generator, n: int) -> np.ndarray:
        """Tire n perturbations au pas t, shape (n, d_x, d_x)"""
        return np.array([self.sample(M, t, rng) for _ in range(n)]).reshape(n, self.d_x, self.d_x)

    def frozen_at(self, M_prime: np.ndarray) -> "IPerturbationMap":
        from core.dynamics.perturbation import FrozenPerturbation
        return FrozenPerturbation(self, M_prime)


class ICostModel(ABC):
    """Interface pour les coûts par étape c_t(x, u) (convexité, lissage, croissance)"""

    mu: float
    sigma_s: float
    G: float
    kind: str

    @abstractmethod
    def stage_cost(self, t: int, x: np.ndarray, u: np.ndarray) -> float:
        pass

    @abstractmethod
    def stage_grads(self, t: int, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Retourne (∇_x c_t, ∇_u c_t)"""
        pass

    def batch_cost(self, t: int, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        """c_t sur un lot (S, d_x) × (S, d_u)"""
        return np.array([self.stage_cost(t, x, u) for x, u in zip(X, U)])

    def batch_grads(self, t: int, X: np.ndarray, U: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(∇_x c_t, ∇_u c_t) sur un lot"""
        grads = [self.stage_grads(t, x, u) for x, u in zip(X, U)]
        return np.array([g[0] for g in grads]), np.array([g[1] for g in grads])

    @property
    def is_quadratic(self) -> bool:
        return False


@dataclass
class InstanceBundle:
    """Instance complète prête à simuler"""
    config: SystemConfig
    cost: ICostModel
    perturbation: IPerturbationMap
    noise: INoiseModel
    x0: np.ndarray
    feasible_set: FeasibleSet
    notes: List[str] = field(default_factory=list)

    def as_tuple(self) -> Tuple[SystemConfig, ICostModel, IPerturbationMap, INoiseModel]:
        """(système, coût, perturbation, bruit)"""
        return self.config, self.cost, self.perturbation, self.noise
