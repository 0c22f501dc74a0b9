"""
Performative Control - Cost Models
Coûts quadratiques par étape et coût de risque projeté du marché boursier
"""

from typing import Sequence, Tuple, Union

import numpy as np
from loguru import logger

from core.interfaces import ICostModel, ConfigException, DimensionException


MatrixOrSchedule = Union[np.ndarray, Sequence[np.ndarray]]


def _symmetric_weights(weights: MatrixOrSchedule, dim: int, name: str) -> np.ndarray:
    """Retourne un tableau (k, dim, dim) de poids symétriques"""
    array = np.array(weights, dtype=float)
    if array.ndim == 2:
        array = array[None]
    if array.ndim != 3 or array.shape[1:] != (dim, dim):
        raise DimensionException(f"{name} must be {dim}×{dim} or a schedule of such, got {array.shape}")
    if not np.allclose(array, np.transpose(array, (0, 2, 1)), atol=1e-12):
        raise ConfigException(f"{name} must be symmetric")
    return array


class QuadraticCost(ICostModel):
    """
    c_t(x, u) = xᵀQ_t x + uᵀR_t u

    Q, R sont soit une matrice fixe, soit un calendrier de T+1 matrices.
    μ = λ_min, ς = G = 2·λ_max sur l'ensemble des poids.
    """

    kind = "quadratic"

    def __init__(self, Q: MatrixOrSchedule, R: MatrixOrSchedule, allow_degenerate: bool = False):
        Q_array = np.array(Q, dtype=float)
        R_array = np.array(R, dtype=float)
        if Q_array.ndim < 2 or R_array.ndim < 2:
            raise DimensionException("Cost weights must be matrices")
        self.d_x = Q_array.shape[-1]
        self.d_u = R_array.shape[-1]
        self.Q = _symmetric_weights(Q_array, self.d_x, "Q")
        self.R = _symmetric_weights(R_array, self.d_u, "R")

        eigenvalues = np.concatenate([
            np.concatenate([np.linalg.eigvalsh(q) for q in self.Q]),
            np.concatenate([np.linalg.eigvalsh(r) for r in self.R]),
        ])
        smallest, largest = float(eigenvalues.min()), float(eigenvalues.max())
        if smallest < -1e-12:
            raise ConfigException(f"Cost weights must be positive semidefinite (λ_min={smallest:.3g})")
        if smallest <= 1e-12 and not allow_degenerate:
            raise ConfigException("Cost weights must be positive definite (strong convexity)")
        if smallest <= 1e-12:
            logger.warning("⚠️ Cost is not strongly convex (μ = 0)")

        self.mu = max(smallest, 0.0)
        self.sigma_s = 2.0 * largest
        self.G = 2.0 * largest

    @property
    def is_quadratic(self) -> bool:
        return True

    def weights(self, t: int) -> Tuple[np.ndarray, np.ndarray]:
        """(Q_t, R_t) ; un poids fixe vaut pour tous les pas"""
        Q_t = self.Q[0] if len(self.Q) == 1 else self.Q[t]
        R_t = self.R[0] if len(self.R) == 1 else self.R[t]
        return Q_t, R_t

    def stage_cost(self, t: int, x: np.ndarray, u: np.ndarray) -> float:
        Q_t, R_t = self.weights(t)
        return float(x @ Q_t @ x + u @ R_t @ u)

    def stage_grads(self, t: int, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        Q_t, R_t = self.weights(t)
        return 2.0 * Q_t @ x, 2.0 * R_t @ u

    def batch_cost(self, t: int, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        Q_t, R_t = self.weights(t)
        return np.einsum("si,ij,sj->s", X, Q_t, X) + np.einsum("si,ij,sj->s", U, R_t, U)

    def batch_grads(self, t: int, X: np.ndarray, U: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        Q_t, R_t = self.weights(t)
        return 2.0 * X @ Q_t, 2.0 * U @ R_t


class StockRiskCost(QuadraticCost):
    """
    c_t(x, u) = ‖[I_L, 0]x‖² + ‖[I_L, 0]u‖²

    Poids projetés semi-définis : μ = 0, la convexité forte n'est pas garantie.
    """

    kind = "stock_risk"

    def __init__(self, L: int):
        if L < 1:
            raise ConfigException(f"Number of stocks must be >= 1, got {L}")
        selector = np.zeros((2 * L, 2 * L))
        selector[:L, :L] = np.eye(L)
        self.L = L
        super().__init__(selector, selector, allow_degenerate=True)


def stage_cost(model: ICostModel, t: int, x: np.ndarray, u: np.ndarray) -> float:
    """c_t(x, u)"""
    return model.stage_cost(t, np.asarray(x, dtype=float), np.asarray(u, dtype=float))


def stage_grads(model: ICostModel, t: int, x: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(∇_x c_t, ∇_u c_t)"""
    return model.stage_grads(t, np.asarray(x, dtype=float), np.asarray(u, dtype=float))
