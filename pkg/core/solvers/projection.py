"""
Performative Control - Projections
Projection euclidienne sur la boule de Frobenius ou sur le simplexe par lignes
"""

import numpy as np

from core.interfaces import (
    FeasibleSet,
    FrobeniusBall,
    Policy,
    RowSimplex,
    DimensionException,
)


FEASIBILITY_TOLERANCE = 1e-12


def simplex_project_vector(v: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """
    Projection de v sur {x ≥ 0, Σx = scale} par tri

    Tri stable décroissant, les égalités sont départagées par l'indice.
    """
    order = np.argsort(-v, kind="stable")
    sorted_v = v[order]
    cumulative = np.cumsum(sorted_v) - scale
    ranks = np.arange(1, v.size + 1)
    active = np.nonzero(sorted_v - cumulative / ranks > 0)[0]
    rho = active[-1]
    theta = cumulative[rho] / (rho + 1)
    projected = np.maximum(v - theta, 0.0)
    total = projected.sum()
    if total > 0:
        projected *= scale / total
    return projected


def affine_project_vector(v: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Projection de v sur l'hyperplan {Σx = scale}"""
    return v - (v.sum() - scale) / v.size


def _simplex_row_feasible(row: np.ndarray, feasible: RowSimplex) -> bool:
    if feasible.nonnegative and np.any(row < 0):
        return False
    return abs(row.sum() - feasible.scale) <= FEASIBILITY_TOLERANCE * feasible.scale


def _project_simplex(M_raw: np.ndarray, feasible: RowSimplex) -> np.ndarray:
    width = feasible.width
    if width is not None and width > min(M_raw.shape):
        raise DimensionException(f"Simplex width {width} exceeds policy shape {M_raw.shape}")
    projected = np.zeros_like(M_raw) if width is not None else M_raw.copy()
    rows = M_raw.shape[0] if width is None else width
    project_row = simplex_project_vector if feasible.nonnegative else affine_project_vector

    for r in range(rows):
        row = M_raw[r, :width] if width is not None else M_raw[r]
        if not _simplex_row_feasible(row, feasible):
            row = project_row(row, feasible.scale)
        if width is not None:
            projected[r, :width] = row
        else:
            projected[r] = row
    return projected


def project_matrix(M_raw: np.ndarray, feasible_set: FeasibleSet) -> np.ndarray:
    """Proj_𝕄(M_raw) sous forme de tableau"""
    M_raw = np.asarray(M_raw, dtype=float)
    if isinstance(feasible_set, FrobeniusBall):
        norm = float(np.linalg.norm(M_raw))
        if norm <= feasible_set.radius * (1 + FEASIBILITY_TOLERANCE):
            return M_raw.copy()
        return M_raw * (feasible_set.radius / norm)
    if isinstance(feasible_set, RowSimplex):
        return _project_simplex(M_raw, feasible_set)
    raise DimensionException(f"Unsupported feasible set: {type(feasible_set).__name__}")


def project_policy(M_raw: np.ndarray, feasible_set: FeasibleSet) -> Policy:
    """
    Projection euclidienne (Frobenius) sur l'ensemble admissible

    Un point déjà admissible est rendu inchangé, d'où l'idempotence bit à bit.

    Args:
        M_raw: matrice à projeter
        feasible_set: FrobeniusBall ou RowSimplex

    Returns:
        Policy admissible
    """
    return Policy(matrix=project_matrix(M_raw, feasible_set), feasible_set=feasible_set)
