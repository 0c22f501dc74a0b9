"""
Performative Control - Solvers
Projection, RSGD, application Φ, RRM et solution de référence M^PS
"""

from core.solvers.projection import (
    project_policy,
    project_matrix,
    simplex_project_vector,
    affine_project_vector,
)
from core.solvers.rsgd import RsgdConfig, RunTrace, rsgd_run, recover_noises
from core.solvers.rrm import (
    InnerResult,
    FixedPointResult,
    minimize_shifted,
    rrm_run,
    psc_reference,
)

__all__ = [
    'project_policy',
    'project_matrix',
    'simplex_project_vector',
    'affine_project_vector',
    'RsgdConfig',
    'RunTrace',
    'rsgd_run',
    'recover_noises',
    'InnerResult',
    'FixedPointResult',
    'minimize_shifted',
    'rrm_run',
    'psc_reference',
]
