"""
Performative Control - Cost
Coûts par étape, gradients de politique et espérances décalées C_T(M; M')
"""

from core.cost.models import QuadraticCost, StockRiskCost, stage_cost, stage_grads
from core.cost.gradient import (
    grad_policy_stage,
    grad_total,
    grad_total_from_realizations,
    total_cost,
    fd_gradient,
)
from core.cost.expectation import (
    ShiftedExpectation,
    RealizationSet,
    enumerate_realizations,
    sample_realization_set,
    batch_rollout,
    batch_total_costs,
    batch_gradients,
    saa_objective,
    expected_cost_exact,
    expected_cost_mc,
    expected_gradient_exact,
    expected_gradient_mc,
    ENUMERATION,
    MONTE_CARLO,
)

__all__ = [
    'QuadraticCost',
    'StockRiskCost',
    'stage_cost',
    'stage_grads',
    'grad_policy_stage',
    'grad_total',
    'grad_total_from_realizations',
    'total_cost',
    'fd_gradient',
    'ShiftedExpectation',
    'RealizationSet',
    'enumerate_realizations',
    'sample_realization_set',
    'batch_rollout',
    'batch_total_costs',
    'batch_gradients',
    'saa_objective',
    'expected_cost_exact',
    'expected_cost_mc',
    'expected_gradient_exact',
    'expected_gradient_mc',
    'ENUMERATION',
    'MONTE_CARLO',
]
