"""
Performative Control - Analysis
Constantes de sensibilité, conditions d'existence, plans de pas et bornes d'erreur
"""

from core.analysis.constants import (
    SensitivityProfile,
    ConstantsBundle,
    compute_constants,
    condition_contributions,
    mu_bar,
    mu_tilde,
)
from core.analysis.conditions import (
    ConditionReport,
    check_psc_condition,
    rrm_iteration_bound,
    stable_case_threshold,
    unstable_case_requirement,
    unstable_case_schedule,
)
from core.analysis.step_sizes import (
    StepSizePlan,
    plan_diminishing_steps,
    find_diminishing_plan,
    validate_step_sizes_general,
    plan_constant_steps,
    sup_step_bound,
    theorem1_error_bound,
    general_error_bound,
    DIMINISHING,
    CONSTANT,
    CUSTOM,
)

__all__ = [
    'SensitivityProfile',
    'ConstantsBundle',
    'compute_constants',
    'condition_contributions',
    'mu_bar',
    'mu_tilde',
    'ConditionReport',
    'check_psc_condition',
    'rrm_iteration_bound',
    'stable_case_threshold',
    'unstable_case_requirement',
    'unstable_case_schedule',
    'StepSizePlan',
    'plan_diminishing_steps',
    'find_diminishing_plan',
    'validate_step_sizes_general',
    'plan_constant_steps',
    'sup_step_bound',
    'theorem1_error_bound',
    'general_error_bound',
    'DIMINISHING',
    'CONSTANT',
    'CUSTOM',
]
