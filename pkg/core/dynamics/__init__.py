"""
Performative Control - Dynamics
Système linéaire, bruits, perturbations performatives et trajectoires
"""

from core.dynamics.noise import UniformBoxNoise, DiscreteNoise, ZeroNoise
from core.dynamics.perturbation import (
    NullPerturbation,
    ScaledFactorPerturbation,
    FrozenPerturbation,
)
from core.dynamics.trajectory import (
    TrajectoryRecord,
    disturbance_window,
    control_action,
    step,
    simulate_trajectory,
    replay_trajectory,
    sample_realizations,
    closed_form_state,
    policy_matrix,
)
from core.dynamics.stability import (
    StabilityCertificate,
    alpha_beta,
    alpha_beta_schedule,
    state_norm_bound,
    check_strong_stability,
    CERTIFIED,
    DECLARED_ONLY,
    NOT_CERTIFIED,
)

__all__ = [
    'UniformBoxNoise',
    'DiscreteNoise',
    'ZeroNoise',
    'NullPerturbation',
    'ScaledFactorPerturbation',
    'FrozenPerturbation',
    'TrajectoryRecord',
    'disturbance_window',
    'control_action',
    'step',
    'simulate_trajectory',
    'replay_trajectory',
    'sample_realizations',
    'closed_form_state',
    'policy_matrix',
    'StabilityCertificate',
    'alpha_beta',
    'alpha_beta_schedule',
    'state_norm_bound',
    'check_strong_stability',
    'CERTIFIED',
    'DECLARED_ONLY',
    'NOT_CERTIFIED',
]
