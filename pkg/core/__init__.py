"""
Performative Control - Core Package
API publique : instances, simulation, analyse et solveurs
"""

# Public API
from core.factory import create_instance, PerformativeFactory
from core.engine import ExperimentEngine
from core.interfaces import (
    # Data classes
    SystemConfig,
    Policy,
    SeedPair,
    FrobeniusBall,
    RowSimplex,
    RegimeHint,
    InstanceBundle,

    # Interfaces
    INoiseModel,
    IPerturbationMap,
    ICostModel,

    # Exceptions
    PerformativeException,
    ConfigException,
    DimensionException,
    SamplerException,
    StabilityException,
    BudgetExceededException,
    ConditionException,
    StepSizeException,
    DivergenceException,
    SolverException,
)

# Version
__version__ = "1.0.0"

# Exports
__all__ = [
    # Factory (usage principal)
    "create_instance",
    "PerformativeFactory",

    # Orchestration
    "ExperimentEngine",

    # Data classes
    "SystemConfig",
    "Policy",
    "SeedPair",
    "FrobeniusBall",
    "RowSimplex",
    "RegimeHint",
    "InstanceBundle",

    # Interfaces (pour extensibilité)
    "INoiseModel",
    "IPerturbationMap",
    "ICostModel",

    # Exceptions
    "PerformativeException",
    "ConfigException",
    "DimensionException",
    "SamplerException",
    "StabilityException",
    "BudgetExceededException",
    "ConditionException",
    "StepSizeException",
    "DivergenceException",
    "SolverException",
]
