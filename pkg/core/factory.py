"""
Performative Control - Factory Pattern
Factory pour construire une instance complète à partir de la configuration YAML
"""

from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger

from config.schema import (
    CostSection,
    FeasibleSection,
    MatrixSpec,
    NoiseSection,
    PerturbationSection,
    Settings,
    SystemSection,
    load_settings,
    parse_settings,
)
from core.interfaces import (
    FeasibleSet,
    FrobeniusBall,
    ICostModel,
    INoiseModel,
    InstanceBundle,
    IPerturbationMap,
    Policy,
    RowSimplex,
    SystemConfig,
    ConfigException,
    DimensionException,
)
from core.dynamics.noise import DiscreteNoise, UniformBoxNoise, ZeroNoise, check_noise_dimension
from core.dynamics.perturbation import NullPerturbation, ScaledFactorPerturbation
from core.dynamics.stability import StabilityCertificate, check_strong_stability
from core.cost.models import QuadraticCost
from core.solvers.projection import project_policy
from core.experiments.schedules import SensitivitySchedule, resolve_schedule
from core.experiments.stock import StockMarketConfig


def resolve_matrix(spec: MatrixSpec, shape: Tuple[int, int], name: str) -> np.ndarray:
    """
    Matrice depuis sa spécification YAML

    Formes acceptées : listes imbriquées, {identity: s}, {zeros: true},
    {diag: [...]}.
    """
    if isinstance(spec, dict):
        if len(spec) != 1:
            raise ConfigException(f"{name}: matrix shorthand needs exactly one key, got {sorted(spec)}")
        key, value = next(iter(spec.items()))
        if key == "identity":
            if shape[0] != shape[1]:
                raise DimensionException(f"{name}: identity shorthand needs a square shape, got {shape}")
            return float(value) * np.eye(shape[0])
        if key == "zeros":
            return np.zeros(shape)
        if key == "diag":
            diagonal = np.array(value, dtype=float)
            if shape[0] != shape[1] or diagonal.shape != (shape[0],):
                raise DimensionException(f"{name}: diag needs {shape[0]} entries")
            return np.diag(diagonal)
        raise ConfigException(f"{name}: unknown matrix shorthand '{key}'")
    matrix = np.array(spec, dtype=float)
    if matrix.shape != shape:
        raise DimensionException(f"{name} must have shape {shape}, got {matrix.shape}")
    return matrix


def _explicit_rows(spec: MatrixSpec) -> Optional[Tuple[int, int]]:
    if isinstance(spec, dict):
        return None
    matrix = np.array(spec, dtype=float)
    return matrix.shape if matrix.ndim == 2 else None


class PerformativeFactory:
    """
    Factory pour créer une instance (système, coût, perturbation, bruit)
    """

    @staticmethod
    def create_instance(config: Union[str, Path, Dict[str, Any], Settings, None] = None) -> InstanceBundle:
        """
        Crée une instance complète

        Args:
            config: chemin YAML, document déjà chargé ou Settings

        Returns:
            InstanceBundle
        """
        logger.info("Factory: Creating performative instance...")
        settings = PerformativeFactory._load_config(config)
        if not settings.has_system:
            raise ConfigException("Sections 'system', 'policy' and 'noise' are required")

        # 1. Dimensions
        d_x, d_u = PerformativeFactory._dimensions(settings.system)

        # 2. Bruit
        noise = PerformativeFactory._create_noise(settings.noise, d_x)

        # 3. Système
        system, x0 = PerformativeFactory._create_system(settings.system, d_x, d_u, noise)

        # 4. Coût
        cost = PerformativeFactory._create_cost(settings.cost, d_x, d_u)

        # 5. Perturbations
        perturbation = PerturbationFactory.create(settings.perturbation, system)

        # 6. Ensemble admissible
        feasible_set = PerformativeFactory._create_feasible_set(settings.policy.feasible_set)

        logger.success(f"✅ Factory: instance created (d_x={d_x}, d_u={d_u}, T={system.T}, H={system.H})")
        return InstanceBundle(
            config=system,
            cost=cost,
            perturbation=perturbation,
            noise=noise,
            x0=x0,
            feasible_set=feasible_set,
        )

    @staticmethod
    def _load_config(config: Union[str, Path, Dict[str, Any], Settings, None]) -> Settings:
        """Charge la configuration (YAML, dict ou Settings)"""
        if isinstance(config, Settings):
            return config
        if isinstance(config, dict):
            return parse_settings(config)
        return load_settings(config)

    @staticmethod
    def _dimensions(section: SystemSection) -> Tuple[int, int]:
        shape_A = _explicit_rows(section.A)
        shape_B = _explicit_rows(section.B)
        d_x = section.d_x or (shape_A[0] if shape_A else None) or (shape_B[0] if shape_B else None)
        if d_x is None:
            raise ConfigException("State dimension unknown: give A or B explicitly, or system.d_x")
        d_u = section.d_u or (shape_B[1] if shape_B else d_x)
        return d_x, d_u

    @staticmethod
    def _create_noise(section: NoiseSection, d_x: int) -> INoiseModel:
        """Crée le modèle de bruit"""
        if section.kind == "uniform":
            if section.lo is None or section.hi is None:
                raise ConfigException("Uniform noise needs lo and hi")
            if section.shifted_stack:
                if d_x % 2:
                    raise DimensionException("Stacked uniform noise needs an even state dimension")
                noise = UniformBoxNoise(section.lo, section.hi, d_x // 2, shifted_stack=True)
            else:
                noise = UniformBoxNoise(section.lo, section.hi, d_x)
        elif section.kind == "discrete":
            if section.atoms is None:
                raise ConfigException("Discrete noise needs atoms")
            noise = DiscreteNoise(section.atoms, section.probs)
        elif section.kind == "sign_cube":
            noise = DiscreteNoise.sign_cube(d_x, section.scale)
        else:
            noise = ZeroNoise(d_x)
        check_noise_dimension(noise, d_x)
        return noise

    @staticmethod
    def _create_system(
        section: SystemSection,
        d_x: int,
        d_u: int,
        noise: INoiseModel,
    ) -> Tuple[SystemConfig, np.ndarray]:
        """Crée SystemConfig et l'état initial"""
        x0 = np.zeros(d_x) if section.x0 is None else np.array(section.x0, dtype=float)
        if x0.shape != (d_x,):
            raise DimensionException(f"x0 must have length {d_x}, got {x0.shape}")
        sigma2 = section.sigma2 if section.sigma2 is not None else noise.covariance_lower_bound()
        if not sigma2 > 0:
            raise ConfigException("Noise covariance floor is 0: set system.sigma2 explicitly")
        x0_bound = section.x0_bound if section.x0_bound is not None else float(np.linalg.norm(x0))
        system = SystemConfig(
            A=resolve_matrix(section.A, (d_x, d_x), "A"),
            B=resolve_matrix(section.B, (d_x, d_u), "B"),
            K=resolve_matrix(section.K, (d_u, d_x), "K"),
            T=section.T,
            H=section.H,
            W=section.W if section.W is not None else noise.norm_bound(),
            x0_bound=x0_bound,
            sigma2=sigma2,
            kappa=section.kappa,
            gamma=section.gamma,
        )
        return system, x0

    @staticmethod
    def _create_cost(section: CostSection, d_x: int, d_u: int) -> ICostModel:
        """Crée le coût quadratique"""
        return QuadraticCost(
            resolve_matrix(section.Q, (d_x, d_x), "cost.Q"),
            resolve_matrix(section.R, (d_u, d_u), "cost.R"),
        )

    @staticmethod
    def _create_feasible_set(section: FeasibleSection) -> FeasibleSet:
        """Crée l'ensemble admissible"""
        if section.kind == "frobenius":
            return FrobeniusBall(radius=section.radius)
        return RowSimplex(scale=section.scale, width=section.width, nonnegative=section.nonnegative)

    @staticmethod
    def create_initial_policy(settings: Settings, instance: InstanceBundle) -> Policy:
        """M_0 de la configuration, projetée sur l'ensemble admissible"""
        shape = instance.config.policy_shape
        matrix = resolve_matrix(settings.policy.init, shape, "policy.init")
        policy = project_policy(matrix, instance.feasible_set)
        if not np.array_equal(policy.matrix, matrix):
            logger.warning("⚠️ policy.init was not feasible and has been projected")
        return policy

    @staticmethod
    def create_certificate(settings: Settings, system: SystemConfig) -> StabilityCertificate:
        """Certificat de stabilité forte (factorisation fournie ou construite)"""
        section = settings.system
        if (section.Q is None) != (section.L is None):
            raise ConfigException("system.Q and system.L must be given together")
        if section.Q is None:
            return check_strong_stability(system)
        shape = (system.d_x, system.d_x)
        return check_strong_stability(
            system,
            resolve_matrix(section.Q, shape, "system.Q"),
            resolve_matrix(section.L, shape, "system.L"),
        )

    @staticmethod
    def create_stock_config(settings: Settings, seed: Optional[int] = None) -> StockMarketConfig:
        """StockMarketConfig depuis la section 'stock'"""
        fields = settings.stock.model_dump(exclude={"schedule", "schedule_file"})
        fields["seed"] = settings.seed if seed is None else seed
        return StockMarketConfig(**fields)

    @staticmethod
    def create_schedule(settings: Settings, cfg: StockMarketConfig, name: Optional[str] = None) -> SensitivitySchedule:
        """Calendrier ε_t désigné par la section 'stock'"""
        return resolve_schedule(
            name or settings.stock.schedule, cfg.T, seed=cfg.seed, path=settings.stock.schedule_file
        )


class PerturbationFactory:
    """Familles de perturbations déclarées dans la section 'perturbation'"""

    @staticmethod
    def create(section: PerturbationSection, system: SystemConfig) -> IPerturbationMap:
        if section.kind == "null":
            return NullPerturbation(system.T, system.d_x)
        return PerturbationFactory._create_scaled_factor(section, system)

    @staticmethod
    def _create_scaled_factor(section: PerturbationSection, system: SystemConfig) -> ScaledFactorPerturbation:
        if section.scales is None:
            raise ConfigException("scaled_factor perturbation needs scales")
        scales = (
            np.full(system.T, float(section.scales))
            if isinstance(section.scales, (int, float))
            else np.array(section.scales, dtype=float)
        )
        if scales.shape != (system.T,):
            raise DimensionException(f"perturbation.scales must have length T={system.T}")
        shape = system.policy_shape
        direction = (
            np.ones(shape)
            if section.direction is None
            else resolve_matrix(section.direction, shape, "perturbation.direction")
        )
        square = (system.d_x, system.d_x)
        if section.factors is not None:
            factors = [resolve_matrix(f, square, "perturbation.factors") for f in section.factors]
            return ScaledFactorPerturbation(scales, direction, factors, section.probs)
        if section.factor is None:
            raise ConfigException("scaled_factor perturbation needs factor or factors")
        return ScaledFactorPerturbation.symmetric(
            scales, direction, resolve_matrix(section.factor, square, "perturbation.factor")
        )


# Fonction helper pour usage simple
def create_instance(config: Union[str, Path, Dict[str, Any], Settings, None] = None) -> InstanceBundle:
    """
    Helper pour créer rapidement une instance

    Usage:
        from core.factory import create_instance
        instance = create_instance("config/stable.yaml")
    """
    return PerformativeFactory.create_instance(config)
