"""
Performative Control - Configuration Schema
Modèles pydantic du fichier YAML (clés inconnues refusées)
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator


DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent / "system.yaml"

# Matrice : listes imbriquées, {identity: s}, {zeros: true} ou {diag: [...]}
MatrixSpec = Union[List[List[float]], Dict[str, Any]]


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemSection(Section):
    A: MatrixSpec
    B: MatrixSpec
    K: MatrixSpec = {"zeros": True}
    T: int = Field(ge=2)
    H: int = Field(ge=1)
    W: Optional[float] = Field(default=None, gt=0)
    x0: Optional[List[float]] = None
    x0_bound: Optional[float] = Field(default=None, ge=0)
    sigma2: Optional[float] = Field(default=None, gt=0)
    kappa: float = Field(default=1.0, ge=1.0)
    gamma: float = Field(gt=0, lt=1)
    Q: Optional[MatrixSpec] = None
    L: Optional[MatrixSpec] = None
    d_x: Optional[int] = Field(default=None, ge=1)
    d_u: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def check_horizon(self):
        if not self.H < self.T:
            raise ValueError(f"H must be < T, got H={self.H}, T={self.T}")
        return self


class FeasibleSection(Section):
    kind: Literal["frobenius", "simplex"] = "frobenius"
    radius: Optional[float] = Field(default=None, gt=0)
    scale: float = Field(default=1.0, gt=0)
    width: Optional[int] = Field(default=None, ge=1)
    nonnegative: bool = True

    @model_validator(mode="after")
    def check_radius(self):
        if self.kind == "frobenius" and self.radius is None:
            raise ValueError("Frobenius feasible set needs a radius")
        return self


class PolicySection(Section):
    feasible_set: FeasibleSection
    init: MatrixSpec = {"zeros": True}


class NoiseSection(Section):
    kind: Literal["uniform", "discrete", "sign_cube", "zero"]
    lo: Optional[float] = None
    hi: Optional[float] = None
    atoms: Optional[List[List[float]]] = None
    probs: Optional[List[float]] = None
    scale: float = Field(default=1.0, gt=0)
    shifted_stack: bool = False


class PerturbationSection(Section):
    kind: Literal["null", "scaled_factor"] = "null"
    scales: Optional[Union[float, List[float]]] = None
    direction: Optional[MatrixSpec] = None
    factor: Optional[MatrixSpec] = None
    factors: Optional[List[MatrixSpec]] = None
    probs: Optional[List[float]] = None


class CostSection(Section):
    kind: Literal["quadratic"] = "quadratic"
    Q: MatrixSpec = {"identity": 1.0}
    R: MatrixSpec = {"identity": 1.0}


class PlanSection(Section):
    kind: Literal["auto", "diminishing", "constant"] = "auto"
    phi1: Optional[float] = Field(default=None, gt=0)
    phi2: Optional[float] = Field(default=None, ge=1)
    eta: Optional[float] = Field(default=None, gt=0)


class RsgdSection(Section):
    N: int = Field(default=1000, ge=1)
    plan: PlanSection = PlanSection()
    log_every: int = Field(default=1, ge=1)
    batch_size: int = Field(default=1, ge=1)
    enforce_plan: bool = True
    eval_samples: int = Field(default=0, ge=0)
    reference: bool = False


class RrmSection(Section):
    max_iters: int = Field(default=100, ge=1)
    tol: float = Field(default=1e-8, gt=0)
    inner_tol: Optional[float] = Field(default=None, gt=0)
    inner_budget: int = Field(default=200_000, ge=1)
    n_samples: int = Field(default=256, ge=1)


class StockSection(Section):
    L: int = Field(default=10, ge=1)
    T: int = Field(default=60, ge=2)
    r: float = 0.0
    vol_std: float = Field(default=0.2, gt=0)
    vol_clip: float = Field(default=0.6, gt=0)
    link: Literal["location", "sensitivity"] = "location"
    noise_lo: float = 0.0
    noise_hi: float = 1.0
    N: int = Field(default=1000, ge=1)
    eta: float = Field(default=0.01, gt=0)
    regime: Literal["general", "stable", "unstable"] = "general"
    transition_scale: Optional[float] = Field(default=None, gt=0)
    nonnegative: bool = True
    kappa: float = Field(default=1.0, ge=1.0)
    gamma: float = Field(default=0.1, gt=0, lt=1)
    eval_samples: int = Field(default=200, ge=0)
    log_every: int = Field(default=1, ge=1)
    batch_size: int = Field(default=1, ge=1)
    reference: Literal["rrm", "none"] = "rrm"
    reference_tol: float = Field(default=1e-4, gt=0)
    reference_samples: int = Field(default=256, ge=1)
    reference_iters: int = Field(default=50, ge=1)
    schedule: Literal["ascend", "descend", "random", "file"] = "ascend"
    schedule_file: Optional[str] = None


class OutputSection(Section):
    dir: str = "results"


class LoggingSection(Section):
    level: Literal["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"] = "INFO"
    file: Optional[str] = None
    rotation: str = "10 MB"
    retention: str = "7 days"
    format: str = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}"


class Settings(Section):
    """Document de configuration complet"""
    seed: int = Field(default=0, ge=0)
    system: Optional[SystemSection] = None
    policy: Optional[PolicySection] = None
    noise: Optional[NoiseSection] = None
    perturbation: PerturbationSection = PerturbationSection()
    cost: CostSection = CostSection()
    rsgd: RsgdSection = RsgdSection()
    rrm: RrmSection = RrmSection()
    stock: StockSection = StockSection()
    output: OutputSection = OutputSection()
    logging: LoggingSection = LoggingSection()

    @property
    def has_system(self) -> bool:
        return self.system is not None and self.policy is not None and self.noise is not None


def parse_settings(document: Optional[Dict[str, Any]]) -> Settings:
    """Valide un document déjà chargé"""
    from core.interfaces import ConfigException

    try:
        return Settings.model_validate(document or {})
    except ValidationError as e:
        logger.error(f"❌ Invalid configuration: {e.error_count()} error(s)")
        raise ConfigException(str(e)) from e


def load_settings(path: Optional[Union[str, Path]] = None) -> Settings:
    """
    Charge et valide le fichier YAML

    Args:
        path: chemin du fichier (config/system.yaml par défaut)

    Raises:
        ConfigException: fichier absent, YAML invalide ou clé inconnue
    """
    from core.interfaces import ConfigException

    path = Path(path) if path is not None else DEFAULT_CONFIG_PATH
    if not path.exists():
        raise ConfigException(f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigException(f"Invalid YAML in {path}: {e}") from e
    if document is not None and not isinstance(document, dict):
        raise ConfigException(f"{path} must contain a mapping at top level")
    settings = parse_settings(document)
    logger.info(f"Configuration loaded from {path}")
    return settings
