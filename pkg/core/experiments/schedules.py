"""
Performative Control - Sensitivity Schedules
Calendriers ε_t croissant, décroissant et aléatoire (fichiers de données épinglés)
"""

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from loguru import logger

from core.interfaces import ConfigException


SCHEDULE_DIR = Path(__file__).resolve().parents[2] / "config" / "schedules"
SCHEDULE_LENGTH = 60

ASCEND = "ascend"
DESCEND = "descend"
RANDOM = "random"
EXPLICIT = "explicit"
ORDERS = (ASCEND, DESCEND, RANDOM)

SCHEDULE_CHECKSUMS: Dict[str, str] = {
    ASCEND: "0be87d53f75d3b73a616ee0da4ed1f759a5dcb43ac53fa48b0bad0f1111a0e8f",
    DESCEND: "3e07bf7d542fde8238520f29131b9c9b5c1e6273c65cf2a86922a301b115ed41",
    RANDOM: "ce0361209a6f1a0d0d76fedd0f79f19ba7a54197f1fafc389a0a1759c5df18e1",
}


@dataclass(frozen=True)
class SensitivitySchedule:
    """Calendrier ε_0..ε_{T−1} et son ordre (ascend, descend, random, explicit)"""
    order: str
    values: np.ndarray
    seed: Optional[int] = None
    synthetic: bool = False

    def __post_init__(self):
        if self.order not in ORDERS + (EXPLICIT,):
            raise ConfigException(f"Unknown schedule order '{self.order}'")
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ConfigException("Schedule must be a non-empty 1-D sequence")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ConfigException("Sensitivities must be finite and non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def T(self) -> int:
        return len(self.values)

    @property
    def name(self) -> str:
        return self.order

    @classmethod
    def explicit(cls, values) -> "SensitivitySchedule":
        return cls(order=EXPLICIT, values=np.array(values, dtype=float))


def _asset_path(order: str) -> Path:
    return SCHEDULE_DIR / f"{order}.txt"


def schedule_strings(order: str) -> List[str]:
    """
    Valeurs brutes (chaînes décimales) d'un fichier de calendrier

    Raises:
        ConfigException: ordre inconnu, fichier absent ou somme de contrôle invalide
    """
    if order not in SCHEDULE_CHECKSUMS:
        raise ConfigException(f"No schedule asset for order '{order}'")
    path = _asset_path(order)
    if not path.exists():
        raise ConfigException(f"Schedule asset missing: {path}")
    raw = path.read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != SCHEDULE_CHECKSUMS[order]:
        logger.error(f"❌ Checksum mismatch for {path}: {digest}")
        raise ConfigException(f"Schedule asset {path.name} does not match its checksum")
    lines = [line.strip() for line in raw.decode("ascii").splitlines() if line.strip()]
    if len(lines) != SCHEDULE_LENGTH:
        raise ConfigException(f"Schedule asset {path.name} has {len(lines)} values, expected {SCHEDULE_LENGTH}")
    return lines


def read_schedule_file(path: Union[str, Path]) -> SensitivitySchedule:
    """Calendrier explicite : une valeur décimale par ligne"""
    path = Path(path)
    if not path.exists():
        raise ConfigException(f"Schedule file not found: {path}")
    try:
        values = [float(line) for line in path.read_text().splitlines() if line.strip()]
    except ValueError as e:
        raise ConfigException(f"Invalid schedule file {path}: {e}") from e
    return SensitivitySchedule.explicit(values)


def _synthesize(T: int, seed: int) -> Dict[str, SensitivitySchedule]:
    base = np.array([float(v) for v in schedule_strings(ASCEND)])
    ascend = np.geomspace(base.min(), base.max(), T)
    permutation = np.random.default_rng(seed).permutation(T)
    logger.warning(f"⚠️ Synthetic schedules for T={T} (geometric interpolation of the T=60 range)")
    return {
        ASCEND: SensitivitySchedule(ASCEND, ascend, synthetic=True),
        DESCEND: SensitivitySchedule(DESCEND, ascend[::-1].copy(), synthetic=True),
        RANDOM: SensitivitySchedule(RANDOM, ascend[permutation], seed=seed, synthetic=True),
    }


def paper_schedules(T: int = SCHEDULE_LENGTH, seed: int = 0) -> Dict[str, SensitivitySchedule]:
    """
    Les trois calendriers de sensibilité

    Pour T = 60, les valeurs proviennent des fichiers de données épinglés ;
    sinon elles sont synthétisées par interpolation géométrique entre les
    extrêmes (permutation aléatoire de graine seed pour 'random').

    Args:
        T: horizon
        seed: graine de la permutation synthétique

    Returns:
        {'ascend': …, 'descend': …, 'random': …}
    """
    if T < 1:
        raise ConfigException(f"Schedule horizon must be >= 1, got {T}")
    if T != SCHEDULE_LENGTH:
        return _synthesize(T, seed)
    return {
        order: SensitivitySchedule(order, np.array([float(v) for v in schedule_strings(order)]))
        for order in ORDERS
    }


def resolve_schedule(
    name: str,
    T: int,
    seed: int = 0,
    path: Optional[Union[str, Path]] = None,
) -> SensitivitySchedule:
    """Calendrier nommé (ascend, descend, random) ou fichier explicite ('file')"""
    if name == "file":
        if path is None:
            raise ConfigException("Schedule 'file' requires a schedule path")
        schedule = read_schedule_file(path)
        if schedule.T != T:
            raise ConfigException(f"Schedule file has {schedule.T} values, T={T}")
        return schedule
    if name not in ORDERS:
        raise ConfigException(f"Unknown schedule '{name}', expected one of {ORDERS + ('file',)}")
    return paper_schedules(T, seed)[name]
