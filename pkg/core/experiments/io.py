"""
Performative Control - Result Files
Traces CSV (17 chiffres significatifs) et fichiers de métadonnées YAML
"""

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import yaml
from loguru import logger

from core.interfaces import ConfigException


TRACE_COLUMNS = ("n", "ps_error", "expected_cost", "cost_std_error")
FIXED_POINT_COLUMNS = ("n", "residual", "reference_gap", "inner_converged")


@dataclass(frozen=True)
class TraceRow:
    """Une ligne de trace ; None encode une valeur absente"""
    n: int
    ps_error: Optional[float]
    expected_cost: Optional[float]
    cost_std_error: Optional[float]


def format_float(value: Optional[float]) -> str:
    """17 chiffres significatifs ; champ vide pour une valeur absente ou NaN"""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return format(float(value), ".17g")


def parse_float(field: str) -> Optional[float]:
    return None if field == "" else float(field)


def _writer(handle):
    return csv.writer(handle, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)


def write_trace_csv(path: Union[str, Path], rows: Sequence[TraceRow]) -> Path:
    """Écrit une trace (n, ps_error, expected_cost, cost_std_error)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = _writer(handle)
        writer.writerow(TRACE_COLUMNS)
        for row in rows:
            writer.writerow([
                str(row.n),
                format_float(row.ps_error),
                format_float(row.expected_cost),
                format_float(row.cost_std_error),
            ])
    logger.debug(f"Trace written to {path} ({len(rows)} rows)")
    return path


def read_trace_csv(path: Union[str, Path]) -> List[TraceRow]:
    """Relit une trace écrite par write_trace_csv"""
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise ConfigException(f"{path} is not a trace file (header {header})")
        return [
            TraceRow(
                n=int(fields[0]),
                ps_error=parse_float(fields[1]),
                expected_cost=parse_float(fields[2]),
                cost_std_error=parse_float(fields[3]),
            )
            for fields in reader
        ]


def write_table_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Table générique (trajectoires, itérations RRM) au même format numérique"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = _writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                format_float(v) if isinstance(v, (float, np.floating)) or v is None else str(v)
                for v in row
            ])
    return path


def _plain(value: Any) -> Any:
    """Convertit numpy et tuples en types YAML simples"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return None if math.isnan(value) else value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def config_hash(payload: Dict[str, Any]) -> str:
    """Empreinte SHA-256 d'une configuration (JSON canonique)"""
    canonical = json.dumps(_plain(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def metadata_path(csv_path: Union[str, Path]) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.yaml")


def write_yaml(path: Union[str, Path], document: Dict[str, Any]) -> Path:
    """Document YAML (clés triées, types simples)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        yaml.safe_dump(_plain(document), handle, sort_keys=True, allow_unicode=True)
    return path


def write_metadata(csv_path: Union[str, Path], metadata: Dict[str, Any]) -> Path:
    """Fichier compagnon <trace>.meta.yaml"""
    return write_yaml(metadata_path(csv_path), metadata)


def read_metadata(csv_path: Union[str, Path]) -> Dict[str, Any]:
    path = metadata_path(csv_path)
    with path.open("r", encoding="utf-8") as handle:
        return yaml.safe_load(handle) or {}
