"""
Performative Control - Experiments
Instance boursière, calendriers de sensibilité, orchestration et fichiers de résultats
"""

from core.experiments.schedules import (
    SensitivitySchedule,
    paper_schedules,
    resolve_schedule,
    read_schedule_file,
    schedule_strings,
)
from core.experiments.stock import (
    StockMarketConfig,
    StockVolatilityPerturbation,
    build_stock_instance,
    sample_volatility_perturbation,
    random_portfolio,
)
from core.experiments.runner import ExperimentOutput, run_experiment, compute_reference
from core.experiments.io import (
    TraceRow,
    write_trace_csv,
    read_trace_csv,
    write_table_csv,
    write_metadata,
    read_metadata,
    config_hash,
)

__all__ = [
    'SensitivitySchedule',
    'paper_schedules',
    'resolve_schedule',
    'read_schedule_file',
    'schedule_strings',
    'StockMarketConfig',
    'StockVolatilityPerturbation',
    'build_stock_instance',
    'sample_volatility_perturbation',
    'random_portfolio',
    'ExperimentOutput',
    'run_experiment',
    'compute_reference',
    'TraceRow',
    'write_trace_csv',
    'read_trace_csv',
    'write_table_csv',
    'write_metadata',
    'read_metadata',
    'config_hash',
]
