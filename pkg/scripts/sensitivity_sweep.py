#!/usr/bin/env python3
"""
Performative Control - Sensitivity Sweep
Script pour situer le seuil d'existence quand les sensibilités ε_t, ξ_t sont multipliées
"""

import sys
from pathlib import Path
from typing import List, Optional

# Ajouter le répertoire parent au path pour les imports
sys.path.append(str(Path(__file__).parent.parent))

import numpy as np
import typer
from loguru import logger
from rich.console import Console
from rich.table import Table

from core.interfaces import feasible_radius, ConditionException, PerformativeException
from core.factory import create_instance
from core.analysis.constants import SensitivityProfile, compute_constants
from core.analysis.conditions import check_psc_condition, rrm_iteration_bound
from core.analysis.step_sizes import find_diminishing_plan
from core.experiments.io import write_table_csv


COLUMNS = ["factor", "sum_eps", "lhs", "rhs", "holds", "contraction_ratio", "rrm_iterations", "plan_valid"]


def sweep(config_path: Path, factors: np.ndarray, rho: float) -> List[list]:
    """Une ligne par facteur multiplicatif des sensibilités"""
    instance = create_instance(config_path)
    config = instance.config
    eps = instance.perturbation.eps[: config.T]
    xi = instance.perturbation.xi[: config.T]
    M_bar = feasible_radius(instance.feasible_set, config.policy_shape)

    rows = []
    for factor in factors:
        bundle = compute_constants(
            config,
            instance.cost.mu,
            instance.cost.sigma_s,
            instance.cost.G,
            SensitivityProfile(eps=factor * eps, xi=factor * xi),
            M_bar=M_bar,
        )
        report = check_psc_condition(bundle)
        try:
            iterations: Optional[int] = rrm_iteration_bound(bundle, 1.0, rho)
        except ConditionException:
            iterations = None
        rows.append([
            float(factor),
            float(np.sum(bundle.eps)),
            report.lhs,
            report.rhs,
            str(report.holds).lower(),
            report.contraction_ratio,
            "" if iterations is None else iterations,
            str(find_diminishing_plan(bundle).valid).lower(),
        ])
    return rows


def main(
    config: Path = typer.Option(Path("config/stable.yaml"), "--config"),
    low: float = typer.Option(-2.0, "--low", help="log10 of the smallest factor"),
    high: float = typer.Option(8.0, "--high", help="log10 of the largest factor"),
    points: int = typer.Option(21, "--points", min=2),
    rho: float = typer.Option(1e-6, "--rho", help="Target RRM gap ratio"),
    out: Path = typer.Option(Path("results/sensitivity_sweep.csv"), "--out"),
):
    """Fonction principale"""
    logger.info(f"🚀 Sensitivity sweep on {config} ({points} factors)")
    try:
        rows = sweep(config, np.logspace(low, high, points), rho)
    except PerformativeException as e:
        logger.error(f"❌ Sweep failed: {e}")
        sys.exit(1)

    write_table_csv(out, COLUMNS, rows)
    table = Table(title="Existence condition vs sensitivity scale")
    for column in ("factor", "lhs", "rhs", "holds", "rrm_iterations"):
        table.add_column(column)
    for row in rows:
        table.add_row(f"{row[0]:.3g}", f"{row[2]:.4g}", f"{row[3]:.4g}", row[4], str(row[6]))
    Console().print(table)

    failing = [row[0] for row in rows if row[4] == "false"]
    if failing:
        logger.info(f"Condition first fails at factor {failing[0]:.3g}")
    logger.success(f"✅ Sweep written to {out}")


if __name__ == "__main__":
    typer.run(main)
