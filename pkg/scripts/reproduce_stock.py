#!/usr/bin/env python3
"""
Performative Control - Stock Experiment Reproduction
Script pour exécuter les trois régimes × trois calendriers et agréger les traces
"""

import asyncio
import sys
from pathlib import Path
from typing import Dict, List, Optional

# Ajouter le répertoire parent au path pour les imports
sys.path.append(str(Path(__file__).parent.parent))

import numpy as np
import typer
from loguru import logger
from rich.console import Console
from rich.table import Table

from core.engine import ExperimentEngine
from core.experiments.io import TraceRow, write_metadata, write_table_csv, write_trace_csv
from core.experiments.runner import ExperimentOutput
from core.experiments.schedules import ORDERS, paper_schedules
from core.experiments.stock import LOCATION, REGIME_SCALES, VOLATILITY_LINKS, StockMarketConfig


def mean_trace(traces: List[List[TraceRow]], attribute: str) -> List[Optional[float]]:
    """Moyenne par itération sur les réplicats (traces tronquées à la plus courte)"""
    length = min(len(rows) for rows in traces)
    values = np.array([
        [np.nan if getattr(row, attribute) is None else getattr(row, attribute) for row in rows[:length]]
        for rows in traces
    ], dtype=float)
    means = []
    for column in values.T:
        finite = column[~np.isnan(column)]
        means.append(float(finite.mean()) if finite.size else None)
    return means


async def run_regime(
    engine: ExperimentEngine,
    cfg: StockMarketConfig,
    seeds: List[int],
    out_dir: Path,
) -> Dict[str, List[ExperimentOutput]]:
    """Tous les calendriers d'un régime, un réplicat par graine"""
    schedules = paper_schedules(T=cfg.T, seed=cfg.seed)
    regime_dir = out_dir / cfg.regime
    results: Dict[str, List[ExperimentOutput]] = {}
    for order in ORDERS:
        outputs = await engine.run_replicates(cfg, schedules[order], seeds)
        for output in outputs:
            path = write_trace_csv(regime_dir / f"stock_{order}_seed{output.metadata['seed']}.csv", output.rows)
            write_metadata(path, output.metadata)
        results[order] = outputs

    # Courbes moyennes : PS error et coût espéré par calendrier
    header = ["n"]
    columns = []
    for order in ORDERS:
        traces = [o.rows for o in results[order]]
        header += [f"ps_error_{order}", f"expected_cost_{order}"]
        columns += [mean_trace(traces, "ps_error"), mean_trace(traces, "expected_cost")]
    length = min(len(column) for column in columns)
    n_values = [row.n for row in results[ORDERS[0]][0].rows[:length]]
    write_table_csv(
        regime_dir / "summary.csv",
        header,
        ([n] + [column[k] for column in columns] for k, n in enumerate(n_values)),
    )
    return results


async def reproduce(
    reduced: bool,
    replicates: int,
    iterations: int,
    seed: int,
    jobs: int,
    out: Path,
    link: str = LOCATION,
) -> int:
    """Reproduit les courbes PS error / coût espéré des trois régimes"""
    seeds = [seed + k for k in range(replicates)]
    table = Table(title="Stock experiment (final iterate, replicate mean)")
    for column in ("regime", "schedule", "ps_error", "expected_cost", "diverged"):
        table.add_column(column)

    logger.info(f"🚀 Stock reproduction: {len(REGIME_SCALES)} regimes, {replicates} replicate(s)")
    try:
        async with ExperimentEngine(jobs) as engine:
            for regime in REGIME_SCALES:
                if reduced:
                    cfg = StockMarketConfig.reduced(regime=regime, N=iterations, seed=seed, link=link)
                else:
                    cfg = StockMarketConfig(regime=regime, N=iterations, seed=seed, link=link)
                results = await run_regime(engine, cfg, seeds, out)
                for order, outputs in results.items():
                    finals = [o.rows[-1] for o in outputs]
                    ps = [r.ps_error for r in finals if r.ps_error is not None]
                    costs = [r.expected_cost for r in finals if r.expected_cost is not None]
                    table.add_row(
                        regime,
                        order,
                        f"{np.mean(ps):.4g}" if ps else "-",
                        f"{np.mean(costs):.4g}" if costs else "-",
                        str(sum(o.diverged for o in outputs)),
                    )
    except Exception as e:
        logger.error(f"❌ Reproduction failed: {e}")
        return 1

    Console().print(table)
    logger.success(f"✅ Traces written under {out}")
    return 0


def main(
    reduced: bool = typer.Option(False, "--reduced", help="L=3, T=12 instead of L=10, T=60"),
    replicates: int = typer.Option(5, "--replicates", min=1),
    iterations: int = typer.Option(1000, "--iterations", "-N", min=1),
    seed: int = typer.Option(0, "--seed", min=0),
    jobs: int = typer.Option(4, "--jobs", min=1),
    out: Path = typer.Option(Path("results/stock"), "--out"),
    link: str = typer.Option(LOCATION, "--link", help=f"Volatility link, one of {VOLATILITY_LINKS}"),
):
    """Fonction principale"""
    exit_code = asyncio.run(reproduce(reduced, replicates, iterations, seed, jobs, out, link))
    sys.exit(exit_code)


if __name__ == "__main__":
    typer.run(main)
