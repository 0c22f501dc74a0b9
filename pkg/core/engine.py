"""
Performative Control - Experiment Engine
Exécutions indépendantes (réplicats, calendriers) en parallèle
"""

import asyncio
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Dict, List, Optional, Sequence

from loguru import logger

from core.interfaces import ConfigException
from core.experiments.runner import ExperimentOutput, ReferenceSource, run_experiment
from core.experiments.schedules import SensitivitySchedule
from core.experiments.stock import StockMarketConfig


class ExperimentEngine:
    """
    Moteur d'expériences

    Chaque exécution est séquentielle ; les exécutions indépendantes partent
    dans un pool de threads avec des graines distinctes. Les résultats sont
    rendus dans l'ordre des demandes, quel que soit l'ordre d'achèvement.
    """

    def __init__(self, jobs: int = 1):
        if jobs < 1:
            raise ConfigException(f"jobs must be >= 1, got {jobs}")
        self.jobs = jobs
        self._executor: Optional[ThreadPoolExecutor] = None

    async def initialize(self) -> bool:
        """Crée le pool d'exécution"""
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self.jobs, thread_name_prefix="experiment")
            logger.info(f"🔧 Experiment engine ready ({self.jobs} worker(s))")
        return True

    async def cleanup(self) -> None:
        """Libère le pool"""
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None
            logger.info("🧹 Experiment engine stopped")

    async def __aenter__(self) -> "ExperimentEngine":
        await self.initialize()
        return self

    async def __aexit__(self, *exc) -> None:
        await self.cleanup()

    async def _submit(
        self,
        cfg: StockMarketConfig,
        schedule: SensitivitySchedule,
        reference: ReferenceSource,
    ) -> ExperimentOutput:
        await self.initialize()
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self._executor, run_experiment, cfg, schedule, reference)

    async def _gather(self, tasks) -> List[ExperimentOutput]:
        results = await asyncio.gather(*tasks, return_exceptions=True)
        failures = [r for r in results if isinstance(r, BaseException)]
        if failures:
            logger.error(f"❌ {len(failures)} experiment(s) failed: {failures[0]}")
            raise failures[0]
        return list(results)

    async def run_replicates(
        self,
        cfg: StockMarketConfig,
        schedule: SensitivitySchedule,
        seeds: Sequence[int],
        reference: ReferenceSource = None,
    ) -> List[ExperimentOutput]:
        """
        Lance une exécution par graine

        Args:
            cfg: configuration commune (seed remplacée par chaque graine)
            schedule: calendrier ε_t
            seeds: graines des réplicats (distinctes)
            reference: source de M^PS

        Returns:
            Sorties dans l'ordre de seeds
        """
        if len(set(seeds)) != len(seeds):
            raise ConfigException("Replicate seeds must be distinct")
        logger.info(f"🚀 {len(seeds)} replicate(s) of '{schedule.order}' on {self.jobs} worker(s)")
        tasks = [self._submit(replace(cfg, seed=seed), schedule, reference) for seed in seeds]
        outputs = await self._gather(tasks)
        logger.success(f"✅ {len(outputs)} replicate(s) done")
        return outputs

    async def run_schedules(
        self,
        cfg: StockMarketConfig,
        schedules: Dict[str, SensitivitySchedule],
        reference: ReferenceSource = None,
    ) -> Dict[str, ExperimentOutput]:
        """Une exécution par calendrier, même graine"""
        names = list(schedules)
        tasks = [self._submit(cfg, schedules[name], reference) for name in names]
        outputs = await self._gather(tasks)
        return dict(zip(names, outputs))


def run_replicates_sync(
    cfg: StockMarketConfig,
    schedule: SensitivitySchedule,
    seeds: Sequence[int],
    jobs: int = 1,
    reference: ReferenceSource = None,
) -> List[ExperimentOutput]:
    """Version bloquante de ExperimentEngine.run_replicates"""

    async def _run() -> List[ExperimentOutput]:
        async with ExperimentEngine(jobs) as engine:
            return await engine.run_replicates(cfg, schedule, seeds, reference)

    return asyncio.run(_run())
