"""
Performative Control - Engine Tests
Réplicats parallèles : ordre, graines et déterminisme
"""

from dataclasses import replace

import pytest

from core.interfaces import ConfigException
from core.engine import ExperimentEngine, run_replicates_sync
from core.experiments.runner import run_experiment
from core.experiments.schedules import ASCEND, DESCEND, paper_schedules
from core.experiments.stock import StockMarketConfig


@pytest.fixture
def tiny_stock() -> StockMarketConfig:
    return StockMarketConfig.reduced(N=4, eval_samples=4, reference="none")


@pytest.fixture
def tiny_schedule(tiny_stock):
    return paper_schedules(T=tiny_stock.T)[ASCEND]


class TestExperimentEngine:

    async def test_outputs_follow_seed_order(self, tiny_stock, tiny_schedule):
        seeds = [2, 0, 1]
        async with ExperimentEngine(jobs=3) as engine:
            outputs = await engine.run_replicates(tiny_stock, tiny_schedule, seeds)
        assert [o.metadata["seed"] for o in outputs] == seeds
        assert all(len(o.rows) == tiny_stock.N + 1 for o in outputs)

    async def test_parallel_matches_sequential(self, tiny_stock, tiny_schedule):
        async with ExperimentEngine(jobs=2) as engine:
            outputs = await engine.run_replicates(tiny_stock, tiny_schedule, [0, 1])
        for seed, output in zip([0, 1], outputs):
            assert output.rows == run_experiment(replace(tiny_stock, seed=seed), tiny_schedule).rows

    async def test_duplicate_seeds_rejected(self, tiny_stock, tiny_schedule):
        async with ExperimentEngine() as engine:
            with pytest.raises(ConfigException):
                await engine.run_replicates(tiny_stock, tiny_schedule, [1, 1])

    async def test_one_run_per_schedule(self, tiny_stock):
        schedules = paper_schedules(T=tiny_stock.T)
        async with ExperimentEngine(jobs=2) as engine:
            outputs = await engine.run_schedules(tiny_stock, schedules)
        assert list(outputs) == list(schedules)
        assert outputs[DESCEND].metadata["schedule"]["name"] == DESCEND

    async def test_cleanup_is_idempotent(self):
        engine = ExperimentEngine()
        assert await engine.initialize()
        await engine.cleanup()
        await engine.cleanup()

    def test_invalid_worker_count(self):
        with pytest.raises(ConfigException):
            ExperimentEngine(jobs=0)

    def test_blocking_helper(self, tiny_stock, tiny_schedule):
        outputs = run_replicates_sync(tiny_stock, tiny_schedule, [3], jobs=1)
        assert len(outputs) == 1
        assert outputs[0].rows == run_experiment(replace(tiny_stock, seed=3), tiny_schedule).rows
