"""
Performative Control - Command Line Interface
Commandes simulate, analyze, rsgd, rrm et stock
"""

import asyncio
import functools
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import typer
from loguru import logger
from rich.console import Console
from rich.table import Table

from config.schema import LoggingSection, Settings, load_settings
from core.interfaces import (
    InstanceBundle,
    SeedPair,
    feasible_radius,
    ConfigException,
    PerformativeException,
    StepSizeException,
)
from core.factory import PerformativeFactory
from core.engine import ExperimentEngine
from core.dynamics.trajectory import simulate_trajectory
from core.analysis.constants import ConstantsBundle, SensitivityProfile, compute_constants
from core.analysis.conditions import check_psc_condition
from core.analysis.step_sizes import (
    StepSizePlan,
    find_diminishing_plan,
    plan_constant_steps,
    plan_diminishing_steps,
)
from core.solvers.rrm import psc_reference, rrm_run
from core.solvers.rsgd import RsgdConfig, rsgd_run
from core.experiments.io import (
    FIXED_POINT_COLUMNS,
    config_hash,
    write_metadata,
    write_table_csv,
    write_trace_csv,
    write_yaml,
)
from core.experiments.runner import (
    EVAL_STREAM,
    REFERENCE_STREAM,
    RSGD_STREAM,
    ExperimentOutput,
    trace_rows,
)


EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

app = typer.Typer(add_completion=False, help="Performative control: simulation, analysis and solvers")
console = Console(stderr=True)


class State:
    """Options globales partagées par les commandes"""
    config: Optional[Path] = None
    seed: Optional[int] = None
    jobs: int = 1
    settings: Optional[Settings] = None


state = State()


def configure_logging(section: LoggingSection) -> None:
    """Installe les sinks loguru décrits par la section 'logging'"""
    logger.remove()
    logger.add(sys.stderr, level=section.level, format=section.format)
    if section.file:
        logger.add(section.file, level=section.level, rotation=section.rotation, retention=section.retention)


def _settings() -> Settings:
    if state.settings is None:
        state.settings = load_settings(state.config)
        configure_logging(state.settings.logging)
    return state.settings


def _seed(settings: Settings, override: Optional[int] = None) -> int:
    if override is not None:
        return override
    return settings.seed if state.seed is None else state.seed


def _guarded(command):
    """Traduit les exceptions du domaine en codes de sortie"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except typer.Exit:
            raise
        except (ConfigException, StepSizeException) as e:
            logger.error(f"❌ {e}")
            typer.echo(f"Error: {e}", err=True)
            raise typer.Exit(EXIT_CONFIG)
        except PerformativeException as e:
            logger.error(f"❌ {type(e).__name__}: {e}")
            typer.echo(f"Error: {e}", err=True)
            raise typer.Exit(EXIT_FAILURE)

    return wrapper


def _output_path(settings: Settings, out: Optional[Path], default_name: str) -> Path:
    return out if out is not None else Path(settings.output.dir) / default_name


def _instance(settings: Settings) -> InstanceBundle:
    return PerformativeFactory.create_instance(settings)


def _constants(instance: InstanceBundle) -> ConstantsBundle:
    config = instance.config
    profile = SensitivityProfile(eps=instance.perturbation.eps[: config.T], xi=instance.perturbation.xi[: config.T])
    return compute_constants(
        config,
        instance.cost.mu,
        instance.cost.sigma_s,
        instance.cost.G,
        profile,
        M_bar=feasible_radius(instance.feasible_set, config.policy_shape),
    )


def _plan(settings: Settings, bundle: ConstantsBundle) -> StepSizePlan:
    section = settings.rsgd.plan
    if section.kind == "auto":
        return find_diminishing_plan(bundle)
    if section.kind == "diminishing":
        if section.phi1 is None or section.phi2 is None:
            raise ConfigException("Diminishing plan needs phi1 and phi2")
        return plan_diminishing_steps(bundle, section.phi1, section.phi2)
    if section.eta is None:
        raise ConfigException("Constant plan needs eta")
    return plan_constant_steps(bundle, section.eta)


def _summary(title: str, values: Dict[str, Any]) -> None:
    table = Table(title=title)
    table.add_column("key")
    table.add_column("value")
    for key, value in values.items():
        table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(table)


@app.callback()
def main_callback(
    config: Optional[Path] = typer.Option(None, "--config", help="YAML configuration file"),
    seed: Optional[int] = typer.Option(None, "--seed", min=0, help="Base seed (unsigned 64-bit)"),
    jobs: int = typer.Option(1, "--jobs", min=1, help="Parallel replicates"),
):
    """Options globales"""
    state.config = config
    state.seed = seed
    state.jobs = jobs
    state.settings = None


@app.command()
@_guarded
def simulate(
    out: Optional[Path] = typer.Option(None, "--out", help="Trajectory CSV"),
):
    """Simule une trajectoire et l'écrit en CSV"""
    settings = _settings()
    instance = _instance(settings)
    policy = PerformativeFactory.create_initial_policy(settings, instance)
    config = instance.config
    record = simulate_trajectory(
        config, policy, instance.perturbation, instance.noise, instance.x0,
        SeedPair(_seed(settings)), cost=instance.cost,
    )
    header = (
        ["t"]
        + [f"x{i}" for i in range(config.d_x)]
        + [f"u{i}" for i in range(config.d_u)]
        + ["cost"]
    )
    rows = [
        [t] + record.states[t].tolist() + record.action_at(t).tolist() + [float(record.stage_costs[t])]
        for t in range(config.T + 1)
    ]
    path = write_table_csv(_output_path(settings, out, "trajectory.csv"), header, rows)
    logger.success(f"✅ Trajectory written to {path} (total cost {record.total_cost:.6g})")


@app.command()
@_guarded
def analyze(
    out: Optional[Path] = typer.Option(None, "--out", help="Analysis report (YAML)"),
):
    """Constantes, condition d'existence et plan de pas"""
    settings = _settings()
    instance = _instance(settings)
    certificate = PerformativeFactory.create_certificate(settings, instance.config)
    bundle = _constants(instance)
    report = check_psc_condition(bundle)
    plan = find_diminishing_plan(bundle)

    document = {
        "holds": report.holds,
        "mu_tilde": bundle.mu_tilde,
        "mu_bar": bundle.mu_bar,
        "lhs": report.lhs,
        "rhs": report.rhs,
        "margin": report.margin,
        "contraction_ratio": report.contraction_ratio,
        "stability": certificate.verdict,
        "stability_reason": certificate.reason,
        "plan": plan.describe() if plan.phi1 is not None else "none",
        "plan_valid": plan.valid,
        "plan_violations": list(plan.violated_conditions),
        "phi3": plan.phi3,
        "constants": bundle.as_dict(),
        "condition_report": report.as_dict(),
    }
    path = write_yaml(_output_path(settings, out, "analysis.yaml"), document)
    _summary("Existence condition", {
        "holds": report.holds,
        "mu_tilde": bundle.mu_tilde,
        "lhs": report.lhs,
        "stability": certificate.verdict,
    })
    logger.success(f"✅ Analysis written to {path}")


@app.command()
@_guarded
def rsgd(
    out: Optional[Path] = typer.Option(None, "--out", help="Trace CSV"),
    iterations: Optional[int] = typer.Option(None, "--iterations", "-N", min=1, help="Overrides rsgd.N"),
):
    """Exécute RSGD et écrit la trace"""
    settings = _settings()
    instance = _instance(settings)
    config, cost, perturbation, noise = instance.as_tuple()
    bundle = _constants(instance)
    plan = _plan(settings, bundle)
    seed = _seed(settings)

    reference = None
    if settings.rsgd.reference:
        reference = psc_reference(config, cost, perturbation, noise, instance.x0, instance.feasible_set, bundle=bundle)

    section = settings.rsgd
    rsgd_config = RsgdConfig(
        plan=plan,
        N=iterations or section.N,
        M0=PerformativeFactory.create_initial_policy(settings, instance),
        seed=SeedPair(seed).child(RSGD_STREAM),
        log_every=section.log_every,
        batch_size=section.batch_size,
        enforce_plan=section.enforce_plan,
        eval_samples=section.eval_samples,
        eval_seed=SeedPair(seed).child(EVAL_STREAM) if section.eval_samples > 0 else None,
    )
    trace = rsgd_run(config, cost, perturbation, noise, instance.x0, rsgd_config, reference=reference)

    path = write_trace_csv(_output_path(settings, out, "rsgd.csv"), trace_rows(trace))
    write_metadata(path, {
        "config_hash": config_hash(settings.model_dump()),
        "seed": seed,
        "plan": plan.describe(),
        "plan_violations": list(plan.violated_conditions),
        "condition_report": check_psc_condition(bundle).as_dict(),
        "diverged": trace.diverged,
        "divergence_iteration": trace.divergence_iteration,
    })
    if trace.diverged:
        raise typer.Exit(EXIT_DIVERGED)


@app.command()
@_guarded
def rrm(
    out: Optional[Path] = typer.Option(None, "--out", help="Fixed-point iterations CSV"),
):
    """Itère M_{n+1} = Φ(M_n) et écrit les résidus"""
    settings = _settings()
    instance = _instance(settings)
    config, cost, perturbation, noise = instance.as_tuple()
    section = settings.rrm
    seed = _seed(settings)
    result = rrm_run(
        config, cost, perturbation, noise, instance.x0,
        PerformativeFactory.create_initial_policy(settings, instance),
        max_iters=section.max_iters,
        tol=section.tol,
        inner_tol=section.inner_tol,
        inner_budget=section.inner_budget,
        n_samples=section.n_samples,
        seed=SeedPair(seed).child(REFERENCE_STREAM),
    )
    rows = [
        [n, gap, None, flag]
        for n, (gap, flag) in enumerate(zip(result.gaps, result.inner_flags))
    ]
    path = write_table_csv(_output_path(settings, out, "rrm.csv"), FIXED_POINT_COLUMNS, rows)
    write_metadata(path, {
        "config_hash": config_hash(settings.model_dump()),
        "seed": seed,
        "converged": result.converged,
        "iterations": result.iterations,
        "residual": result.residual,
        "M_star": np.asarray(result.M_star.matrix),
    })


def _stock_outputs(out_dir: Path, name: str, outputs: List[ExperimentOutput]) -> bool:
    diverged = False
    for output in outputs:
        seed = output.metadata["seed"]
        path = write_trace_csv(out_dir / f"stock_{name}_seed{seed}.csv", output.rows)
        write_metadata(path, output.metadata)
        diverged = diverged or output.diverged
    return diverged


@app.command()
@_guarded
def stock(
    schedule: str = typer.Option("ascend", "--schedule", help="ascend | descend | random | file"),
    schedule_file: Optional[Path] = typer.Option(None, "--schedule-file", help="Values for --schedule file"),
    scale: str = typer.Option("paper", "--scale", help="paper | reduced"),
    seed: Optional[int] = typer.Option(None, "--seed", min=0, help="Overrides the global seed"),
    replicates: int = typer.Option(1, "--replicates", min=1, help="Independent runs (seed, seed+1, …)"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory"),
):
    """Expérience boursière complète"""
    settings = _settings()
    if scale not in ("paper", "reduced"):
        raise ConfigException(f"Unknown scale '{scale}', expected paper or reduced")
    if schedule_file is not None:
        settings = settings.model_copy(
            update={"stock": settings.stock.model_copy(update={"schedule_file": str(schedule_file)})}
        )
    cfg = PerformativeFactory.create_stock_config(settings, _seed(settings, seed))
    if scale == "reduced":
        cfg = replace(cfg, L=3, T=12)
    sensitivity = PerformativeFactory.create_schedule(settings, cfg, schedule)
    seeds = [cfg.seed + k for k in range(replicates)]

    async def _run() -> List[ExperimentOutput]:
        async with ExperimentEngine(state.jobs) as engine:
            return await engine.run_replicates(cfg, sensitivity, seeds)

    outputs = asyncio.run(_run())
    out_dir = out if out is not None else Path(settings.output.dir)
    diverged = _stock_outputs(out_dir, sensitivity.order if schedule != "file" else "file", outputs)
    _summary("Stock experiment", {
        "schedule": schedule,
        "scale": scale,
        "replicates": replicates,
        "condition holds": outputs[0].condition.holds,
        "diverged": diverged,
    })
    if diverged:
        raise typer.Exit(EXIT_DIVERGED)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
