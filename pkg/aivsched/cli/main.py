"""
aivsched CLI
Main entry point: scenario generation, single runs, training and benchmarking
"""

import functools
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import click
import typer
from dotenv import load_dotenv

# Load environment variables (AIVSCHED_SEED, AIVSCHED_WORKERS, AIVSCHED_LOG_LEVEL)
load_dotenv()

from aivsched.core import bench as bench_mod
from aivsched.core.errors import AivSchedError, ConfigurationError, TrainingDivergenceError
from aivsched.core.heuristics import HEURISTIC_NAMES, heuristic_from_name
from aivsched.core.madqn import TrainConfig
from aivsched.core.policy import simulate, trace_text, RunResult
from aivsched.core.scenario import (
    AivConfig,
    BreakdownConfig,
    ScenarioConfig,
    generate_scenario,
    load_scenario,
    save_scenario,
)
from aivsched.core.training import (
    check_compatible,
    greedy_policy,
    load_checkpoint,
    train as train_agents,
    training_scenarios,
    write_training_log,
)
from aivsched.utils.log import LogLevel, configure_logging, get_logger
from aivsched.utils.reporting import render_banner

logger = get_logger("cli")

EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_DIVERGENCE = 3

app = typer.Typer(
    name="aivsched",
    help="Flexible job-shop simulator with AIV transport: heuristics, MADQN training and benchmarks",
    add_completion=False,
)

# Global options
verbose_option = typer.Option(
    LogLevel.NONE,
    "--verbose",
    "-v",
    envvar="AIVSCHED_LOG_LEVEL",
    help="Set verbosity level",
)

# Shared scenario options
jobs_option = typer.Option(20, "--jobs", "-j", help="Number of jobs")
products_option = typer.Option(4, "--products", help="Number of product types (must divide --jobs)")
seed_option = typer.Option(0, "--seed", envvar="AIVSCHED_SEED", help="Base seed")
preset_option = typer.Option("random", "--preset", help="Shop data: 'random' draws times and layout, 'reference' uses the built-in shop")
arrival_option = typer.Option(5.0, "--arrival-mean", help="Mean inter-arrival time (or rate with --arrival-is-rate)")
arrival_rate_option = typer.Option(False, "--arrival-is-rate", help="Read --arrival-mean as arrivals per time unit")
tbi_option = typer.Option(200.0, "--tbi", help="Mean time between workstation unavailabilities")
trf_option = typer.Option(50.0, "--trf", help="Mean time required for fixing")
no_breakdowns_option = typer.Option(False, "--no-breakdowns", help="Disable workstation unavailabilities")
aivs_option = typer.Option(2, "--aivs", help="Number of AIVs")
capacity_option = typer.Option(2, "--capacity", help="Products an AIV carries at once")
threshold_option = typer.Option(40.0, "--charge-threshold", help="Battery % below which an idle AIV goes charging")
recharge_option = typer.Option(30.0, "--recharge-duration", help="Time units one recharge takes")
layout_seed_option = typer.Option(None, "--layout-seed", help="Seed for the layout (defaults to --seed)")


def handle_errors(func):
    """Map aivsched exceptions onto exit codes with a red message."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except TrainingDivergenceError as e:
            typer.secho(f"Training diverged: {e}", fg=typer.colors.RED)
            raise typer.Exit(code=EXIT_DIVERGENCE)
        except ConfigurationError as e:
            typer.secho(f"Error: {e}", fg=typer.colors.RED)
            raise typer.Exit(code=EXIT_USAGE)
        except (AivSchedError, OSError) as e:
            typer.secho(f"Error: {e}", fg=typer.colors.RED)
            raise typer.Exit(code=EXIT_RUNTIME)

    return wrapper


def build_scenario_config(jobs: int, products: int, seed: int, preset: str, arrival_mean: float,
                          arrival_is_rate: bool, tbi: float, trf: float, no_breakdowns: bool, aivs: int,
                          capacity: int, charge_threshold: float, recharge_duration: float,
                          layout_seed: Optional[int]) -> ScenarioConfig:
    config = ScenarioConfig(
        n_jobs=jobs,
        n_products=products,
        arrival_mean=arrival_mean,
        arrival_is_rate=arrival_is_rate,
        breakdown=BreakdownConfig(mean_tbi=tbi, mean_trf=trf, enabled=not no_breakdowns),
        aiv=AivConfig(count=aivs, capacity=capacity, charge_threshold=charge_threshold,
                      recharge_duration=recharge_duration),
        preset=preset,
        seed=seed,
        layout_seed=layout_seed,
    )
    if products != len(config.routings):
        raise ConfigurationError(
            f"The built-in routings define {len(config.routings)} products; --products {products} "
            "needs a hand-written scenario file"
        )
    config.validate()
    return config


def echo_banner(command: str, settings: dict):
    typer.secho(render_banner(command, settings), fg=typer.colors.CYAN, nl=False)


def echo_result(result: RunResult):
    typer.echo(f"{result.policy}: {result.metrics_line()}")
    if result.depleted:
        typer.secho("Warning: an AIV battery was depleted during the run", fg=typer.colors.YELLOW)


@app.callback()
def callback(
    verbose: LogLevel = verbose_option,
):
    """
    Configure global options for aivsched
    """
    configure_logging(verbose)
    if verbose != LogLevel.NONE:
        typer.echo(f"Verbosity level set to: {verbose.value}")


@app.command()
@handle_errors
def generate(
    output: Path = typer.Option(..., "--output", "-o", help="Scenario file to write"),
    jobs: int = jobs_option,
    products: int = products_option,
    seed: int = seed_option,
    preset: str = preset_option,
    arrival_mean: float = arrival_option,
    arrival_is_rate: bool = arrival_rate_option,
    tbi: float = tbi_option,
    trf: float = trf_option,
    no_breakdowns: bool = no_breakdowns_option,
    aivs: int = aivs_option,
    capacity: int = capacity_option,
    charge_threshold: float = threshold_option,
    recharge_duration: float = recharge_option,
    layout_seed: Optional[int] = layout_seed_option,
):
    """
    Generate a scenario file.
    """
    config = build_scenario_config(jobs, products, seed, preset, arrival_mean, arrival_is_rate, tbi, trf,
                                   no_breakdowns, aivs, capacity, charge_threshold, recharge_duration, layout_seed)
    echo_banner("generate", {"output": str(output), **config.to_dict()})
    scenario = generate_scenario(config)
    save_scenario(scenario, output)
    typer.secho(f"Scenario written to {output} ({scenario.n_jobs} jobs, hash {scenario.content_hash()[:16]})",
                fg=typer.colors.GREEN)


@app.command()
@handle_errors
def run(
    scenario_path: Path = typer.Option(..., "--scenario", "-s", help="Scenario file"),
    policy: str = typer.Option(..., "--policy", "-p", help=f"Heuristic ({', '.join(HEURISTIC_NAMES)}) or MADQN"),
    checkpoint: Optional[Path] = typer.Option(None, "--checkpoint", "-c", help="MADQN checkpoint"),
    trace: Optional[Path] = typer.Option(None, "--trace", help="Write the event trace to this file"),
):
    """
    Simulate one scenario under one policy and print the three objectives.
    """
    if policy == bench_mod.MADQN:
        if checkpoint is None:
            raise ConfigurationError("--policy MADQN requires --checkpoint")
    elif policy not in HEURISTIC_NAMES:
        raise ConfigurationError(f"Unknown policy '{policy}'. Valid heuristics: {', '.join(HEURISTIC_NAMES)}")

    scenario = load_scenario(scenario_path)
    echo_banner("run", {
        "scenario": str(scenario_path),
        "scenario_hash": scenario.content_hash()[:16],
        "seed": scenario.config.seed,
        "policy": policy,
        "checkpoint": str(checkpoint) if checkpoint else None,
    })
    if policy == bench_mod.MADQN:
        loaded = load_checkpoint(checkpoint)
        check_compatible(loaded, scenario)
        chosen = greedy_policy(loaded)
    else:
        chosen = heuristic_from_name(policy)

    state = simulate(scenario, chosen, keep_trace=trace is not None)
    echo_result(RunResult.from_state(state, chosen.name))
    if trace is not None:
        trace.write_text(trace_text(state), encoding="utf-8")
        typer.secho(f"Event trace written to {trace}", fg=typer.colors.GREEN)


@app.command()
@handle_errors
def train(
    output: Path = typer.Option(Path("madqn.ckpt"), "--output", "-o", help="Checkpoint file to write"),
    log: Path = typer.Option(Path("training_log.csv"), "--log", help="Training log (CSV)"),
    scenario_paths: Optional[List[Path]] = typer.Option(None, "--scenario", "-s", help="Training scenario file (repeatable)"),
    train_scenarios: int = typer.Option(10, "--train-scenarios", help="Scenarios to generate when no --scenario is given"),
    episodes: int = typer.Option(300, "--episodes", "-e", help="Total training episodes"),
    batch_size: int = typer.Option(32, "--batch-size"),
    target_sync: int = typer.Option(100, "--target-sync", help="SGD steps between target-network copies"),
    replay_capacity: int = typer.Option(10000, "--replay-capacity"),
    gamma: float = typer.Option(0.9, "--gamma"),
    lr: float = typer.Option(0.01, "--lr"),
    k_slots: int = typer.Option(8, "--k-slots", help="Peer slots per hidden layer"),
    k_tardiness: float = typer.Option(1.5, "--k-tardiness", help="Coefficient on remaining processing time"),
    no_sharing: bool = typer.Option(False, "--no-sharing", help="One network pair per job agent"),
    resume: Optional[Path] = typer.Option(None, "--resume", help="Continue from this checkpoint"),
    jobs: int = jobs_option,
    products: int = products_option,
    seed: int = seed_option,
    preset: str = preset_option,
    arrival_mean: float = arrival_option,
    arrival_is_rate: bool = arrival_rate_option,
    tbi: float = tbi_option,
    trf: float = trf_option,
    no_breakdowns: bool = no_breakdowns_option,
    aivs: int = aivs_option,
    capacity: int = capacity_option,
    charge_threshold: float = threshold_option,
    recharge_duration: float = recharge_option,
    layout_seed: Optional[int] = layout_seed_option,
):
    """
    Train the MADQN job agents and write a checkpoint and a training log.
    """
    config = TrainConfig(
        episodes=episodes,
        batch_size=batch_size,
        target_sync=target_sync,
        replay_capacity=replay_capacity,
        gamma=gamma,
        lr=lr,
        k_slots=k_slots,
        k_tardiness=k_tardiness,
        parameter_sharing=not no_sharing,
        seed=seed,
    )
    config.validate()
    if scenario_paths:
        scenarios = [load_scenario(p) for p in scenario_paths]
        settings = {"scenarios": [str(p) for p in scenario_paths]}
    else:
        base = build_scenario_config(jobs, products, seed, preset, arrival_mean, arrival_is_rate, tbi, trf,
                                     no_breakdowns, aivs, capacity, charge_threshold, recharge_duration,
                                     layout_seed)
        scenarios = training_scenarios(base, train_scenarios)
        settings = {"scenario": base.to_dict(), "train_scenarios": train_scenarios}
    previous = load_checkpoint(resume) if resume is not None else None
    echo_banner("train", {
        "output": str(output),
        "log": str(log),
        "resume": str(resume) if resume else None,
        "train": config.to_dict(),
        **settings,
    })

    result = train_agents(scenarios, config, resume=previous, checkpoint_path=output)
    write_training_log(result.log, log, append=previous is not None)
    typer.secho(f"Checkpoint written to {output} after episode {result.checkpoint.episode}", fg=typer.colors.GREEN)
    typer.secho(f"Training log written to {log} ({len(result.log)} rows)", fg=typer.colors.GREEN)


def parse_job_counts(value: str) -> List[int]:
    try:
        counts = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"--jobs expects comma-separated integers, got '{value}'")
    if not counts or any(c <= 0 for c in counts):
        raise ConfigurationError("--jobs needs at least one positive job count")
    return counts


@app.command()
@handle_errors
def bench(
    output: Path = typer.Option(Path("bench_out"), "--output", "-o", help="Output directory"),
    jobs: str = typer.Option("20", "--jobs", "-j", help="Comma-separated job counts, e.g. 20,40,60"),
    reps: int = typer.Option(30, "--reps", "-r", help="Replications per job count"),
    checkpoint: Optional[Path] = typer.Option(None, "--checkpoint", "-c", help="MADQN checkpoint"),
    heuristics_only: bool = typer.Option(False, "--heuristics-only", help="Skip the MADQN column"),
    formats: List[str] = typer.Option(["table-csv"], "--format", "-f", help="table-csv, boxplot-csv or report-md (repeatable)"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Worker processes [default: AIVSCHED_WORKERS or the CPU count]"),
    products: int = products_option,
    seed: int = seed_option,
    preset: str = preset_option,
    arrival_mean: float = arrival_option,
    arrival_is_rate: bool = arrival_rate_option,
    tbi: float = tbi_option,
    trf: float = trf_option,
    no_breakdowns: bool = no_breakdowns_option,
    aivs: int = aivs_option,
    capacity: int = capacity_option,
    charge_threshold: float = threshold_option,
    recharge_duration: float = recharge_option,
    layout_seed: Optional[int] = layout_seed_option,
):
    """
    Compare the nine heuristics (and MADQN) over paired replications.
    """
    job_counts = parse_job_counts(jobs)
    unknown = [f for f in formats if f not in bench_mod.FORMATS]
    if unknown:
        raise ConfigurationError(f"Unknown format(s) {unknown}, expected {bench_mod.FORMATS}")
    if checkpoint is None and not heuristics_only:
        raise ConfigurationError("bench needs --checkpoint for the MADQN column, or --heuristics-only")
    if workers is None:
        workers = bench_mod.default_workers()
    if workers < 1:
        raise ConfigurationError("--workers must be at least 1")
    base = build_scenario_config(job_counts[0], products, seed, preset, arrival_mean, arrival_is_rate, tbi, trf,
                                 no_breakdowns, aivs, capacity, charge_threshold, recharge_duration, layout_seed)
    for count in job_counts:
        replace(base, n_jobs=count).validate()
    policies = list(HEURISTIC_NAMES)
    loaded = None
    if not heuristics_only:
        loaded = load_checkpoint(checkpoint)
        policies.append(bench_mod.MADQN)

    settings = {
        "output": str(output),
        "job_counts": job_counts,
        "reps": reps,
        "checkpoint": str(checkpoint) if checkpoint else None,
        "policies": policies,
        "workers": workers,
        "scenario": {k: v for k, v in base.to_dict().items() if k not in ("n_jobs", "due_date_mu", "layout_seed")},
    }
    echo_banner("bench", settings)

    run_data = bench_mod.run_bench(policies, base, job_counts, reps, checkpoint=loaded, workers=workers)
    results = run_data.results
    if run_data.failures:
        typer.secho(f"Warning: {len(run_data.failures)} replication(s) failed", fg=typer.colors.YELLOW)
        for n_jobs, rep, message in run_data.failures:
            typer.secho(f"  {n_jobs} jobs, replication {rep}: {message}", fg=typer.colors.YELLOW)
    if results.empty:
        raise AivSchedError("Every replication failed; nothing to export")

    stats_frame = bench_mod.summarize(results)
    output.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        target = {"table-csv": output, "boxplot-csv": output / "boxplot.csv", "report-md": output / "report.md"}[fmt]
        written.extend(bench_mod.export(stats_frame, results, target, fmt, config=settings))

    for metric in bench_mod.METRICS:
        typer.echo(f"\n{bench_mod.METRIC_TITLES[metric]}")
        typer.echo(bench_mod.metric_table(stats_frame, metric).to_string(index=False))
    for path in written:
        typer.secho(f"Wrote {path}", fg=typer.colors.GREEN)


def main():
    """Console entry point: usage errors exit 1, other CLI errors 2."""
    try:
        code = app(standalone_mode=False)
    except click.UsageError as e:
        e.show()
        sys.exit(EXIT_USAGE)
    except click.ClickException as e:
        e.show()
        sys.exit(EXIT_RUNTIME)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)
    sys.exit(code if isinstance(code, int) else 0)


if __name__ == "__main__":
    main()
