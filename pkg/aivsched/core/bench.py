"""
Replicated comparison of the heuristics and MADQN.

Replication r of a job count uses scenario seed ``base_seed + r`` and a
layout seed fixed per job count, and every policy runs on that same
scenario, so results are paired across policies.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from .errors import ConfigurationError
from .heuristics import HEURISTIC_NAMES, heuristic_from_name
from .policy import Policy, RunResult, run_episode
from .scenario import ScenarioConfig, generate_scenario
from .training import Checkpoint, check_compatible, greedy_policy
from ..utils.log import get_logger
from ..utils.reporting import render_bench_report

logger = get_logger("bench")

MADQN = "MADQN"
METRICS = ("total_tardiness", "n_tardy", "total_energy")
METRIC_TITLES = {
    "total_tardiness": "Mean total tardiness",
    "n_tardy": "Mean number of tardy jobs",
    "total_energy": "Mean total AIV energy consumption (%)",
}
FORMATS = ("table-csv", "boxplot-csv", "report-md")
LAYOUT_SEED_STRIDE = 1_000_003
REPLICATION_COLUMNS = ["policy", "n_jobs", "rep", "seed", "scenario_id", *METRICS,
                       "makespan", "n_recharges", "recharged_pct", "depleted"]


def policy_order(names: Sequence[str]) -> List[str]:
    """Heuristics in table order, then MADQN, then anything else alphabetically."""
    known = [n for n in HEURISTIC_NAMES if n in names] + ([MADQN] if MADQN in names else [])
    return known + sorted(n for n in set(names) if n not in known)


def layout_seed_for(base: ScenarioConfig) -> int:
    if base.layout_seed is not None:
        return base.layout_seed
    return base.seed + LAYOUT_SEED_STRIDE * base.n_jobs


def replication_config(base: ScenarioConfig, rep: int) -> ScenarioConfig:
    return replace(base, seed=base.seed + rep, layout_seed=layout_seed_for(base))


def make_policy(name: str, checkpoint: Optional[Checkpoint] = None) -> Policy:
    if name == MADQN:
        if checkpoint is None:
            raise ConfigurationError("MADQN needs a checkpoint")
        return greedy_policy(checkpoint)
    return heuristic_from_name(name)


def _replicate(policies: Sequence[str], checkpoint: Optional[Checkpoint], base: ScenarioConfig,
               rep: int) -> Tuple[int, List[RunResult], Optional[str]]:
    try:
        scenario = generate_scenario(replication_config(base, rep))
        if checkpoint is not None and MADQN in policies:
            check_compatible(checkpoint, scenario)
        return rep, [run_episode(scenario, make_policy(name, checkpoint)) for name in policies], None
    except Exception as e:  # recorded, the bench carries on
        return rep, [], f"{type(e).__name__}: {e}"


class BenchRun:
    """Results of a bench: one RunResult per (policy, job count, replication) plus failures."""

    def __init__(self):
        self.rows: List[Dict[str, Any]] = []
        self.failures: List[Tuple[int, int, str]] = []

    def add(self, n_jobs: int, rep: int, result: RunResult):
        row = {"policy": result.policy, "n_jobs": n_jobs, "rep": rep}
        row.update({k: v for k, v in result.to_dict().items() if k in REPLICATION_COLUMNS})
        self.rows.append(row)

    @property
    def results(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=REPLICATION_COLUMNS)


def run_replications(policies: Union[str, Sequence[str]], base_config: ScenarioConfig, n_reps: int,
                     checkpoint: Optional[Checkpoint] = None, workers: int = 1,
                     bench: Optional[BenchRun] = None) -> List[RunResult]:
    """Run ``n_reps`` paired replications of one job count.

    Args:
        policies: One policy name or several; every replication runs all of them.
        base_config: Scenario configuration; its seed is the base seed.
        n_reps: Number of replications (>= 1).
        checkpoint: Trained agents, required when MADQN is among the policies.
        workers: Worker processes; 1 runs in-process.
        bench: Collector receiving rows and failures.

    Returns:
        Results in replication order, policies in the given order within a replication.
    """
    if n_reps < 1:
        raise ConfigurationError("n_reps must be at least 1")
    names = [policies] if isinstance(policies, str) else list(policies)
    for name in names:
        if name != MADQN:
            heuristic_from_name(name)
    if MADQN in names and checkpoint is None:
        raise ConfigurationError("MADQN needs a checkpoint")
    base_config.validate()
    bench = bench if bench is not None else BenchRun()
    job = partial(_replicate, names, checkpoint, base_config)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(job, range(n_reps)))
    else:
        outcomes = [job(rep) for rep in range(n_reps)]

    collected: List[RunResult] = []
    for rep, results, error in outcomes:
        if error is not None:
            logger.error(f"Replication {rep} ({base_config.n_jobs} jobs) failed: {error}")
            bench.failures.append((base_config.n_jobs, rep, error))
            continue
        for result in results:
            bench.add(base_config.n_jobs, rep, result)
            collected.append(result)
    return collected


def run_bench(policies: Sequence[str], base_config: ScenarioConfig, job_counts: Sequence[int], n_reps: int,
              checkpoint: Optional[Checkpoint] = None, workers: int = 1) -> BenchRun:
    bench = BenchRun()
    for n_jobs in job_counts:
        logger.info(f"Bench: {n_jobs} jobs, {n_reps} replications, {len(policies)} policies")
        run_replications(policies, replace(base_config, n_jobs=n_jobs), n_reps, checkpoint, workers, bench)
    return bench


def default_workers() -> int:
    """Worker count from ``AIVSCHED_WORKERS``, else the CPU count."""
    value = os.getenv("AIVSCHED_WORKERS")
    if not value:
        return os.cpu_count() or 1
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"AIVSCHED_WORKERS must be an integer, got {value!r}")


def summarize(results: pd.DataFrame) -> pd.DataFrame:
    """Mean, min, quartiles (linear interpolation), max and population std per (policy, n_jobs, metric)."""
    if results.empty:
        raise ConfigurationError("Cannot summarize an empty result set")
    rows = []
    for (policy, n_jobs), group in results.groupby(["policy", "n_jobs"], sort=False):
        for metric in METRICS:
            values = group[metric].astype(float)
            rows.append({
                "policy": policy,
                "n_jobs": n_jobs,
                "metric": metric,
                "n": len(values),
                "mean": values.mean(),
                "min": values.min(),
                "q1": values.quantile(0.25),
                "median": values.quantile(0.5),
                "q3": values.quantile(0.75),
                "max": values.max(),
                "std": values.std(ddof=0),
            })
    return pd.DataFrame(rows)


def metric_table(stats_frame: pd.DataFrame, metric: str, statistic: str = "mean") -> pd.DataFrame:
    """Rows = job counts, columns = Jobs then the policies in table order."""
    subset = stats_frame[stats_frame["metric"] == metric]
    table = subset.pivot(index="n_jobs", columns="policy", values=statistic)
    table = table[policy_order(list(table.columns))].sort_index()
    table.columns.name = None
    return table.reset_index().rename(columns={"n_jobs": "Jobs"})


def compare_paired(results: pd.DataFrame, reference: str = MADQN, alpha: float = 0.05) -> pd.DataFrame:
    """One-sided paired Wilcoxon signed-rank test per job count, metric and competitor.

    The alternative hypothesis is that ``reference`` yields smaller values.
    A test that cannot be computed (every difference zero) reports p = 1.
    """
    rows = []
    for n_jobs, group in results.groupby("n_jobs", sort=True):
        ref = group[group["policy"] == reference].set_index("rep")
        if ref.empty:
            continue
        for policy in policy_order(list(group["policy"].unique())):
            if policy == reference:
                continue
            other = group[group["policy"] == policy].set_index("rep")
            reps = ref.index.intersection(other.index)
            for metric in METRICS:
                diff = ref.loc[reps, metric].astype(float) - other.loc[reps, metric].astype(float)
                try:
                    statistic, p_value = stats.wilcoxon(diff.to_numpy(), alternative="less")
                except ValueError:
                    statistic, p_value = float("nan"), 1.0
                if not np.isfinite(p_value):
                    p_value = 1.0
                rows.append({
                    "n_jobs": n_jobs,
                    "metric": metric,
                    "policy": policy,
                    "n": len(reps),
                    "reference_mean": float(ref.loc[reps, metric].mean()),
                    "policy_mean": float(other.loc[reps, metric].mean()),
                    "statistic": float(statistic),
                    "p_value": float(p_value),
                    "significant": bool(p_value < alpha),
                })
    return pd.DataFrame(rows, columns=["n_jobs", "metric", "policy", "n", "reference_mean", "policy_mean",
                                       "statistic", "p_value", "significant"])


def export(stats_frame: pd.DataFrame, results: pd.DataFrame, path: Union[str, Path], fmt: str,
           config: Optional[Dict[str, Any]] = None) -> List[Path]:
    """Write bench output.

    Args:
        stats_frame: Output of ``summarize``.
        results: Per-replication results.
        path: Output directory for ``table-csv`` (one file per metric),
            output file for ``boxplot-csv`` and ``report-md``.
        fmt: One of ``table-csv``, ``boxplot-csv``, ``report-md``.
        config: Effective configuration embedded in the markdown report.

    Returns:
        The files written.

    Raises:
        ConfigurationError: Unknown format.
        OSError: Unwritable path.
    """
    path = Path(path)
    if fmt == "table-csv":
        path.mkdir(parents=True, exist_ok=True)
        written = []
        for metric in METRICS:
            target = path / f"table_{metric}.csv"
            metric_table(stats_frame, metric).to_csv(target, index=False)
            written.append(target)
        return written
    if fmt == "boxplot-csv":
        frame = results.copy()
        frame["_order"] = frame["policy"].map({p: i for i, p in enumerate(policy_order(list(frame["policy"].unique())))})
        frame = frame.sort_values(["n_jobs", "_order", "rep"], kind="stable").drop(columns="_order")
        frame.to_csv(path, index=False)
        return [path]
    if fmt == "report-md":
        comparison = compare_paired(results) if MADQN in set(results["policy"]) else None
        tables = {METRIC_TITLES[m]: metric_table(stats_frame, m) for m in METRICS}
        path.write_text(render_bench_report(tables, comparison, config or {}), encoding="utf-8")
        return [path]
    raise ConfigurationError(f"Unknown export format '{fmt}', expected one of {FORMATS}")


def read_table_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path)
