"""Monte Carlo studies: failure sweep, edge-load distribution, load scaling.

Every trial draws its randomness from streams derived from
``(master seed, experiment, x, trial index, stream name)``, so results do
not depend on execution order or on how many worker processes are used.
"""
from __future__ import annotations

import csv
import io
import math
import zlib
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .requests import Matching, random_perfect_matching
from .routing import PlanMetrics, plan_metrics, required_load, route_matching
from .topology import Topology, apply_failures, build_nested


class ConfigError(ValueError):
    pass


def _tag(name: str) -> int:
    return zlib.crc32(name.encode())


def derive_rng(master_seed: int, *key) -> np.random.Generator:
    """Independent generator for ``key`` (strings and ints) under ``master_seed``."""
    spawn_key = tuple(_tag(k) if isinstance(k, str) else int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=spawn_key))


def run_tasks(fn: Callable, tasks: Sequence, workers: int = 1) -> list:
    """``[fn(t) for t in tasks]``, optionally over a process pool; order preserved."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def aggregate(samples: Iterable[float]) -> tuple[float, float]:
    """Mean and standard error (sample std / sqrt(M)); a single sample has error 0."""
    xs = np.asarray(list(samples), dtype=float)
    if xs.size == 0:
        raise ValueError("cannot aggregate an empty sample")
    if xs.size == 1:
        return float(xs[0]), 0.0
    return float(xs.mean()), float(xs.std(ddof=1) / math.sqrt(xs.size))


@lru_cache(maxsize=None)
def _base_topology(d: int) -> Topology:
    return build_nested(d)


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    R: int | None = 2
    k: int = 20
    trials: int = 500
    x_values: tuple[int, ...] = (0,)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x_values", tuple(int(x) for x in self.x_values))
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.R is not None and self.R < 1:
            raise ConfigError(f"R must be >= 1, got {self.R}")
        if self.k < 1 or self.trials < 1:
            raise ConfigError("k and trials must be >= 1")
        n = 1 << self.d
        for x in self.x_values:
            if not 0 <= x < n - 1:
                raise ConfigError(f"failure count x={x} must leave at least 2 of {n} nodes")

    @property
    def n(self) -> int:
        return 1 << self.d

    def describe(self) -> str:
        xs = " ".join(map(str, self.x_values))
        return f"d={self.d} n={self.n} R={self.R} k={self.k} M={self.trials} x=[{xs}] seed={self.seed}"


@dataclass(frozen=True)
class TrialRecord:
    x: int
    trial: int
    failed: tuple[int, ...]
    matching: Matching
    metrics: PlanMetrics


def run_trial(config: ExperimentConfig, x: int, trial: int) -> TrialRecord:
    """One sample: ``x`` random failures, a random perfect matching on survivors, greedy routing."""
    base = _base_topology(config.d)
    fail_rng = derive_rng(config.seed, "failures", x, trial)
    failed = tuple(sorted(int(z) for z in fail_rng.choice(base.n, size=x, replace=False)))
    topo = apply_failures(base, failed)
    m = random_perfect_matching(topo.surviving, derive_rng(config.seed, "matching", x, trial))
    plan = route_matching(topo, m, config.R, config.k, derive_rng(config.seed, "routing", x, trial))
    return TrialRecord(x, trial, failed, m, plan_metrics(plan))


def _trial_task(args) -> TrialRecord:
    return run_trial(*args)


def run_trials(config: ExperimentConfig, x: int, workers: int = 1) -> list[TrialRecord]:
    return run_tasks(_trial_task, [(config, x, i) for i in range(config.trials)], workers)


@dataclass(frozen=True)
class AggregateRow:
    x: int
    mean: float
    std_error: float
    samples: int


@dataclass(frozen=True)
class FailureSweepRow:
    x: int
    mean_served: float
    stderr_served: float
    mean_hops: float
    stderr_hops: float
    M: int

    @property
    def served(self) -> AggregateRow:
        return AggregateRow(self.x, self.mean_served, self.stderr_served, self.M)


def failure_sweep(config: ExperimentConfig, workers: int = 1) -> list[FailureSweepRow]:
    """Served fraction and hops per served pair versus the number of failed nodes.

    Hops are averaged per trial first; trials serving nothing are left out of
    the hop statistics (NaN if every trial served nothing).
    """
    rows = []
    for x in config.x_values:
        records = run_trials(config, x, workers)
        served_mean, served_err = aggregate(r.metrics.served_fraction for r in records)
        hops = [r.metrics.mean_path_length for r in records if r.metrics.mean_path_length is not None]
        hops_mean, hops_err = aggregate(hops) if hops else (math.nan, math.nan)
        rows.append(FailureSweepRow(x, served_mean, served_err, hops_mean, hops_err, len(records)))
    return rows


def load_distribution(config: ExperimentConfig, x: int = 0, workers: int = 1) -> dict[int, float]:
    """Probability that a surviving hypercube edge carries a given load, pooled over trials."""
    counts: Counter = Counter()
    for r in run_trials(config, x, workers):
        counts.update(r.metrics.edge_load_histogram)
    total = sum(counts.values())
    return {load: counts[load] / total for load in sorted(counts)}


def _scaling_task(args) -> int:
    d, k, seed, trial = args
    topo = _base_topology(d)
    m = random_perfect_matching(topo.surviving, derive_rng(seed, "scaling-matching", d, trial))
    req, _ = required_load(topo, m, k, derive_rng(seed, "scaling-routing", d, trial))
    return req


@dataclass(frozen=True)
class ScalingRow:
    n: int
    mean_max_load: float
    worst_max_load: int
    trials: int


def scaling_sweep(d_range: Iterable[int], trials: int, seed: int, k: int = 20, workers: int = 1) -> list[ScalingRow]:
    """Mean and worst required per-edge load for full random requests, per ``n = 2**d``."""
    rows = []
    for d in d_range:
        if not 1 <= d <= 10:
            raise ConfigError(f"d={d} outside [1, 10]")
        loads = run_tasks(_scaling_task, [(d, k, seed, i) for i in range(trials)], workers)
        rows.append(ScalingRow(1 << d, float(np.mean(loads)), int(max(loads)), trials))
    return rows


# --- CSV output --------------------------------------------------------------

FAILURE_COLUMNS = ("x", "mean_served", "stderr_served", "mean_hops", "stderr_hops", "M")
LOAD_COLUMNS = ("load", "probability")
SCALING_COLUMNS = ("n", "mean_max_load", "worst_max_load", "trials")
CAPACITY_COLUMNS = ("n", "mean_S", "stderr", "n_over_log2")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(comment: str, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    """CSV text whose first line is ``# <comment>``."""
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def failure_sweep_csv(config: ExperimentConfig, rows: Sequence[FailureSweepRow]) -> str:
    return to_csv(
        f"sweep-failures {config.describe()}",
        FAILURE_COLUMNS,
        ((r.x, r.mean_served, r.stderr_served, r.mean_hops, r.stderr_hops, r.M) for r in rows),
    )


def load_distribution_csv(config: ExperimentConfig, dist: dict[int, float]) -> str:
    return to_csv(f"edge-load {config.describe()}", LOAD_COLUMNS, sorted(dist.items()))


def scaling_csv(d_range, trials: int, seed: int, k: int, rows: Sequence[ScalingRow]) -> str:
    ds = " ".join(map(str, d_range))
    return to_csv(
        f"max-load-scaling d=[{ds}] k={k} trials={trials} seed={seed}",
        SCALING_COLUMNS,
        ((r.n, r.mean_max_load, r.worst_max_load, r.trials) for r in rows),
    )
