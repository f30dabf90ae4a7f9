"""Seeded Monte-Carlo support-recovery benchmark.

For every sparsity level K and trial index a seed is derived from
``(master_seed, K, trial)``; each algorithm regenerates the instance from
that seed, so all algorithms see identical data.  Per-trial scores are
averaged into one :class:`MetricsRecord` per (K, algorithm).
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from onebit.exceptions import InvalidArgumentError, SolverError
from onebit.loss import PenaltyMode
from onebit.metrics import extract_support, score_support
from onebit.model import generate_instance
from onebit.solver import SolverConfig, solve

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "K",
    "algorithm",
    "trials",
    "failed",
    "false_alarm_rate",
    "miss_rate",
    "mean_support_size",
    "mean_outer_iterations",
    "mean_wall_time_ms",
)

FAILURE_FLAG_FRACTION = 0.10


@dataclass(frozen=True)
class BenchmarkConfig:
    m: int = 100
    n: int = 50
    k_values: tuple = (2, 4, 6, 8, 10, 12)
    trials: int = 300
    lam: float = 0.5
    master_seed: int = 0
    algorithms: tuple = ("gauss", "l1")
    tau: float = 1e-2
    solver: dict = field(default_factory=dict)
    # Wall-clock times vary run to run; recording them breaks byte-identical CSVs.
    timing: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        object.__setattr__(self, "algorithms",
                           tuple(PenaltyMode.parse(a).value for a in self.algorithms))
        if self.m < 1 or self.n < 1:
            raise InvalidArgumentError("m and n must be positive")
        if not self.k_values:
            raise InvalidArgumentError("at least one K value is required")
        for k in self.k_values:
            if not 1 <= k <= self.n:
                raise InvalidArgumentError(f"K={k} outside [1, n={self.n}]")
        if self.trials < 1:
            raise InvalidArgumentError("trials must be at least 1")
        if not self.algorithms:
            raise InvalidArgumentError("at least one algorithm is required")
        if not self.lam > 0:
            raise InvalidArgumentError("lambda must be positive")
        if self.tau < 0:
            raise InvalidArgumentError("tau must be nonnegative")
        if self.master_seed < 0:
            raise InvalidArgumentError("master seed must be unsigned")
        if self.workers < 1:
            raise InvalidArgumentError("workers must be at least 1")

    def solver_config(self, algorithm) -> SolverConfig:
        return SolverConfig(mode=algorithm, lam=self.lam, **self.solver)


@dataclass(frozen=True)
class TrialOutcome:
    k: int
    trial: int
    algorithm: str
    seed: int
    instance_digest: str
    true_support: frozenset
    failed: bool
    estimate: Optional[np.ndarray] = None
    false_alarm_rate: float = float("nan")
    miss_rate: float = float("nan")
    support_size: int = 0
    outer_iterations: int = 0
    converged: bool = False
    wall_time_ms: float = 0.0


@dataclass(frozen=True)
class MetricsRecord:
    k: int
    algorithm: str
    trials: int
    failed: int
    mean_false_alarm_rate: float
    mean_miss_rate: float
    mean_support_size: float
    mean_outer_iterations: float
    mean_wall_time_ms: float
    false_alarm_se: float = float("nan")
    miss_se: float = float("nan")

    @property
    def flagged(self) -> bool:
        return self.failed > FAILURE_FLAG_FRACTION * self.trials


def derive_trial_seed(master_seed: int, k: int, trial: int) -> int:
    """63-bit instance seed for one (K, trial) cell, hashed from all three."""
    state = np.random.SeedSequence([master_seed, k, trial]).generate_state(2, np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def _run_cell(args):
    cfg, k, trial = args
    seed = derive_trial_seed(cfg.master_seed, k, trial)
    outcomes = []
    for algorithm in cfg.algorithms:
        instance = generate_instance(cfg.m, cfg.n, k, seed)
        digest = instance.digest()
        truth = instance.truth.support
        try:
            result = solve(instance, cfg.solver_config(algorithm))
        except SolverError as exc:
            logger.warning("K=%d trial=%d %s failed: %s", k, trial, algorithm, exc)
            outcomes.append(TrialOutcome(k, trial, algorithm, seed, digest, truth, failed=True))
            continue
        est = extract_support(result.estimate, cfg.tau)
        score = score_support(truth, est, cfg.n)
        outcomes.append(TrialOutcome(
            k, trial, algorithm, seed, digest, truth,
            failed=False,
            estimate=result.estimate,
            false_alarm_rate=score.false_alarm_rate,
            miss_rate=score.miss_rate,
            support_size=len(est),
            outer_iterations=result.outer_iterations,
            converged=result.converged,
            wall_time_ms=1e3 * result.wall_time if cfg.timing else 0.0,
        ))
    return outcomes


def run_trials(cfg: BenchmarkConfig) -> list:
    """All per-trial outcomes in deterministic (K, trial, algorithm) order."""
    tasks = [(cfg, k, t) for k in cfg.k_values for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            # map() yields in submission order, whatever the completion order.
            chunks = list(pool.map(_run_cell, tasks, chunksize=max(1, len(tasks) // (8 * cfg.workers))))
    else:
        chunks = [_run_cell(task) for task in tasks]
    return [o for chunk in chunks for o in chunk]


def _mean_se(values):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return float("nan"), float("nan")
    se = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(arr.mean()), se


def aggregate(cfg: BenchmarkConfig, outcomes) -> list:
    records = []
    for k in cfg.k_values:
        for algorithm in cfg.algorithms:
            cell = [o for o in outcomes if o.k == k and o.algorithm == algorithm]
            ok = [o for o in cell if not o.failed]
            fa, fa_se = _mean_se([o.false_alarm_rate for o in ok])
            miss, miss_se = _mean_se([o.miss_rate for o in ok])
            record = MetricsRecord(
                k=k,
                algorithm=algorithm,
                trials=len(cell),
                failed=len(cell) - len(ok),
                mean_false_alarm_rate=fa,
                mean_miss_rate=miss,
                mean_support_size=_mean_se([o.support_size for o in ok])[0],
                mean_outer_iterations=_mean_se([o.outer_iterations for o in ok])[0],
                mean_wall_time_ms=_mean_se([o.wall_time_ms for o in ok])[0],
                false_alarm_se=fa_se,
                miss_se=miss_se,
            )
            if record.flagged:
                logger.warning("K=%d %s: %d of %d trials failed", k, algorithm,
                               record.failed, record.trials)
            records.append(record)
    return records


def run_benchmark(cfg: BenchmarkConfig) -> list:
    return aggregate(cfg, run_trials(cfg))


def tau_sensitivity(outcomes, taus, n) -> list:
    """Rescore stored estimates at several thresholds.

    Returns ``(tau, K, algorithm, false_alarm_rate, miss_rate)`` tuples.
    """
    rows = []
    keys = sorted({(o.k, o.algorithm) for o in outcomes})
    for tau in taus:
        for k, algorithm in keys:
            fa, miss = [], []
            for o in outcomes:
                if o.k != k or o.algorithm != algorithm or o.failed:
                    continue
                score = score_support(o.true_support, extract_support(o.estimate, tau), n)
                fa.append(score.false_alarm_rate)
                miss.append(score.miss_rate)
            rows.append((tau, k, algorithm, _mean_se(fa)[0], _mean_se(miss)[0]))
    return rows


def _fmt(value):
    return format(value, ".9g")


def emit_csv(records, path) -> None:
    """Write one row per (K, algorithm); floats carry 9 significant digits."""
    if not records:
        raise InvalidArgumentError("no records to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([
                r.k,
                r.algorithm,
                r.trials,
                r.failed,
                _fmt(r.mean_false_alarm_rate),
                _fmt(r.mean_miss_rate),
                _fmt(r.mean_support_size),
                _fmt(r.mean_outer_iterations),
                _fmt(r.mean_wall_time_ms),
            ])
