"""Instrumented operation counts of the three matchers across pool sizes"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .core_config import get_config
from .market_types import GsmFallback, MatchingAlgorithm
from .matching import PoolEntry, build_pool
from .seeding import stream
from .structures import OpCounter

logger = logging.getLogger(__name__)

GCM_COST_RANGE = 8


@dataclass(frozen=True)
class BenchRow:
    algorithm: str
    n: int
    jobs: int
    ops: int

    @property
    def ops_per_job(self) -> float:
        return self.ops / self.jobs


@dataclass
class BenchReport:
    rows: List[BenchRow] = field(default_factory=list)
    cfm_slope: float = 0.0
    cfm_intercept: float = 0.0
    cfm_correlation: float = 0.0
    gcm_ratio: float = 0.0

    def series(self, algorithm: MatchingAlgorithm) -> List[BenchRow]:
        return [r for r in self.rows if r.algorithm == algorithm.value]

    @property
    def passed(self) -> bool:
        return self.cfm_correlation >= 0.99 and self.gcm_ratio < 2


def _instance(algorithm: MatchingAlgorithm, n: int, seed: int):
    rng = stream(seed, f"bench-{algorithm.value}", n)
    if algorithm is MatchingAlgorithm.GCM:
        costs = rng.integers(100, 100 + GCM_COST_RANGE, size=n)
    else:
        costs = rng.integers(100, 100 + 4 * n, size=n)
    taus = rng.permutation(np.arange(1, n + 1))
    entries = [PoolEntry(i, int(taus[i]), int(costs[i])) for i in range(n)]
    jobs = rng.integers(1, n + 1, size=n).tolist()
    return entries, jobs


def measure(algorithm: MatchingAlgorithm, n: int, seed: int) -> BenchRow:
    """Operations spent matching n jobs against n providers, pool build excluded"""
    entries, jobs = _instance(algorithm, n, seed)
    counter = OpCounter()
    pool = build_pool(algorithm, entries, GsmFallback.LONGEST, counter=counter)
    counter.ops = 0
    for w in jobs:
        pool.match(w)
    return BenchRow(algorithm.value, n, len(jobs), counter.ops)


def run_complexity_bench(exponents: Optional[Sequence[int]] = None, seed: Optional[int] = None) -> BenchReport:
    defaults = get_config()["defaults"]
    exponents = list(exponents) if exponents is not None else list(defaults.BENCH_EXPONENTS)
    seed = defaults.DEFAULT_SEED if seed is None else seed
    report = BenchReport()
    for algorithm in MatchingAlgorithm:
        for k in exponents:
            row = measure(algorithm, 2 ** k, seed)
            report.rows.append(row)
            logger.debug(f"{algorithm.value} n={row.n}: {row.ops_per_job:.2f} ops/job")

    cfm = report.series(MatchingAlgorithm.CFM)
    if len(cfm) >= 2:
        x = np.log2([r.n for r in cfm])
        y = np.array([r.ops_per_job for r in cfm])
        report.cfm_slope, report.cfm_intercept = (float(v) for v in np.polyfit(x, y, 1))
        report.cfm_correlation = float(np.corrcoef(x, y)[0, 1])
    gcm = [r.ops_per_job for r in report.series(MatchingAlgorithm.GCM)]
    if gcm:
        report.gcm_ratio = max(gcm) / min(gcm)
    logger.info(f"bench: CFM {report.cfm_slope:.2f}*log2(n)+{report.cfm_intercept:.2f} "
                f"(r={report.cfm_correlation:.4f}), GCM ratio {report.gcm_ratio:.2f}")
    return report
