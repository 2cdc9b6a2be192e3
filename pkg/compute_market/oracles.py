"""Exhaustive reference optima for small matching instances"""
import logging
from functools import lru_cache
from typing import Sequence

from .core_config import get_config
from .market_errors import SizeLimit
from .matching import PoolEntry

logger = logging.getLogger(__name__)

INFINITY = float("inf")


def _check_size(providers: Sequence[PoolEntry], jobs: Sequence[int]) -> None:
    limit = get_config()["defaults"].ORACLE_LIMIT
    if len(providers) > limit or len(jobs) > limit:
        raise SizeLimit(f"oracle limited to {limit} providers and jobs, got {len(providers)}x{len(jobs)}")


def oracle_max_feasible(providers: Sequence[PoolEntry], jobs: Sequence[int]) -> int:
    """Largest number of feasible pairs over all partial bijections"""
    _check_size(providers, jobs)
    taus = tuple(p.tau for p in providers)
    n = len(jobs)

    @lru_cache(maxsize=None)
    def best(j: int, used: int) -> int:
        if j == n:
            return 0
        result = best(j + 1, used)
        for i, tau in enumerate(taus):
            if not used & (1 << i) and tau >= jobs[j]:
                result = max(result, 1 + best(j + 1, used | (1 << i)))
        return result

    return best(0, 0)


def oracle_min_cost(providers: Sequence[PoolEntry], jobs: Sequence[int]) -> int:
    """Cheapest total cost when min(n, m) jobs must be matched, feasibility ignored"""
    _check_size(providers, jobs)
    costs = tuple(p.cost for p in providers)
    n, m = len(jobs), len(providers)
    target = min(n, m)

    @lru_cache(maxsize=None)
    def best(j: int, used: int, matched: int) -> float:
        if j == n:
            return 0 if matched == target else INFINITY
        result = INFINITY
        if (n - j - 1) >= (target - matched):
            result = best(j + 1, used, matched)
        if matched < target:
            for i, cost in enumerate(costs):
                if not used & (1 << i):
                    result = min(result, cost + best(j + 1, used | (1 << i), matched + 1))
        return result

    return int(best(0, 0, 0))
