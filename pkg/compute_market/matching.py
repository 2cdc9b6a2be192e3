"""Online matchers: greedy cheapest (GCM), greedy shortest feasible (GSM) and
cheapest feasible (CFM), plus the deficiency formula for GSM's matched count.

A match is feasible when the provider's remaining time covers the whole job (tau >= w).
Ties resolve by cost, then position in ascending-tau order, then provider id.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

from .market_types import GsmFallback, MatchingAlgorithm
from .structures import AvailabilityMultiset, BucketQueue, FeasibilityTree, OpCounter

logger = logging.getLogger(__name__)


class PoolEntry(NamedTuple):
    provider_id: int
    tau: int
    cost: int


class MatchOutcome(NamedTuple):
    provider_id: int
    tau: int
    cost: int
    feasible: bool


def tau_order(entries: Sequence[PoolEntry]) -> List[PoolEntry]:
    return sorted(entries, key=lambda e: (e.tau, e.provider_id))


class CheapestPool:
    """GCM pool over a bucket queue"""

    def __init__(self, entries: Sequence[PoolEntry], c_max: Optional[int] = None,
                 counter: Optional[OpCounter] = None):
        ordered = tau_order(entries)
        ceiling = c_max if c_max is not None else max((e.cost for e in ordered), default=0)
        self.queue = BucketQueue(ceiling, counter)
        self.taus: Dict[int, int] = {}
        for entry in ordered:
            self.queue.insert(entry.provider_id, entry.cost)
            self.taus[entry.provider_id] = entry.tau

    def __len__(self) -> int:
        return len(self.queue)

    def match(self, hours: int) -> Optional[MatchOutcome]:
        popped = self.queue.pop_min()
        if popped is None:
            return None
        cost, provider_id = popped
        tau = self.taus.pop(provider_id)
        return MatchOutcome(provider_id, tau, cost, tau >= hours)


class ShortestFeasiblePool:
    """GSM pool over the ordered availability multiset"""

    def __init__(self, entries: Sequence[PoolEntry], fallback: GsmFallback = GsmFallback.REJECT,
                 counter: Optional[OpCounter] = None):
        self.fallback = fallback
        self.multiset = AvailabilityMultiset(counter)
        for entry in tau_order(entries):
            self.multiset.insert(entry.provider_id, entry.tau, entry.cost)

    def __len__(self) -> int:
        return len(self.multiset)

    def match(self, hours: int) -> Optional[MatchOutcome]:
        if not len(self.multiset):
            return None
        tau = self.multiset.smallest_at_least(hours)
        if tau is None:
            if self.fallback is GsmFallback.REJECT:
                return None
            tau = self.multiset.max_key
        cost, provider_id = self.multiset.pop_key(tau)
        return MatchOutcome(provider_id, tau, cost, tau >= hours)


class CheapestFeasiblePool:
    """CFM pool over the feasibility segment tree"""

    def __init__(self, entries: Sequence[PoolEntry], counter: Optional[OpCounter] = None):
        self.tree = FeasibilityTree.build([(e.provider_id, e.tau, e.cost) for e in entries], counter)

    def __len__(self) -> int:
        return len(self.tree)

    def match(self, hours: int) -> Optional[MatchOutcome]:
        if not len(self.tree):
            return None
        best = self.tree.suffix_min(self.tree.first_leaf_at_least(hours))
        if best is not None:
            leaf = best[1]
        else:
            # longest remaining provider; its leaf heap yields the lower cost first
            leaf = self.tree.rightmost_nonempty()
        cost, provider_id = self.tree.pop_leaf(leaf)
        tau = self.tree.taus[leaf]
        return MatchOutcome(provider_id, tau, cost, tau >= hours)


Pool = Union[CheapestPool, ShortestFeasiblePool, CheapestFeasiblePool]


def build_pool(algorithm: MatchingAlgorithm, entries: Sequence[PoolEntry],
               fallback: GsmFallback = GsmFallback.REJECT, c_max: Optional[int] = None,
               counter: Optional[OpCounter] = None) -> Pool:
    if algorithm is MatchingAlgorithm.GCM:
        return CheapestPool(entries, c_max, counter)
    if algorithm is MatchingAlgorithm.GSM:
        return ShortestFeasiblePool(entries, fallback, counter)
    return CheapestFeasiblePool(entries, counter)


def gcm_match(pool: CheapestPool, hours: int) -> Optional[MatchOutcome]:
    """Cheapest provider regardless of feasibility; None when the pool is empty.

    Equal costs go to the earlier provider in ascending-tau order, then the lower provider id.
    """
    return pool.match(hours)


def gsm_match(pool: ShortestFeasiblePool, hours: int,
              fallback: Optional[GsmFallback] = None) -> Optional[MatchOutcome]:
    """Shortest feasible provider; None on rejection or an empty pool"""
    if fallback is not None:
        pool.fallback = fallback
    return pool.match(hours)


def cfm_match(pool: CheapestFeasiblePool, hours: int) -> Optional[MatchOutcome]:
    """Cheapest feasible provider, else the longest one; None when the pool is empty"""
    return pool.match(hours)


def run_online(algorithm: MatchingAlgorithm, entries: Sequence[PoolEntry], jobs: Sequence[int],
               fallback: GsmFallback = GsmFallback.REJECT,
               counter: Optional[OpCounter] = None) -> List[Optional[MatchOutcome]]:
    """Match jobs in arrival order against one pool"""
    pool = build_pool(algorithm, entries, fallback, counter=counter)
    return [pool.match(w) for w in jobs]


def naive_select(algorithm: MatchingAlgorithm, entries: Sequence[PoolEntry], hours: int,
                 fallback: GsmFallback = GsmFallback.REJECT) -> Optional[PoolEntry]:
    """Linear-scan reference for the provider each matcher picks"""
    if not entries:
        return None
    order = {e.provider_id: i for i, e in enumerate(tau_order(entries))}
    feasible = [e for e in entries if e.tau >= hours]
    if algorithm is MatchingAlgorithm.GCM:
        return min(entries, key=lambda e: (e.cost, order[e.provider_id]))
    if algorithm is MatchingAlgorithm.GSM:
        if feasible:
            return min(feasible, key=lambda e: (e.tau, e.cost, e.provider_id))
        if fallback is GsmFallback.REJECT:
            return None
        return max(entries, key=lambda e: (e.tau, -e.cost, -e.provider_id))
    if feasible:
        return min(feasible, key=lambda e: (e.cost, order[e.provider_id]))
    return max(entries, key=lambda e: (e.tau, -e.cost, -e.provider_id))


def matched_cost(outcomes: Sequence[Optional[MatchOutcome]]) -> int:
    return sum(o.cost for o in outcomes if o is not None)


def feasible_count(outcomes: Sequence[Optional[MatchOutcome]]) -> int:
    return sum(1 for o in outcomes if o is not None and o.feasible)


@dataclass
class DeficiencyReport:
    """Deficiency of the convex job-provider graph and its per-suffix table"""
    delta: int
    predicted_matches: int
    thresholds: List[Optional[int]]  # None stands for infinity
    suffix_table: List[Dict[str, int]] = field(default_factory=list)


def deficiency(taus: Sequence[int], jobs: Sequence[int]) -> DeficiencyReport:
    """Delta = max over suffixes i of (#jobs whose threshold is >= i - #providers from i)+"""
    ordered = sorted(taus)
    m = len(ordered)
    thresholds: List[Optional[int]] = []
    for w in jobs:
        t = next((i + 1 for i, tau in enumerate(ordered) if tau >= w), None)
        thresholds.append(t)
    table = []
    delta = 0
    for i in range(1, m + 2):
        need = sum(1 for t in thresholds if t is None or t >= i)
        have = m - i + 1
        gap = max(0, need - have)
        table.append({"suffix": i, "jobs": need, "providers": have, "deficit": gap})
        delta = max(delta, gap)
    return DeficiencyReport(delta, len(jobs) - delta, thresholds, table)
