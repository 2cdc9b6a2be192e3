"""Provider pool structures used by the online matchers.

BucketQueue serves the cheapest provider in amortized constant time over integer cost
ticks. AvailabilityMultiset is an ordered multiset keyed by remaining time. FeasibilityTree
is a segment tree over compressed remaining times whose leaves hold cost heaps. All three
report work to an optional OpCounter so complexity can be measured.
"""
import heapq
import logging
from bisect import bisect_left, insort
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

Entry = Tuple[int, int]  # (cost, provider_id)
Best = Tuple[int, int, int]  # (cost, leaf index, provider_id)


@dataclass
class OpCounter:
    """Counts basic operations: bucket visits, comparisons, tree node touches"""
    ops: int = 0

    def tick(self, amount: int = 1) -> None:
        self.ops += amount


class BucketQueue:
    """Buckets B[0..C_max] of provider ids with a pointer at the lowest nonempty bucket"""

    def __init__(self, c_max: int, counter: Optional[OpCounter] = None):
        if c_max < 0:
            raise ValueError("c_max must be non-negative")
        self.buckets: List[Deque[int]] = [deque() for _ in range(c_max + 1)]
        self.pointer = c_max + 1
        self.size = 0
        self.counter = counter or OpCounter()

    @property
    def c_max(self) -> int:
        return len(self.buckets) - 1

    def __len__(self) -> int:
        return self.size

    def _extend(self, cost: int) -> None:
        new_max = max(cost, 2 * self.c_max + 1)
        grow = new_max - self.c_max
        self.buckets.extend(deque() for _ in range(grow))
        self.counter.tick(grow)
        logger.debug(f"bucket queue extended to C_max={new_max}")

    def insert(self, provider_id: int, cost: int) -> None:
        if cost < 0:
            raise ValueError("costs are non-negative ticks")
        if cost > self.c_max:
            was_empty_pointer = self.pointer == self.c_max + 1
            self._extend(cost)
            if was_empty_pointer:
                self.pointer = self.c_max + 1
        self.buckets[cost].append(provider_id)
        self.pointer = min(self.pointer, cost)
        self.size += 1
        self.counter.tick()

    def pop_min(self) -> Optional[Entry]:
        """Remove and return (cost, provider_id) of a cheapest provider, or None if empty"""
        if self.size == 0:
            return None
        while not self.buckets[self.pointer]:
            self.pointer += 1
            self.counter.tick()
        provider_id = self.buckets[self.pointer].popleft()
        self.size -= 1
        self.counter.tick()
        return self.pointer, provider_id


class AvailabilityMultiset:
    """Ordered keys of remaining time; each key holds a (cost, id) heap"""

    def __init__(self, counter: Optional[OpCounter] = None):
        self.keys: List[int] = []
        self.slots: Dict[int, List[Entry]] = {}
        self.size = 0
        self.counter = counter or OpCounter()

    def __len__(self) -> int:
        return self.size

    def _search_cost(self) -> int:
        return max(1, len(self.keys).bit_length())

    def insert(self, provider_id: int, tau: int, cost: int) -> None:
        if tau not in self.slots:
            insort(self.keys, tau)
            self.slots[tau] = []
            self.counter.tick(self._search_cost())
        heapq.heappush(self.slots[tau], (cost, provider_id))
        self.size += 1
        self.counter.tick()

    @property
    def max_key(self) -> Optional[int]:
        return self.keys[-1] if self.keys else None

    def smallest_at_least(self, hours: int) -> Optional[int]:
        """First key with tau >= hours"""
        self.counter.tick(self._search_cost())
        i = bisect_left(self.keys, hours)
        return self.keys[i] if i < len(self.keys) else None

    def pop_key(self, tau: int) -> Entry:
        slot = self.slots[tau]
        cost, provider_id = heapq.heappop(slot)
        self.counter.tick()
        if not slot:
            del self.slots[tau]
            self.keys.pop(bisect_left(self.keys, tau))
            self.counter.tick(self._search_cost())
        self.size -= 1
        return cost, provider_id


class FeasibilityTree:
    """Segment tree over distinct remaining times tau(1) < ... < tau(U).

    Each leaf keeps a heap of (cost, provider_id); each node keeps the best
    (cost, leaf, id) below it and whether any leaf below it is occupied.
    """

    def __init__(self, taus: Sequence[int], counter: Optional[OpCounter] = None):
        self.taus: List[int] = sorted(set(taus))
        self.index = {tau: u for u, tau in enumerate(self.taus)}
        self.width = 1
        while self.width < max(1, len(self.taus)):
            self.width *= 2
        self.best: List[Optional[Best]] = [None] * (2 * self.width)
        self.occupied: List[bool] = [False] * (2 * self.width)
        self.leaves: List[List[Entry]] = [[] for _ in range(self.width)]
        self.size = 0
        self.counter = counter or OpCounter()

    @classmethod
    def build(cls, entries: Sequence[Tuple[int, int, int]], counter: Optional[OpCounter] = None) -> 'FeasibilityTree':
        """Build from (provider_id, tau, cost) triples in linear time"""
        tree = cls([tau for _, tau, _ in entries], counter)
        for provider_id, tau, cost in entries:
            tree.leaves[tree.index[tau]].append((cost, provider_id))
        for u, heap in enumerate(tree.leaves):
            if heap:
                heapq.heapify(heap)
                node = tree.width + u
                tree.best[node] = (heap[0][0], u, heap[0][1])
                tree.occupied[node] = True
        for node in range(tree.width - 1, 0, -1):
            tree._combine(node)
        tree.size = len(entries)
        tree.counter.tick(2 * tree.width)
        return tree

    def __len__(self) -> int:
        return self.size

    def _combine(self, node: int) -> None:
        left, right = self.best[2 * node], self.best[2 * node + 1]
        if left is None:
            self.best[node] = right
        elif right is None:
            self.best[node] = left
        else:
            self.best[node] = min(left, right)
        self.occupied[node] = self.occupied[2 * node] or self.occupied[2 * node + 1]

    def _pull(self, u: int) -> None:
        node = self.width + u
        heap = self.leaves[u]
        self.best[node] = (heap[0][0], u, heap[0][1]) if heap else None
        self.occupied[node] = bool(heap)
        node //= 2
        self.counter.tick()
        while node:
            self._combine(node)
            self.counter.tick()
            node //= 2

    def insert(self, provider_id: int, tau: int, cost: int) -> None:
        if tau not in self.index:
            raise KeyError(f"tau {tau} is not in the compressed domain")
        u = self.index[tau]
        heapq.heappush(self.leaves[u], (cost, provider_id))
        self.size += 1
        self._pull(u)

    def first_leaf_at_least(self, hours: int) -> int:
        self.counter.tick(max(1, len(self.taus).bit_length()))
        return bisect_left(self.taus, hours)

    def suffix_min(self, lo: int) -> Optional[Best]:
        """Best (cost, leaf, id) over leaves lo..U-1"""
        if lo >= len(self.taus):
            return None
        result: Optional[Best] = None
        left, right = lo + self.width, 2 * self.width
        while left < right:
            if left & 1:
                candidate = self.best[left]
                if candidate is not None and (result is None or candidate < result):
                    result = candidate
                left += 1
            if right & 1:
                right -= 1
                candidate = self.best[right]
                if candidate is not None and (result is None or candidate < result):
                    result = candidate
            left //= 2
            right //= 2
            self.counter.tick()
        return result

    def rightmost_nonempty(self) -> Optional[int]:
        """Leaf index of the largest occupied tau"""
        if not self.occupied[1]:
            return None
        node = 1
        while node < self.width:
            node = 2 * node + 1 if self.occupied[2 * node + 1] else 2 * node
            self.counter.tick()
        return node - self.width

    def pop_leaf(self, u: int) -> Entry:
        cost, provider_id = heapq.heappop(self.leaves[u])
        self.size -= 1
        self._pull(u)
        return cost, provider_id
