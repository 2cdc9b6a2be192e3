"""Test the provider pool structures"""
import pytest
from hypothesis import given, settings, strategies as st

from .structures import AvailabilityMultiset, BucketQueue, FeasibilityTree, OpCounter


def test_bucket_queue_pops_cheapest_first_in_insertion_order():
    queue = BucketQueue(10)
    queue.insert(1, 7)
    queue.insert(2, 3)
    queue.insert(3, 3)
    queue.insert(4, 9)
    assert [queue.pop_min() for _ in range(4)] == [(3, 2), (3, 3), (7, 1), (9, 4)]
    assert queue.pop_min() is None


def test_bucket_queue_extends_past_c_max():
    counter = OpCounter()
    queue = BucketQueue(4, counter)
    queue.insert(1, 12)
    queue.insert(2, 2)
    assert queue.c_max >= 12
    assert queue.pop_min() == (2, 2)
    assert queue.pop_min() == (12, 1)
    assert counter.ops > 0


def test_bucket_queue_rejects_negative_cost():
    with pytest.raises(ValueError):
        BucketQueue(3).insert(0, -1)


def test_availability_multiset_finds_smallest_covering_key():
    multiset = AvailabilityMultiset()
    for provider_id, tau, cost in [(0, 1, 5), (1, 3, 7), (2, 3, 4), (3, 6, 1)]:
        multiset.insert(provider_id, tau, cost)
    assert multiset.smallest_at_least(2) == 3
    assert multiset.smallest_at_least(3) == 3
    assert multiset.smallest_at_least(7) is None
    assert multiset.max_key == 6
    assert multiset.pop_key(3) == (4, 2)
    assert multiset.pop_key(3) == (7, 1)
    assert multiset.smallest_at_least(2) == 6
    assert len(multiset) == 2


def test_feasibility_tree_suffix_min_and_rightmost():
    tree = FeasibilityTree.build([(0, 1, 5), (1, 2, 3), (2, 9, 4), (3, 9, 2)])
    assert tree.taus == [1, 2, 9]
    assert tree.suffix_min(tree.first_leaf_at_least(2)) == (2, 2, 3)
    assert tree.rightmost_nonempty() == 2
    assert tree.pop_leaf(2) == (2, 3)
    assert tree.pop_leaf(2) == (4, 2)
    assert tree.rightmost_nonempty() == 1
    assert tree.suffix_min(tree.first_leaf_at_least(3)) is None
    assert len(tree) == 2


def test_feasibility_tree_insert_requires_known_tau():
    tree = FeasibilityTree([2, 4])
    tree.insert(7, 4, 10)
    assert tree.suffix_min(0) == (10, 1, 7)
    with pytest.raises(KeyError):
        tree.insert(8, 3, 1)


entries = st.lists(st.tuples(st.integers(1, 8), st.integers(0, 20)), min_size=1, max_size=12)


@settings(max_examples=200, deadline=None)
@given(entries, st.lists(st.integers(1, 9), max_size=12))
def test_feasibility_tree_matches_filtered_scan(pairs, queries):
    live = {i: (tau, cost) for i, (tau, cost) in enumerate(pairs)}
    tree = FeasibilityTree.build([(i, tau, cost) for i, (tau, cost) in live.items()])
    for hours in queries:
        if not live:
            break
        best = tree.suffix_min(tree.first_leaf_at_least(hours))
        feasible = [(cost, tau, i) for i, (tau, cost) in live.items() if tau >= hours]
        if not feasible:
            assert best is None
            continue
        cost, tau, provider_id = min(feasible)
        assert best == (cost, tree.taus.index(tau), provider_id)
        tree.pop_leaf(best[1])
        del live[provider_id]


if __name__ == "__main__":
    pytest.main([__file__])
