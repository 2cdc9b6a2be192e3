"""Test the online matchers, the deficiency formula and the exhaustive oracles"""
import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from .market_errors import SizeLimit
from .market_types import GsmFallback, MatchingAlgorithm
from .matching import (
    PoolEntry, build_pool, cfm_match, deficiency, feasible_count, gcm_match, gsm_match, matched_cost,
    naive_select, run_online,
)
from .oracles import oracle_max_feasible, oracle_min_cost


def pool(*pairs):
    """Entries from (tau, cost) pairs, ids in listing order"""
    return [PoolEntry(i, tau, cost) for i, (tau, cost) in enumerate(pairs)]


def networkx_max_feasible(entries, jobs):
    graph = nx.Graph()
    left = [("job", j) for j in range(len(jobs))]
    graph.add_nodes_from(left, bipartite=0)
    graph.add_nodes_from((("provider", e.provider_id) for e in entries), bipartite=1)
    for j, w in enumerate(jobs):
        for e in entries:
            if e.tau >= w:
                graph.add_edge(("job", j), ("provider", e.provider_id))
    if graph.number_of_edges() == 0:
        return 0
    matching = nx.bipartite.hopcroft_karp_matching(graph, top_nodes=left)
    return sum(1 for node in matching if node[0] == "job")


def test_gcm_ignores_feasibility():
    outcome = run_online(MatchingAlgorithm.GCM, pool((1, 5), (3, 7)), [2])[0]
    assert outcome.tau == 1 and outcome.cost == 5
    assert not outcome.feasible


def test_gcm_equal_costs_prefer_lower_tau_position():
    outcome = run_online(MatchingAlgorithm.GCM, pool((2, 5), (4, 5)), [1])[0]
    assert outcome.provider_id == 0
    entries = [PoolEntry(0, 4, 5), PoolEntry(1, 2, 5), PoolEntry(2, 2, 5)]
    assert [o.provider_id for o in run_online(MatchingAlgorithm.GCM, entries, [1, 1, 1])] == [1, 2, 0]


def test_gsm_takes_shortest_feasible():
    outcomes = run_online(MatchingAlgorithm.GSM, pool((1, 9), (2, 9), (3, 1)), [2])
    assert outcomes[0].tau == 2 and outcomes[0].feasible


def test_gsm_fallback_modes():
    entries = pool((1, 4), (2, 3))
    assert run_online(MatchingAlgorithm.GSM, entries, [5], GsmFallback.REJECT) == [None]
    outcome = run_online(MatchingAlgorithm.GSM, entries, [5], GsmFallback.LONGEST)[0]
    assert outcome.tau == 2 and not outcome.feasible


def test_cfm_cheapest_among_feasible():
    outcome = run_online(MatchingAlgorithm.CFM, pool((1, 5), (2, 3), (9, 4)), [2])[0]
    assert (outcome.tau, outcome.cost, outcome.feasible) == (2, 3, True)


def test_pools_step_one_job_at_a_time():
    entries = pool((1, 5), (2, 3), (9, 4))
    cheapest = build_pool(MatchingAlgorithm.GCM, entries)
    assert [gcm_match(cheapest, 2).provider_id for _ in range(3)] == [1, 2, 0]
    assert gcm_match(cheapest, 2) is None

    feasible = build_pool(MatchingAlgorithm.CFM, entries)
    first, second = cfm_match(feasible, 5), cfm_match(feasible, 5)
    assert (first.provider_id, first.feasible) == (2, True)
    assert (second.provider_id, second.feasible) == (1, False)
    assert cfm_match(feasible, 1).provider_id == 0
    assert cfm_match(feasible, 1) is None

    shortest = build_pool(MatchingAlgorithm.GSM, pool((1, 9), (3, 1)))
    assert gsm_match(shortest, 2).tau == 3
    assert gsm_match(shortest, 2) is None
    assert gsm_match(shortest, 2, GsmFallback.LONGEST).feasible is False
    assert gsm_match(shortest, 2) is None


def test_cfm_falls_back_to_longest_then_cheapest():
    outcome = run_online(MatchingAlgorithm.CFM, pool((1, 5), (1, 3)), [2])[0]
    assert (outcome.tau, outcome.cost, outcome.feasible) == (1, 3, False)


def test_empty_pool_yields_no_match():
    for algorithm in MatchingAlgorithm:
        assert run_online(algorithm, [], [1, 2]) == [None, None]


def test_matched_cost_and_feasible_count():
    outcomes = run_online(MatchingAlgorithm.CFM, pool((3, 2), (1, 1), (5, 4)), [3, 1, 9])
    assert matched_cost(outcomes) == 7
    assert feasible_count(outcomes) == 2


def test_deficiency_examples():
    assert deficiency([1, 2, 3], [2, 2]).delta == 0
    report = deficiency([1, 1], [2])
    assert report.delta == 1
    assert report.predicted_matches == 0
    assert report.thresholds == [None]


def test_deficiency_suffix_table_covers_every_suffix():
    report = deficiency([1, 2, 3], [3, 3])
    assert len(report.suffix_table) == 4
    assert report.delta == 1
    assert report.suffix_table[2] == {"suffix": 3, "jobs": 2, "providers": 1, "deficit": 1}


def test_oracle_example():
    assert oracle_max_feasible(pool((1, 0), (2, 0)), [2, 2]) == 1


def test_oracle_min_cost_matches_cheapest_subset():
    assert oracle_min_cost(pool((1, 5), (1, 2), (1, 9)), [1, 1]) == 7


def test_oracle_size_limit():
    entries = pool(*[(1, 1)] * 9)
    with pytest.raises(SizeLimit):
        oracle_max_feasible(entries, [1])


instances = st.tuples(
    st.lists(st.tuples(st.integers(1, 6), st.integers(0, 12)), min_size=0, max_size=7),
    st.lists(st.integers(1, 6), min_size=0, max_size=7),
)


@settings(max_examples=300, deadline=None)
@given(instances, st.sampled_from(list(MatchingAlgorithm)), st.sampled_from(list(GsmFallback)))
def test_structures_agree_with_linear_scan(instance, algorithm, fallback):
    pairs, jobs = instance
    live = pool(*pairs)
    structured = build_pool(algorithm, live, fallback)
    for w in jobs:
        expected = naive_select(algorithm, live, w, fallback)
        outcome = structured.match(w)
        if expected is None:
            assert outcome is None
            continue
        assert outcome is not None
        assert (outcome.provider_id, outcome.tau, outcome.cost) == tuple(expected)
        live = [e for e in live if e.provider_id != expected.provider_id]


@settings(max_examples=300, deadline=None)
@given(instances)
def test_gsm_matches_deficiency_and_oracle(instance):
    pairs, jobs = instance
    entries = pool(*pairs)
    report = deficiency([e.tau for e in entries], jobs)
    gsm = feasible_count(run_online(MatchingAlgorithm.GSM, entries, sorted(jobs), GsmFallback.REJECT))
    optimum = oracle_max_feasible(entries, jobs)
    assert optimum == networkx_max_feasible(entries, jobs)
    assert gsm == report.predicted_matches == optimum


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=7), st.lists(st.integers(1, 6), max_size=7))
def test_cfm_equals_gsm_under_monotone_costs(taus, jobs):
    # cost increasing in tau: the cheapest feasible provider is also the shortest feasible
    ordered = sorted(taus)
    entries = [PoolEntry(i, tau, 10 * tau + i) for i, tau in enumerate(ordered)]
    cfm = run_online(MatchingAlgorithm.CFM, entries, jobs)
    gsm = run_online(MatchingAlgorithm.GSM, entries, jobs, GsmFallback.LONGEST)
    assert cfm == gsm


if __name__ == "__main__":
    pytest.main([__file__])
