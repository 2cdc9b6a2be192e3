"""Test regret metrics, worst-case builders and the adversary searches"""
import pytest

from .adversary import (
    IncentiveScenario, MatchingInstance, bootstrap_mean_ci, build_tight_pair_instance, cyclic_remaining,
    d_regret, gap1_window, incentive_best_response, peel_and_load, peel_and_load_crosscheck,
    regret_report, s_regret, single_period_adversary_search, stake_delay_identity, supply_regret_bound,
    two_provider_adversary_search, two_provider_excess,
)
from .bounds_suite import suite_multiperiod
from .market_errors import SizeLimit, UnsortedCapacities
from .market_types import GsmFallback, MatchingAlgorithm
from .matching import PoolEntry, feasible_count, run_online
from .oracles import oracle_max_feasible


@pytest.mark.parametrize("pairs", [1, 2, 3])
def test_tight_pairs_cost_cfm_one_match_per_pair(pairs):
    instance = build_tight_pair_instance(pairs)
    assert len(instance.providers) == len(instance.jobs) == 2 * pairs
    gsm = run_online(MatchingAlgorithm.GSM, instance.providers, instance.jobs)
    assert feasible_count(gsm) == 2 * pairs == oracle_max_feasible(instance.providers, instance.jobs)
    assert d_regret(instance, MatchingAlgorithm.CFM) == pairs
    report = regret_report(instance, MatchingAlgorithm.CFM)
    assert report.d_regret == report.demand_bound
    assert report.bound_satisfied


def test_tight_pair_smallest_instance():
    instance = build_tight_pair_instance(1)
    assert instance.providers == (PoolEntry(0, 1, 5), PoolEntry(1, 2, 3))
    assert instance.jobs == (1, 2)


def test_sorted_costs_remove_the_shortfall():
    assert d_regret(build_tight_pair_instance(1, sorted_costs=True), MatchingAlgorithm.CFM) == 0
    assert d_regret(build_tight_pair_instance(3, sorted_costs=True), MatchingAlgorithm.CFM) == 0


def test_supply_regret_bound_branches():
    assert supply_regret_bound(6, 3, 14, 10) == 12
    assert supply_regret_bound(6, 5, 14, 10) == 4
    assert supply_regret_bound(6, 6, 14, 10) == 0
    assert supply_regret_bound(6, 2, 10, 10) == 0
    with pytest.raises(ValueError):
        supply_regret_bound(3, 1, 5, 10)


def test_s_regret_against_greedy_cheapest():
    instance = MatchingInstance((PoolEntry(0, 1, 5), PoolEntry(1, 4, 9), PoolEntry(2, 2, 7)), (2, 2), 9, 5)
    assert s_regret(instance, MatchingAlgorithm.GCM) == 0
    assert s_regret(instance, MatchingAlgorithm.CFM) == 16 - 12
    assert regret_report(instance, MatchingAlgorithm.CFM).bound_satisfied


def test_cyclic_remaining():
    assert [cyclic_remaining(3, t) for t in range(7)] == [3, 2, 1, 3, 2, 1, 3]


@pytest.mark.parametrize("short, long, periods", [
    (2, 3, [0, 1]),
    (2, 4, []),
    (3, 5, [6, 7, 8]),
])
def test_gap1_windows(short, long, periods):
    window = gap1_window(short, long)
    assert window.periods == periods
    assert window.matches_structure


def test_gap1_window_rejects_bad_pair():
    with pytest.raises(ValueError):
        gap1_window(3, 3)


def test_two_provider_search_coprime_pair():
    gsm = two_provider_adversary_search(2, 3, MatchingAlgorithm.GSM)
    cfm = two_provider_adversary_search(2, 3, MatchingAlgorithm.CFM)
    assert (gsm.max_infeasible, cfm.max_infeasible) == (2, 3)
    for search in (gsm, cfm):
        assert search.hyper_period == 6
        assert search.max_per_period <= 1
        assert search.max_per_restake_cycle <= 1
        assert search.schedule.satisfies_rules()
        assert len(search.infeasible_periods) == search.max_infeasible


@pytest.mark.parametrize("short, long, gsm, cfm, excess", [
    (2, 3, 2, 3, 1),
    (2, 4, 1, 2, 1),
    (3, 4, 4, 5, 1),
    (4, 6, 4, 4, 0),
])
def test_two_provider_optima(short, long, gsm, cfm, excess):
    comparison = two_provider_excess(short, long)
    assert (comparison.gsm.max_infeasible, comparison.cfm.max_infeasible, comparison.excess) == (gsm, cfm, excess)
    for search in (comparison.gsm, comparison.cfm):
        assert search.max_per_period <= 1
        assert search.max_per_restake_cycle <= 1


@pytest.mark.parametrize("short, long, gsm, cfm", [(2, 3, 1, 2), (2, 4, 1, 1), (3, 4, 3, 3), (4, 6, 3, 3)])
def test_two_provider_optima_with_length_cap(short, long, gsm, cfm):
    comparison = two_provider_excess(short, long, cap_to_longest=True)
    assert (comparison.gsm.max_infeasible, comparison.cfm.max_infeasible) == (gsm, cfm)
    assert comparison.within_bound


def test_shared_factor_excess_is_reported():
    comparison = two_provider_excess(2, 4)
    assert not comparison.coprime
    assert not comparison.within_bound
    result = suite_multiperiod(1, [(2, 4)])
    assert result.passed
    assert "shared-factor pairs with nonzero excess: 1" in result.notes
    assert any("capped at the longest idle time" in note and "excess=0" in note for note in result.notes)


def test_two_provider_search_size_limit():
    with pytest.raises(SizeLimit):
        two_provider_adversary_search(5, 7, MatchingAlgorithm.CFM)


def test_peel_and_load_thresholds():
    formula = peel_and_load([5, 2, 2, 2])
    assert formula.cfm_saves == [4, 1, 1, 1]
    assert formula.gsm_saves == [2, -1, -1, 0]
    assert (formula.cfm_threshold, formula.cfm_u_max) == (1, 3)
    assert (formula.gsm_threshold, formula.gsm_u_max) == (4, 0)


def test_peel_and_load_input_checks():
    with pytest.raises(UnsortedCapacities):
        peel_and_load([2, 3])
    with pytest.raises(ValueError):
        peel_and_load([3, 1])


def test_single_period_search_small_cases():
    assert single_period_adversary_search([2], MatchingAlgorithm.CFM) == 0
    assert single_period_adversary_search([3, 2], MatchingAlgorithm.CFM) == 1
    with pytest.raises(SizeLimit):
        single_period_adversary_search([2] * 9, MatchingAlgorithm.CFM)


def test_cfm_formula_agrees_with_search():
    rows = peel_and_load_crosscheck(max_providers=3, max_tau=4)
    assert rows
    assert all(row.cfm_agrees for row in rows)


def test_stake_delay_identity():
    comparison = stake_delay_identity(2)
    assert comparison.identity_holds
    assert comparison.prefix_return > 0
    assert comparison.early_return > comparison.late_return
    with pytest.raises(ValueError):
        stake_delay_identity(5)


def test_monopoly_report_does_not_matter():
    curve = incentive_best_response(IncentiveScenario.monopoly(), (0, 2, 4), trials=8, seed=3)
    means = {p.report: p.mean_return for p in curve.points}
    assert means[20] == means[22] == means[24]
    assert curve.truthful_margin == (0.0, 0.0)
    assert curve.inconclusive
    assert not curve.truthful_dominates


def test_bootstrap_interval():
    assert bootstrap_mean_ci([0.0] * 20, seed=1) == (0.0, 0.0)
    low, high = bootstrap_mean_ci([1.0, 2.0, 3.0, 4.0], seed=1, resamples=500)
    assert 1.0 <= low <= 2.5 <= high <= 4.0


def test_fallback_matches_are_not_feasible():
    instance = MatchingInstance((PoolEntry(0, 1, 1),), (2,))
    assert d_regret(instance, MatchingAlgorithm.GSM, GsmFallback.LONGEST) == 0
    assert d_regret(instance, MatchingAlgorithm.CFM) == 0


if __name__ == "__main__":
    pytest.main([__file__])
