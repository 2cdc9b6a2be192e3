"""Test the period loop against scripted scenarios and a frozen trace"""
import json
from pathlib import Path

import pytest

from .market_errors import InconsistentState
from .market_state import MarketParams, MarketState, advance_period, decay_and_restake, run_market
from .market_types import (JobSpec, JobStatus, MatchingAlgorithm, ProviderRecord, ProviderState,
                           RestakePolicy, ValueFunction)
from .pricing import PricingFunction, PricingKind
from .scenario_config import load_scenario

SCENARIOS = Path(__file__).parent / "scenarios"


def run_scenario(name):
    scenario = load_scenario(SCENARIOS / f"{name}.toml")
    state = scenario.build()
    reports = run_market(state, scenario.params, scenario.run.algorithm, scenario.run.gsm_fallback)
    return state, reports


def params(horizon=1):
    return MarketParams(PricingFunction(PricingKind.LINEAR_CAPPED, 10, 50), horizon)


def test_empty_market_posts_the_floor():
    state = MarketState.create([], [], 10)
    report = advance_period(state, params(), MatchingAlgorithm.CFM)
    assert report.price == 10
    assert report.matched == 0
    assert state.period == 1


def test_demand_below_floor_supply_matches_everyone():
    providers = [ProviderRecord(i, 8, 8, 3) for i in range(3)]
    jobs = [JobSpec(i, 100, 1, 1, ValueFunction.tabulated([0, 25])) for i in range(2)]
    state = MarketState.create(providers, jobs, 10)
    report = advance_period(state, params(), MatchingAlgorithm.GCM)
    assert report.price == 10
    assert report.matched == 2
    assert report.completed == 2
    assert all(state.jobs[i].status is JobStatus.FINISHED for i in range(2))


def test_rollover_scenario_follows_the_frozen_trace():
    _, reports = run_scenario("rollover")
    expected = json.loads((SCENARIOS / "rollover_trace.json").read_text(encoding="utf-8"))
    assert [r.trace() for r in reports] == expected


def test_runs_are_deterministic():
    first = [r.trace() for r in run_scenario("rollover")[1]]
    second = [r.trace() for r in run_scenario("rollover")[1]]
    assert first == second


def test_floor_regime_never_leaves_the_floor():
    state, reports = run_scenario("floor_regime")
    assert [r.price for r in reports] == [10] * 6
    assert all(r.matched == 2 for r in reports)
    assert state.period == 6


def test_spike_lifts_the_quote_for_one_period():
    _, reports = run_scenario("spike")
    assert [r.price for r in reports] == [10, 10, 10, 10, 10, 20, 10, 10]
    assert reports[5].alpha == 2


def test_assigned_provider_without_time_is_a_fault():
    broken = ProviderRecord(0, 8, 8, 3, remaining=0, state=ProviderState.ASSIGNED,
                            assigned_job=0, match_start=0, staked=True)
    with pytest.raises(InconsistentState):
        advance_period(MarketState.create([broken], [], 10), params(), MatchingAlgorithm.CFM)


@pytest.mark.parametrize("remaining, policy, stake, after, still_staked", [
    (3, RestakePolicy.NONE, 3, 2, True),
    (1, RestakePolicy.CYCLIC, 4, 4, True),
    (1, RestakePolicy.NONE, 3, 0, False),
])
def test_decay_and_restake(remaining, policy, stake, after, still_staked):
    provider = ProviderRecord(0, 5, 5, stake, remaining=remaining, state=ProviderState.IDLE,
                              restake_policy=policy, staked=True)
    decay_and_restake(MarketState.create([provider], [], 10))
    assert provider.remaining == after
    assert provider.staked is still_staked


def test_floor_update_tracks_matched_costs():
    providers = [ProviderRecord(0, 6, 6, 5), ProviderRecord(1, 8, 8, 5)]
    jobs = [JobSpec(i, 100, 1, 1, ValueFunction.tabulated([0, 30]), arrival=i) for i in range(2)]
    state = MarketState.create(providers, jobs, 10)
    market = MarketParams(PricingFunction(PricingKind.LINEAR_CAPPED, 10, 50), 2,
                          floor_window=2, floor_update=True)
    run_market(state, market, MatchingAlgorithm.GCM)
    assert state.cost_history == [6, 6]
    assert state.floor_price == 6


if __name__ == "__main__":
    pytest.main([__file__])
