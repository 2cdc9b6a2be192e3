"""Test the post-run ledger checks"""
from pathlib import Path

import pytest

from .ledger_validator import LedgerValidator
from .market_state import run_market
from .market_types import MatchRecord
from .scenario_config import load_scenario

SCENARIOS = Path(__file__).parent / "scenarios"


def finished_run(name="rollover"):
    scenario = load_scenario(SCENARIOS / f"{name}.toml")
    state = scenario.build()
    reports = run_market(state, scenario.params, scenario.run.algorithm, scenario.run.gsm_fallback)
    return state, reports


@pytest.mark.parametrize("name", ["rollover", "floor_regime", "spike"])
def test_scripted_runs_are_valid(name):
    state, reports = finished_run(name)
    ok, problems = LedgerValidator().validate_run(state, reports)
    assert ok, problems


def test_overlapping_match_is_reported():
    state, reports = finished_run()
    first = state.ledger.records[0]
    state.ledger.records.append(MatchRecord(first.provider_id, 99, first.period + 1, first.price,
                                            first.reported_cost, 1, True))
    state.jobs[99] = state.jobs[first.job_id]
    ok, problems = LedgerValidator().validate_run(state, reports)
    assert not ok
    assert any("overlapping" in p for p in problems)


def test_price_below_floor_is_reported():
    state, reports = finished_run()
    reports[0].price = reports[0].floor_price - 1
    ok, problems = LedgerValidator().validate_run(state, reports)
    assert not ok
    assert any("below floor" in p for p in problems)


@pytest.mark.parametrize("stake", [2, 3, 5])
def test_cyclic_residues(stake):
    ok, message = LedgerValidator().check_cyclic_residues(stake, 4 * stake)
    assert ok, message


if __name__ == "__main__":
    pytest.main([__file__])
