"""Test the verification suites as a whole"""
import numpy as np
import pytest

from .adversary import IncentiveScenario, incentive_best_response
from .bounds_suite import SUITES, verify_bounds

SMALL = {
    "gsm_instances": 40,
    "sregret_instances": 40,
    "dregret_instances": 10,
    "curve_pairs": 20,
    "admissibility_constructions": 10,
    "cohorts": 20,
    "users": 20,
    "race_configs": 10,
    "incentive_trials": 60,
}


def small_run(seed):
    return verify_bounds(["default"], seed=seed, sizes=SMALL, bench_exponents=range(4, 7))


def test_same_seed_gives_identical_reports():
    first, second = small_run(7), small_run(7)
    assert [r.name for r in first.results] == list(SUITES)
    assert first.lines() == second.lines()
    assert first.regret_rows == second.regret_rows
    assert first.bench.rows == second.bench.rows
    assert len(first.payoff_scans) == len(second.payoff_scans)
    for a, b in zip(first.payoff_scans, second.payoff_scans):
        assert a.grid == b.grid and a.undominated == b.undominated
        assert np.array_equal(a.payoffs, b.payoffs)


def test_truthful_report_beats_over_reporting_under_competition():
    curve = incentive_best_response(IncentiveScenario.competitive(), (0, 3), trials=400, seed=11)
    low, high = curve.truthful_margin
    assert 0 < low <= high
    assert curve.truthful_dominates
    assert curve.best_report == IncentiveScenario.competitive().cost


if __name__ == "__main__":
    pytest.main([__file__])
