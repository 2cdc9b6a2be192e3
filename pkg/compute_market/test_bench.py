"""Test the operation-count benchmark"""
import pytest

from .bench import GCM_COST_RANGE, measure, run_complexity_bench
from .market_types import MatchingAlgorithm


def test_measure_counts_matching_work_only():
    row = measure(MatchingAlgorithm.CFM, 32, seed=4)
    assert row.n == row.jobs == 32
    assert row.ops > 0
    assert measure(MatchingAlgorithm.CFM, 32, seed=4) == row


def test_bench_fits_every_series():
    report = run_complexity_bench(range(4, 10), seed=4)
    assert len(report.rows) == 3 * 6
    for algorithm in MatchingAlgorithm:
        assert [r.n for r in report.series(algorithm)] == [2 ** k for k in range(4, 10)]
    assert report.cfm_slope > 0
    assert report.cfm_correlation > 0.9
    assert report.gcm_ratio >= 1


def test_gcm_per_job_work_stays_flat():
    small = measure(MatchingAlgorithm.GCM, 64, seed=9)
    large = measure(MatchingAlgorithm.GCM, 4096, seed=9)
    assert large.ops_per_job < 2 * small.ops_per_job
    assert GCM_COST_RANGE < 64


if __name__ == "__main__":
    pytest.main([__file__])
