"""Test pool-sharing payments and cash settlement"""
from fractions import Fraction

import pytest

from .market_errors import LedgerViolation, NotWorking
from .market_types import MatchLedger, MatchRecord
from .payout import PayoutLedger, hourly_payment, premium_pool, total_return


def ledger_of(*records):
    ledger = MatchLedger()
    for provider_id, period, price, cost, hours in records:
        ledger.add(MatchRecord(provider_id, provider_id, period, price, cost, hours, True))
    return ledger


def test_ledger_lookups_agree_with_a_scan():
    records = [MatchRecord(0, 0, 0, 10, 4, 3, True), MatchRecord(1, 1, 0, 10, 5, 1, True),
               MatchRecord(1, 2, 2, 10, 5, 2, True), MatchRecord(0, 3, 3, 10, 4, 1, True)]
    ledger = MatchLedger()
    for record in records:
        ledger.add(record)
    rebuilt = MatchLedger(list(records))
    for book in ledger, rebuilt:
        for t in range(6):
            assert book.working_at(t) == [r for r in records if r.covers(t)]
            assert book.for_period(t) == [r for r in records if r.period == t]
        assert book.for_provider(1) == records[1:3]
    assert [r.job_id for r in ledger.working_at(2)] == [0, 2]
    with pytest.raises(LedgerViolation):
        ledger.add(MatchRecord(1, 9, 2, 10, 5, 1, True))


def test_solo_provider_paid_the_price():
    ledger = ledger_of((0, 0, 10, 4, 1))
    assert hourly_payment(0, 0, ledger) == 10
    assert total_return(0, ledger) == 10


def test_same_cohort_splits_the_pool():
    ledger = ledger_of((0, 0, 10, 4, 1), (1, 0, 10, 6, 1))
    assert premium_pool(ledger, 0, 0).pool == 10
    assert hourly_payment(0, 0, ledger) == 9
    assert hourly_payment(1, 0, ledger) == 11


def test_staggered_cohorts_anchor_on_match_start():
    ledger = ledger_of((0, 1, 10, 4, 2), (1, 2, 10, 6, 1))
    assert hourly_payment(0, 2, ledger) == 9
    assert hourly_payment(1, 2, ledger) == 10
    assert premium_pool(ledger, 2, 2).members == (1,)


def test_price_taker_collects_at_least_its_hours():
    ledger = ledger_of((0, 0, 10, 10, 3), (1, 0, 10, 2, 3))
    assert total_return(0, ledger) >= 30
    assert total_return(0, ledger, horizon=1) == 14


def test_idle_provider_has_no_payment():
    with pytest.raises(NotWorking):
        hourly_payment(5, 0, ledger_of((0, 0, 10, 4, 1)))


def test_settlement_carries_sub_tick_remainders():
    ledger = ledger_of((0, 0, 10, 4, 3), (1, 0, 10, 4, 3), (2, 0, 10, 5, 3))
    payouts = PayoutLedger()
    cash = []
    for hour in range(3):
        rows, delta = payouts.settle_hour(hour, ledger, {})
        assert delta == 0
        assert sum(r.exact for r in rows) == 30
        cash.append([r.paid for r in rows])
    assert cash == [[10, 10, 11], [9, 9, 10], [10, 10, 11]]
    assert payouts.cumulative == {0: 29, 1: 29, 2: 32}
    assert all(payouts.carries[p] == 0 for p in range(3))
    assert payouts.cumulative[2] == total_return(2, ledger)
    assert payouts.rows[0].premium_share == Fraction(17, 3)


if __name__ == "__main__":
    pytest.main([__file__])
