"""Test load, the equilibrium quote, admissibility and the floor update"""
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from .market_errors import MonotonicityViolation, NoFloorSupply
from .market_types import round_half_down
from .pricing import (
    PricingFunction, PricingKind, check_admissibility, compute_load, grid_scan_quote,
    solve_equilibrium_quote, update_floor,
)


def linear(floor_price=10, b_max=200, slope=Fraction(1)):
    return PricingFunction(PricingKind.LINEAR_CAPPED, floor_price, b_max, slope=slope)


def test_compute_load():
    assert compute_load(3, 5) == 1
    assert compute_load(10, 5) == 2
    with pytest.raises(NoFloorSupply):
        compute_load(7, 0)
    assert compute_load(0, 0) == 1


def test_pricing_function_shapes():
    assert linear()(Fraction(1)) == 10
    assert linear(b_max=25)(Fraction(3)) == 25
    power = PricingFunction(PricingKind.CONCAVE_POWER, 10, 100, exponent=0.5)
    assert power(4) == pytest.approx(20.0)
    table = PricingFunction(PricingKind.TABULATED, 10, 100,
                            markups=((Fraction(1), 0), (Fraction(2), 10), (Fraction(4), 14)))
    assert table(Fraction(3, 2)) == 15
    assert table(Fraction(3)) == 22
    assert table(Fraction(9)) == 24
    with pytest.raises(ValueError):
        linear()(Fraction(1, 2))


def test_pricing_function_rejects_bad_parameters():
    with pytest.raises(ValueError):
        PricingFunction(PricingKind.LINEAR_CAPPED, 10, 5)
    with pytest.raises(ValueError):
        PricingFunction(PricingKind.CONCAVE_POWER, 10, 50, exponent=1.5)
    with pytest.raises(ValueError):
        PricingFunction(PricingKind.TABULATED, 10, 50, markups=((Fraction(2), 0),))


def test_quote_at_floor_when_demand_fits():
    quote = solve_equilibrium_quote(linear(), lambda p: 4, 8)
    assert quote.price == 10
    assert not quote.clamped


def test_quote_constant_demand_closed_form():
    quote = solve_equilibrium_quote(linear(), lambda p: 8, 4)
    assert quote.price == 20
    assert grid_scan_quote(linear(), lambda p: 8, 4) == 20


def test_quote_matches_grid_scan_on_linear_demand():
    f = linear(slope=Fraction(1, 2))

    def demand(price):
        return max(0, 100 - price)

    quote = solve_equilibrium_quote(f, demand, 20)
    assert quote.price == grid_scan_quote(f, demand, 20) == 24
    assert quote.evaluations < 20


def test_quote_rejects_increasing_demand():
    with pytest.raises(MonotonicityViolation):
        solve_equilibrium_quote(linear(), lambda p: p, 4)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 40), st.integers(1, 20), st.integers(0, 150), st.integers(1, 4),
       st.fractions(min_value=Fraction(1, 4), max_value=4, max_denominator=8))
def test_bisection_equals_grid_scan(floor_price, floor_supply, start, step, slope):
    f = linear(floor_price, floor_price + 120, slope)

    def demand(price):
        return max(0, start - price // step)

    assert solve_equilibrium_quote(f, demand, floor_supply).price == grid_scan_quote(f, demand, floor_supply)


def test_admissibility_constant_curves():
    report = check_admissibility(lambda p: 10, lambda p: 4, 10, 10, 50)
    assert report.admissible
    assert report.threshold == 10


def test_admissibility_reports_missing_threshold():
    report = check_admissibility(lambda p: 1, lambda p: 5, 20, 10, 30)
    assert not report.admissible
    assert report.threshold is None


def test_steep_markup_reaches_admissible_price():
    floor_price, floor_supply, gap = 10, 4, 6
    threshold = floor_price + gap

    def supply(price):
        return floor_supply + max(0, price - floor_price) // 2

    def demand(price):
        return max(0, supply(price) + threshold - price)

    f = linear(floor_price, 100, Fraction(floor_supply * gap, floor_price))
    quote = solve_equilibrium_quote(f, demand, floor_supply)
    report = check_admissibility(supply, demand, quote.price, floor_price, 100)
    assert report.threshold == threshold
    assert quote.price >= threshold
    assert report.admissible


def test_update_floor_examples():
    assert update_floor([10, 10, 10], 3, 10) == 10
    assert update_floor([10, 14, 12], 3, 10) == 12
    assert update_floor([10, 14, 12], 5, 10) == 11
    assert update_floor([None, 14], 2, 10) == 12
    assert update_floor([10, 11], 2, 10) == 10
    with pytest.raises(ValueError):
        update_floor([], 3, 10)


def test_round_half_down():
    assert round_half_down(Fraction(21, 2)) == 10
    assert round_half_down(Fraction(56, 5)) == 11
    assert round_half_down(Fraction(53, 5)) == 11
    assert round_half_down(Fraction(-1, 2)) == -1


if __name__ == "__main__":
    pytest.main([__file__])
