"""Test the stake-and-tolerance race and its best-response tables"""
import pytest

from .market_errors import InvalidStake, NoRacers
from .matching import PoolEntry
from .race import (
    RaceConfig, best_response_scan, check_race, lowest_undominated_quotes, on_time, random_race_configs,
    run_race, select_racers, undominated_interval, winner_of,
)


def config(true_times, quotes=None, epsilon=1, price=10, stake=1000, one_sided=False):
    return RaceConfig(price, stake, epsilon, tuple(true_times), tuple(quotes or true_times), one_sided)


def test_lowest_quote_wins_and_is_paid():
    outcome = run_race(config((5, 7), (4, 6)))
    assert (outcome.winner, outcome.quote, outcome.true_time) == (0, 4, 5)
    assert outcome.paid == 40
    assert outcome.stake_returned
    assert outcome.payoff(1000) == 40


def test_ties_go_to_the_lower_index():
    assert winner_of([3, 2, 2]) == 1


def test_late_delivery_forfeits_the_stake():
    outcome = run_race(config((5, 7), (2, 6)))
    assert outcome.winner == 0
    assert not outcome.stake_returned
    assert outcome.payoff(1000) == 20 - 1000


def test_failed_verification_pays_nothing():
    outcome = run_race(config((5, 7), (5, 6)), verify=lambda racer, hours: False)
    assert outcome.paid == 0
    assert not outcome.stake_returned


def test_tolerance_window():
    assert on_time(5, 4, 1)
    assert not on_time(5, 3, 1)
    assert not on_time(2, 5, 0)
    assert on_time(2, 5, 0, one_sided=True)
    assert undominated_interval(1, 2) == (0, 3)


def test_stake_must_exceed_every_quoted_reward():
    with pytest.raises(InvalidStake):
        config((3,), epsilon=0, stake=30).validate()
    assert config((3,), epsilon=0, stake=31).validate()


def test_scans_need_a_stake_above_every_grid_reward():
    cheap = config((3,), epsilon=0, stake=50)
    with pytest.raises(InvalidStake):
        best_response_scan(cheap, 0)
    assert config((3,), epsilon=0, stake=51).validate(cheap.grid())


def test_race_accepts_stake_between_quote_and_grid_bounds():
    race = RaceConfig(price=1, stake=8, epsilon=1, true_times=(5, 7), quotes=(4, 6))
    outcome = run_race(race)
    assert (outcome.winner, outcome.paid, outcome.stake_returned) == (0, 4, True)
    with pytest.raises(InvalidStake):
        best_response_scan(race, 0)
    assert race.affordable_grid() == list(range(8))
    assert best_response_scan(race, 0, race.affordable_grid()).grid == list(range(8))


def test_lowest_undominated_quotes():
    assert lowest_undominated_quotes(config((5, 7))) == (4, 6)
    assert lowest_undominated_quotes(config((2, 7), epsilon=3)) == (0, 4)


def test_race_needs_racers():
    with pytest.raises(NoRacers):
        RaceConfig(10, 100, 0, (), ()).validate()


def test_select_racers_cheapest_able_to_host():
    providers = [PoolEntry(0, 1, 1), PoolEntry(1, 5, 3), PoolEntry(2, 6, 2), PoolEntry(3, 5, 2)]
    assert [p.provider_id for p in select_racers(providers, 2, 5)] == [3, 2]
    with pytest.raises(NoRacers):
        select_racers(providers, 2, 9)


def test_exact_tolerance_leaves_only_the_true_time():
    race = config((3, 4), epsilon=0)
    assert best_response_scan(race, 0).undominated == [3]
    assert best_response_scan(race, 1).undominated == [4]


def test_payoff_table_shape():
    race = config((3, 4, 5), epsilon=1)
    scan = best_response_scan(race, 1)
    assert scan.payoffs.shape == (len(race.grid()), len(race.grid()) ** 2)
    assert all(2 <= q <= 6 for q in scan.best_quotes)
    assert all(3 <= q <= 5 for q in scan.undominated)


def test_random_races_hold_the_window_and_pick_the_fastest():
    for race in random_race_configs(6, seed=7):
        check = check_race(race)
        assert check.passed, race


if __name__ == "__main__":
    pytest.main([__file__])
