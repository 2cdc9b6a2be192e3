"""Stake-and-tolerance provider race.

Pre-selected providers quote completion times for a job of unknown size; the lowest
quote wins and is paid its quoted hours at the market price. A winner delivering outside
the tolerance window loses its stake.
"""
import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .market_errors import InvalidStake, NoRacers
from .market_types import Money
from .matching import PoolEntry, tau_order
from .seeding import stream

logger = logging.getLogger(__name__)

VerifyHook = Callable[[int, int], bool]


@dataclass(frozen=True)
class RaceConfig:
    price: Money
    stake: Money
    epsilon: int
    true_times: Tuple[int, ...]
    quotes: Tuple[int, ...]
    one_sided: bool = False

    @property
    def racers(self) -> int:
        return len(self.true_times)

    def grid(self) -> List[int]:
        return list(range(0, max(self.true_times) + self.epsilon + 3))

    def affordable_grid(self) -> List[int]:
        return [q for q in self.grid() if self.price * q < self.stake]

    def validate(self, grid: Optional[Sequence[int]] = None) -> 'RaceConfig':
        """Check the racers and that the stake exceeds every reward; quotes only unless a grid is given"""
        if not self.true_times:
            raise NoRacers("race has no racers")
        if len(self.quotes) != len(self.true_times):
            raise ValueError("one quote per racer required")
        if self.epsilon < 0:
            raise ValueError("tolerance must be non-negative")
        top = self.price * max(self.quotes if grid is None else grid, default=0)
        if self.stake <= top:
            raise InvalidStake(f"stake {self.stake} must exceed the largest reward {top}")
        return self

    def with_quotes(self, quotes: Sequence[int]) -> 'RaceConfig':
        return RaceConfig(self.price, self.stake, self.epsilon, self.true_times, tuple(quotes), self.one_sided)


@dataclass(frozen=True)
class RaceOutcome:
    winner: int
    quote: int
    true_time: int
    paid: Money
    stake_returned: bool

    def payoff(self, stake: Money) -> Money:
        return self.paid - (0 if self.stake_returned else stake)


def select_racers(providers: Sequence[PoolEntry], n: int, w_max: int) -> List[PoolEntry]:
    """The n cheapest providers able to run the largest possible job"""
    order = {e.provider_id: i for i, e in enumerate(tau_order(providers))}
    eligible = sorted((p for p in providers if p.tau >= w_max), key=lambda p: (p.cost, order[p.provider_id]))
    if not eligible or n < 1:
        raise NoRacers(f"no provider can host a job of {w_max} hours")
    return eligible[:n]


def on_time(true_time: int, quote: int, epsilon: int, one_sided: bool = False) -> bool:
    if one_sided:
        return true_time <= quote + epsilon
    return abs(true_time - quote) <= epsilon


def winner_of(quotes: Sequence[int]) -> int:
    return min(range(len(quotes)), key=lambda i: (quotes[i], i))


def run_race(config: RaceConfig, verify: Optional[VerifyHook] = None) -> RaceOutcome:
    """Select the lowest quote, deliver, and settle reward and stake"""
    config.validate()
    i = winner_of(config.quotes)
    quote, true_time = config.quotes[i], config.true_times[i]
    delivered = on_time(true_time, quote, config.epsilon, config.one_sided)
    if verify is not None and not verify(i, true_time):
        logger.warning(f"racer {i}: delivery failed verification, stake forfeited")
        return RaceOutcome(i, quote, true_time, 0, False)
    if not delivered:
        logger.info(f"racer {i}: delivered at {true_time} against quote {quote}, stake forfeited")
    return RaceOutcome(i, quote, true_time, config.price * quote, delivered)


def undominated_interval(true_time: int, epsilon: int) -> Tuple[int, int]:
    return max(0, true_time - epsilon), true_time + epsilon


@dataclass
class BestResponse:
    racer: int
    grid: List[int]
    payoffs: np.ndarray  # quotes x opponent profiles
    undominated: List[int] = field(default_factory=list)

    @property
    def best_quotes(self) -> List[int]:
        means = self.payoffs.mean(axis=1)
        return [q for q, m in zip(self.grid, means) if m == means.max()]


def _dominated(table: np.ndarray) -> List[bool]:
    flags = []
    for a in range(table.shape[0]):
        weakly = np.all(table >= table[a], axis=1) & np.any(table > table[a], axis=1)
        flags.append(bool(weakly.any()))
    return flags


def best_response_scan(config: RaceConfig, racer: int, grid: Optional[Sequence[int]] = None) -> BestResponse:
    """Payoff of every grid quote against every profile of opponent quotes on the same grid"""
    grid = list(grid) if grid is not None else config.validate().grid()
    config.validate(grid)
    opponents = [j for j in range(config.racers) if j != racer]
    profiles = np.array(list(product(grid, repeat=len(opponents))), dtype=np.int64).reshape(-1, len(opponents))
    ids = np.array(opponents, dtype=np.int64)
    quotes = np.array(grid, dtype=np.int64)[:, None, None]
    # racer wins against an opponent with a higher quote, or an equal quote and a higher id
    beats = (quotes < profiles[None]) | ((quotes == profiles[None]) & (racer < ids[None, None]))
    wins = beats.all(axis=2)
    true_time = config.true_times[racer]
    delivered = np.array([on_time(true_time, q, config.epsilon, config.one_sided) for q in grid])
    reward = config.price * np.array(grid, dtype=np.int64) - np.where(delivered, 0, config.stake)
    table = np.where(wins, reward[:, None], 0)
    flags = _dominated(table)
    undominated = [q for q, dominated in zip(grid, flags) if not dominated]
    logger.debug(f"racer {racer}: undominated quotes {undominated}")
    return BestResponse(racer, grid, table, undominated)


@dataclass
class RaceCheck:
    config: RaceConfig
    windows_hold: bool
    selection_optimal: bool
    quote_error: int

    @property
    def passed(self) -> bool:
        return self.windows_hold and self.selection_optimal and self.quote_error <= self.config.epsilon


def lowest_undominated_quotes(config: RaceConfig) -> Tuple[int, ...]:
    return tuple(undominated_interval(t, config.epsilon)[0] for t in config.true_times)


def check_race(config: RaceConfig) -> RaceCheck:
    """Scan every racer's best responses, then race everyone at their lowest undominated quote"""
    windows_hold = True
    for racer, t in enumerate(config.true_times):
        low, high = undominated_interval(t, config.epsilon)
        scan = best_response_scan(config, racer)
        windows_hold &= all(low <= q <= high for q in scan.undominated)
    outcome = run_race(config.with_quotes(lowest_undominated_quotes(config)))
    fastest = min(config.true_times)
    return RaceCheck(config, windows_hold, outcome.true_time == fastest, abs(outcome.quote - fastest))


def random_race_configs(count: int, seed: int, max_racers: int = 3) -> List[RaceConfig]:
    configs = []
    for index in range(count):
        rng = stream(seed, "race", index)
        epsilon = int(rng.integers(0, 3))
        n = int(rng.integers(2, max_racers + 1))
        true_times = tuple(int(t) for t in rng.integers(epsilon + 1, epsilon + 11, size=n))
        price = int(rng.integers(10, 51))
        top = max(true_times) + epsilon + 2
        configs.append(RaceConfig(price, price * top + 1, epsilon, true_times, true_times))
    return configs
