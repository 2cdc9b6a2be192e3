"""Common type definitions for the market engine"""
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from fractions import Fraction
from math import floor
from typing import Dict, List, Optional, Tuple, Union
import logging

from .market_errors import LedgerViolation, OutOfSupport

logger = logging.getLogger(__name__)

# Money is an integer count of ticks; one tick is 0.1 currency units.
Money = int
TICKS_PER_UNIT = 10


def parse_money(value: Union[str, int, float, Decimal]) -> Money:
    """Convert a decimal currency amount into ticks, rejecting sub-tick precision"""
    try:
        amount = Decimal(str(value))
    except InvalidOperation as exc:
        raise ValueError(f"not a decimal amount: {value!r}") from exc
    ticks = amount * TICKS_PER_UNIT
    if ticks != ticks.to_integral_value():
        raise ValueError(f"{value!r} is not a multiple of 0.1")
    return int(ticks)


def format_money(ticks: Money) -> str:
    """Render ticks as a decimal with one fractional digit"""
    sign = "-" if ticks < 0 else ""
    whole, tenth = divmod(abs(ticks), TICKS_PER_UNIT)
    return f"{sign}{whole}.{tenth}"


def round_half_down(value: Fraction) -> int:
    """Round to the nearest integer, sending exact halves downward"""
    base = floor(value)
    if value - base > Fraction(1, 2):
        return base + 1
    return base


class ProviderState(Enum):
    DORMANT = "dormant"
    IDLE = "idle"
    ASSIGNED = "assigned"


class RestakePolicy(Enum):
    NONE = "none"
    CYCLIC = "cyclic"


class JobStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    FINISHED = "finished"
    REJECTED = "rejected"
    RESIDUAL = "residual"


class MatchingAlgorithm(Enum):
    GCM = "gcm"
    GSM = "gsm"
    CFM = "cfm"


class GsmFallback(Enum):
    REJECT = "reject"
    LONGEST = "longest"


@dataclass(frozen=True)
class ValueFunction:
    """Tabulated job value v(0..K) in tick-hours; v(0) must be 0"""
    values: Tuple[int, ...]
    kind: str = "tabulated"

    def __post_init__(self):
        if not self.values or self.values[0] != 0:
            raise ValueError("value table must start with v(0) = 0")

    @classmethod
    def tabulated(cls, values: List[int]) -> 'ValueFunction':
        return cls(tuple(int(v) for v in values), "tabulated")

    @classmethod
    def power_family(cls, scale: float, exponent: float, support: int) -> 'ValueFunction':
        """Sample scale * w**exponent as floored marginals of at least one tick-hour"""
        if not 0 < exponent <= 1:
            raise ValueError("exponent must lie in (0, 1]")
        values = [0]
        for w in range(1, support + 1):
            gain = max(1, floor(scale * (w ** exponent - (w - 1) ** exponent)))
            values.append(values[-1] + gain)
        return cls(tuple(values), "power")

    @property
    def support(self) -> int:
        return len(self.values) - 1

    def value(self, hours: int) -> int:
        if not 0 <= hours <= self.support:
            raise OutOfSupport(f"hours {hours} outside support 0..{self.support}")
        return self.values[hours]

    def marginal(self, hours: int) -> int:
        if not 1 <= hours <= self.support:
            raise OutOfSupport(f"hours {hours} outside support 1..{self.support}")
        return self.values[hours] - self.values[hours - 1]

    def is_concave(self) -> bool:
        gains = [self.marginal(w) for w in range(1, self.support + 1)]
        return all(g > 0 for g in gains) and all(a >= b for a, b in zip(gains, gains[1:]))


@dataclass
class ProviderRecord:
    """A staked supplier and its availability"""
    provider_id: int
    true_cost: Money
    reported_cost: Money
    initial_stake: int
    remaining: int = 0
    state: ProviderState = ProviderState.DORMANT
    assigned_job: Optional[int] = None
    match_start: Optional[int] = None
    restake_policy: RestakePolicy = RestakePolicy.NONE
    arrival: int = 0
    staked: bool = False

    @property
    def misreported(self) -> bool:
        return self.reported_cost < self.true_cost

    def to_dict(self) -> Dict:
        return {
            "provider_id": self.provider_id,
            "true_cost": self.true_cost,
            "reported_cost": self.reported_cost,
            "initial_stake": self.initial_stake,
            "remaining": self.remaining,
            "state": self.state.value,
            "assigned_job": self.assigned_job,
            "match_start": self.match_start,
            "restake_policy": self.restake_policy.value,
            "arrival": self.arrival,
            "staked": self.staked,
        }


@dataclass
class JobSpec:
    """A unit of demand: budget, deadline, minimum viable run and value"""
    job_id: int
    budget: Money
    deadline: int
    min_run: int
    value_fn: ValueFunction
    arrival: int = 0
    chosen_hours: Optional[int] = None
    status: JobStatus = JobStatus.PENDING
    locked_price: Optional[Money] = None
    outstanding_hours: Optional[int] = None  # set once matched; residual hours after an infeasible match

    def periods_left(self, period: int) -> int:
        return self.deadline - (period - self.arrival)


@dataclass(frozen=True)
class MatchRecord:
    """One provider-job pair with its match-time price"""
    provider_id: int
    job_id: int
    period: int
    price: Money
    reported_cost: Money
    hours: int  # hours the provider works on this match
    feasible: bool

    @property
    def last_hour(self) -> int:
        return self.period + self.hours - 1

    def covers(self, hour: int) -> bool:
        return self.period <= hour <= self.last_hour

    def to_dict(self) -> Dict:
        return {
            "provider_id": self.provider_id,
            "job_id": self.job_id,
            "period": self.period,
            "price": self.price,
            "reported_cost": self.reported_cost,
            "hours": self.hours,
            "feasible": self.feasible,
        }


@dataclass
class MatchLedger:
    """All matches of a run, kept a partial bijection per period"""
    records: List[MatchRecord] = field(default_factory=list)
    # lookups by start period, by covered hour and by provider; filled by add()
    _by_period: Dict[int, List[MatchRecord]] = field(default_factory=dict, init=False, repr=False, compare=False)
    _by_hour: Dict[int, List[MatchRecord]] = field(default_factory=dict, init=False, repr=False, compare=False)
    _by_provider: Dict[int, List[MatchRecord]] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for record in self.records:
            self._index(record)

    def _index(self, record: MatchRecord) -> None:
        self._by_period.setdefault(record.period, []).append(record)
        self._by_provider.setdefault(record.provider_id, []).append(record)
        for hour in range(record.period, record.last_hour + 1):
            self._by_hour.setdefault(hour, []).append(record)

    def add(self, record: MatchRecord) -> None:
        for other in self.for_period(record.period):
            if other.provider_id == record.provider_id or other.job_id == record.job_id:
                raise LedgerViolation(
                    f"period {record.period}: provider {record.provider_id} / job {record.job_id} already matched"
                )
        self.records.append(record)
        self._index(record)

    def for_period(self, period: int) -> List[MatchRecord]:
        return list(self._by_period.get(period, ()))

    def working_at(self, hour: int) -> List[MatchRecord]:
        return list(self._by_hour.get(hour, ()))

    def for_provider(self, provider_id: int) -> List[MatchRecord]:
        return list(self._by_provider.get(provider_id, ()))


@dataclass
class PeriodReport:
    """Everything one period computed, in loop order"""
    period: int
    price: Money
    alpha: Optional[Fraction]
    floor_price: Money
    floor_supply: int
    demand: int
    clamped: bool = False
    no_floor_supply: bool = False
    submitted: int = 0
    rejected: int = 0
    expired: int = 0
    matches: List[MatchRecord] = field(default_factory=list)
    settlements: List['Settlement'] = field(default_factory=list)
    treasury_delta: Fraction = Fraction(0)
    max_matched_cost: Optional[Money] = None
    matched_cost_total: Money = 0
    completed: int = 0

    @property
    def matched(self) -> int:
        return len(self.matches)

    @property
    def infeasible(self) -> int:
        return sum(1 for m in self.matches if not m.feasible)

    def trace(self) -> Dict:
        """Compact view used by golden traces"""
        return {
            "period": self.period,
            "price": self.price,
            "alpha": str(self.alpha) if self.alpha is not None else None,
            "floor_supply": self.floor_supply,
            "demand": self.demand,
            "matched": self.matched,
            "infeasible": self.infeasible,
            "max_matched_cost": self.max_matched_cost,
            "matches": [[m.provider_id, m.job_id, m.hours, m.feasible] for m in self.matches],
            "paid": [[s.provider_id, s.paid] for s in self.settlements],
            "treasury_delta": str(self.treasury_delta),
        }


@dataclass(frozen=True)
class Settlement:
    """One provider's pay for one worked hour"""
    period: int
    provider_id: int
    job_id: int
    base: Money
    premium_share: Fraction
    exact: Fraction
    paid: Money
    carry: Fraction
    cumulative: Money
    user_price: Money
