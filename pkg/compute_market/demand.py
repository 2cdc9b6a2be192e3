"""User hour choice and aggregate demand and supply counts"""
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .market_errors import HourChoiceMismatch, NotConcave
from .market_types import JobSpec, Money, ProviderRecord, ValueFunction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UserDecision:
    job_id: int
    price: Money
    cap: int  # U_d(P)
    marginal_count: int  # h_d(P)
    chosen: int  # 0 means no submission


def marginal_gain(value_fn: ValueFunction, hours: int) -> int:
    return value_fn.marginal(hours)


def marginal_count(value_fn: ValueFunction, price: Money) -> int:
    """Largest m with every marginal gain up to m at least the price"""
    count = 0
    for w in range(1, value_fn.support + 1):
        if value_fn.marginal(w) < price:
            break
        count = w
    return count


def _direct_argmax(value_fn: ValueFunction, price: Money, low: int, high: int) -> int:
    best_hours, best_surplus = 0, 0
    for w in range(low, high + 1):
        surplus = value_fn.value(w) - price * w
        if surplus >= best_surplus:
            best_hours, best_surplus = w, surplus
    return best_hours


def decide_hours(job: JobSpec, price: Money, periods_left: Optional[int] = None) -> UserDecision:
    """Closed-form hour choice, cross-checked against an exhaustive argmax"""
    if price < 1:
        raise ValueError("price must be at least one tick")
    value_fn = job.value_fn
    if not value_fn.is_concave():
        raise NotConcave(f"job {job.job_id} value function is not increasing and concave")
    deadline = job.deadline if periods_left is None else periods_left
    affordable = job.budget // price
    cap = max(0, min(affordable, deadline, value_fn.support))
    h = marginal_count(value_fn, price)
    if affordable < job.min_run or cap < job.min_run:
        return UserDecision(job.job_id, price, cap, h, 0)
    hours = min(affordable, max(job.min_run, h), cap)
    if value_fn.value(hours) - price * hours < 0:
        hours = 0
    direct = _direct_argmax(value_fn, price, job.min_run, cap)
    if direct != hours:
        raise HourChoiceMismatch(f"job {job.job_id} at P={price}: formula {hours}, argmax {direct}")
    return UserDecision(job.job_id, price, cap, h, hours)


def choose_hours(job: JobSpec, price: Money, periods_left: Optional[int] = None) -> int:
    return decide_hours(job, price, periods_left).chosen


def aggregate_demand(population: Iterable[JobSpec], price: Money) -> int:
    return sum(1 for job in population if choose_hours(job, price) > 0)


def aggregate_hours(population: Iterable[JobSpec], price: Money) -> int:
    return sum(choose_hours(job, price) for job in population)


def aggregate_supply(providers: Iterable[ProviderRecord], price: Money) -> int:
    return sum(1 for p in providers if p.staked and p.reported_cost <= price)


class EmpiricalDemandCurve:
    """Step demand of one period: fixed backlog plus users who would submit at P"""

    def __init__(self, users: Sequence[JobSpec], backlog: int, period: int):
        self.users = list(users)
        self.backlog = backlog
        self.period = period

    def __call__(self, price: Money) -> int:
        if price < 1:
            return self.backlog + len(self.users)
        return self.backlog + sum(
            1 for job in self.users if choose_hours(job, price, job.periods_left(self.period)) > 0
        )


class EmpiricalSupplyCurve:
    """Count of staked providers reporting at or below P"""

    def __init__(self, providers: Iterable[ProviderRecord]):
        self.costs = sorted(p.reported_cost for p in providers if p.staked)

    def __call__(self, price: Money) -> int:
        return sum(1 for c in self.costs if c <= price)
