"""Pool-sharing settlement.

A provider working at hour h is paid its reported cost plus an equal share of the
premium pool of its cohort: every provider working at h whose match started at or after
its own match. Shares are exact fractions; cash payouts round half down to the tick and
carry the remainder per provider.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

from .market_errors import NotWorking
from .market_types import JobSpec, MatchLedger, MatchRecord, Money, Settlement, round_half_down

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PremiumPoolView:
    hour: int
    anchor: int
    members: Tuple[int, ...]
    pool: Money
    size: int


def premium_pool(ledger: MatchLedger, hour: int, anchor: int) -> PremiumPoolView:
    members = [r for r in ledger.working_at(hour) if r.period >= anchor]
    pool = sum(r.price - r.reported_cost for r in members)
    return PremiumPoolView(hour, anchor, tuple(sorted(r.provider_id for r in members)), pool, len(members))


def active_record(provider_id: int, hour: int, ledger: MatchLedger) -> MatchRecord:
    for record in ledger.working_at(hour):
        if record.provider_id == provider_id:
            return record
    raise NotWorking(f"provider {provider_id} is not working at hour {hour}")


def hourly_payment(provider_id: int, hour: int, ledger: MatchLedger) -> Fraction:
    """Exact hourly payment: reported cost plus the anchored pool divided by its size"""
    record = active_record(provider_id, hour, ledger)
    view = premium_pool(ledger, hour, record.period)
    return record.reported_cost + Fraction(view.pool, view.size)


def total_return(provider_id: int, ledger: MatchLedger, horizon: Optional[int] = None) -> Fraction:
    total = Fraction(0)
    for record in ledger.for_provider(provider_id):
        last = record.last_hour if horizon is None else min(record.last_hour, horizon - 1)
        for hour in range(record.period, last + 1):
            total += hourly_payment(provider_id, hour, ledger)
    return total


@dataclass
class PayoutLedger:
    """Cash settlement with per-provider sub-tick carry"""
    carries: Dict[int, Fraction] = field(default_factory=dict)
    cumulative: Dict[int, Money] = field(default_factory=dict)
    rows: List[Settlement] = field(default_factory=list)

    def settle_hour(self, hour: int, ledger: MatchLedger,
                    jobs: Mapping[int, JobSpec]) -> Tuple[List[Settlement], Fraction]:
        """Pay every provider working at `hour`; return rows and the treasury delta"""
        settled = []
        revenue = Fraction(0)
        outlay = Fraction(0)
        for record in sorted(ledger.working_at(hour), key=lambda r: r.provider_id):
            exact = hourly_payment(record.provider_id, hour, ledger)
            owed = exact + self.carries.get(record.provider_id, Fraction(0))
            paid = round_half_down(owed)
            carry = owed - paid
            self.carries[record.provider_id] = carry
            self.cumulative[record.provider_id] = self.cumulative.get(record.provider_id, 0) + paid
            job = jobs.get(record.job_id)
            user_price = job.locked_price if job is not None and job.locked_price is not None else record.price
            row = Settlement(
                period=hour,
                provider_id=record.provider_id,
                job_id=record.job_id,
                base=record.reported_cost,
                premium_share=exact - record.reported_cost,
                exact=exact,
                paid=paid,
                carry=carry,
                cumulative=self.cumulative[record.provider_id],
                user_price=user_price,
            )
            settled.append(row)
            revenue += user_price
            outlay += exact
        self.rows.extend(settled)
        delta = revenue - outlay
        if delta:
            logger.debug(f"hour {hour}: treasury delta {delta}")
        return settled, delta
