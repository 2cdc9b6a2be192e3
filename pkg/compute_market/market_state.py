"""The period loop of the market.

Each period: admit arrivals, measure floor supply and demand, post the equilibrium
quote, let users pick hours, match in queue order, settle the hour, then roll over
finished work, expired jobs and provider availability.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional
import logging

from .demand import EmpiricalDemandCurve, aggregate_supply, choose_hours
from .market_errors import InconsistentState, NoFloorSupply
from .market_types import (GsmFallback, JobSpec, JobStatus, MatchingAlgorithm, MatchLedger,
                           MatchRecord, Money, PeriodReport, ProviderRecord, ProviderState,
                           RestakePolicy)
from .matching import PoolEntry, build_pool
from .payout import PayoutLedger
from .pricing import PricingFunction, compute_load, solve_equilibrium_quote, update_floor

logger = logging.getLogger(__name__)


@dataclass
class MarketParams:
    """Floor, pricing rule, horizon and the floor-update window"""
    pricing: PricingFunction
    horizon: int
    floor_window: int = 1
    floor_update: bool = False
    reoptimize: bool = True

    @property
    def floor_price(self) -> Money:
        return self.pricing.floor_price

    @property
    def b_max(self) -> Money:
        return self.pricing.b_max


@dataclass
class MarketState:
    """Mutable state of one market instance"""
    providers: Dict[int, ProviderRecord]
    jobs: Dict[int, JobSpec]
    floor_price: Money
    period: int = 0
    queue: List[int] = field(default_factory=list)
    posted_price: Optional[Money] = None
    ledger: MatchLedger = field(default_factory=MatchLedger)
    payouts: PayoutLedger = field(default_factory=PayoutLedger)
    cost_history: List[Optional[Money]] = field(default_factory=list)
    history: List[PeriodReport] = field(default_factory=list)

    @classmethod
    def create(cls, providers: List[ProviderRecord], jobs: List[JobSpec], floor_price: Money) -> 'MarketState':
        return cls(
            providers={p.provider_id: p for p in providers},
            jobs={j.job_id: j for j in jobs},
            floor_price=floor_price,
        )

    def staked_providers(self) -> List[ProviderRecord]:
        return [p for p in self.providers.values() if p.staked]


def _check_consistency(state: MarketState) -> None:
    for provider in state.providers.values():
        if provider.state is ProviderState.ASSIGNED:
            if provider.remaining <= 0:
                raise InconsistentState(f"provider {provider.provider_id} assigned with zero remaining")
            if provider.assigned_job is None or provider.match_start is None:
                raise InconsistentState(f"provider {provider.provider_id} assigned without a job")


def _admit_arrivals(state: MarketState) -> None:
    t = state.period
    for provider in sorted(state.providers.values(), key=lambda p: p.provider_id):
        if provider.arrival == t and not provider.staked:
            provider.staked = True
            provider.remaining = provider.initial_stake
            provider.state = ProviderState.IDLE
            if provider.misreported:
                logger.warning(f"provider {provider.provider_id} reports {provider.reported_cost} below cost {provider.true_cost}")
    for job in sorted(state.jobs.values(), key=lambda j: j.job_id):
        if job.arrival == t and job.status is JobStatus.PENDING and job.job_id not in state.queue:
            state.queue.append(job.job_id)


def _fixed_hours(job: JobSpec, params: MarketParams) -> Optional[int]:
    if job.status is JobStatus.RESIDUAL:
        return job.outstanding_hours
    if not params.reoptimize and job.chosen_hours:
        return job.chosen_hours
    return None


def _quote(state: MarketState, params: MarketParams, pricing: PricingFunction, report_flags: Dict) -> Money:
    t = state.period
    queued = [state.jobs[j] for j in state.queue]
    backlog = sum(1 for job in queued if _fixed_hours(job, params) is not None)
    users = [job for job in queued if _fixed_hours(job, params) is None]
    curve = EmpiricalDemandCurve(users, backlog, t)
    floor_supply = aggregate_supply(state.providers.values(), pricing.floor_price)
    report_flags["floor_supply"] = floor_supply
    report_flags["curve"] = curve
    try:
        quote = solve_equilibrium_quote(pricing, curve, floor_supply, validate=False)
    except NoFloorSupply:
        logger.warning(f"period {t}: demand without floor supply, posting b_max {pricing.b_max}")
        report_flags["no_floor_supply"] = True
        return pricing.b_max
    report_flags["clamped"] = quote.clamped
    return quote.price


def advance_period(state: MarketState, params: MarketParams, algorithm: MatchingAlgorithm,
                   fallback: GsmFallback = GsmFallback.REJECT) -> PeriodReport:
    """Run one period of the market and return its report"""
    try:
        _check_consistency(state)
    except InconsistentState as exc:
        logger.error(f"period {state.period}: {exc}")
        raise
    t = state.period
    pricing = params.pricing.with_floor(state.floor_price)

    # 1. arrivals, floor supply and demand
    _admit_arrivals(state)
    flags: Dict = {"clamped": False, "no_floor_supply": False}
    price = _quote(state, params, pricing, flags)
    state.posted_price = price
    demand = flags["curve"](price)
    try:
        alpha: Optional[Fraction] = compute_load(demand, flags["floor_supply"])
    except NoFloorSupply:
        alpha = None
    report = PeriodReport(
        period=t,
        price=price,
        alpha=alpha,
        floor_price=state.floor_price,
        floor_supply=flags["floor_supply"],
        demand=demand,
        clamped=flags["clamped"],
        no_floor_supply=flags["no_floor_supply"],
    )

    # 2. provider activity at the posted price
    for provider in state.staked_providers():
        if provider.state is not ProviderState.ASSIGNED:
            provider.state = ProviderState.IDLE if provider.reported_cost <= price else ProviderState.DORMANT

    # 3. hour selection, matching, settlement
    submissions = []
    for job_id in state.queue:
        job = state.jobs[job_id]
        hours = _fixed_hours(job, params)
        if hours is None:
            hours = choose_hours(job, price, job.periods_left(t))
            if hours == 0:
                continue
            job.chosen_hours = hours
            job.locked_price = price
        submissions.append((job, hours))
    report.submitted = len(submissions)

    idle = [p for p in state.staked_providers() if p.state is ProviderState.IDLE]
    entries = [PoolEntry(p.provider_id, p.remaining, p.reported_cost) for p in idle]
    pool = build_pool(algorithm, entries, fallback, c_max=price)
    for job, hours in submissions:
        had_supply = len(pool) > 0
        outcome = pool.match(hours)
        if outcome is None:
            if had_supply:
                report.rejected += 1
            continue
        provider = state.providers[outcome.provider_id]
        worked = min(hours, outcome.tau)
        record = MatchRecord(provider.provider_id, job.job_id, t, price, provider.reported_cost,
                             worked, outcome.feasible)
        state.ledger.add(record)
        report.matches.append(record)
        provider.state = ProviderState.ASSIGNED
        provider.assigned_job = job.job_id
        provider.match_start = t
        job.status = JobStatus.RUNNING
        job.outstanding_hours = hours - worked
        state.queue.remove(job.job_id)
        logger.debug(f"period {t}: job {job.job_id} ({hours}h) -> provider {provider.provider_id} "
                     f"tau={outcome.tau} feasible={outcome.feasible}")

    settlements, delta = state.payouts.settle_hour(t, state.ledger, state.jobs)
    report.settlements = settlements
    report.treasury_delta = delta
    if report.matches:
        report.max_matched_cost = max(m.reported_cost for m in report.matches)
    report.matched_cost_total = sum(m.reported_cost for m in report.matches)

    # 4. rollover
    for record in state.ledger.working_at(t):
        if record.last_hour != t:
            continue
        provider = state.providers[record.provider_id]
        provider.state = ProviderState.IDLE
        provider.assigned_job = None
        provider.match_start = None
        job = state.jobs[record.job_id]
        if job.outstanding_hours:
            job.status = JobStatus.RESIDUAL
            state.queue.append(job.job_id)
        else:
            job.status = JobStatus.FINISHED
            report.completed += 1
    for job_id in list(state.queue):
        job = state.jobs[job_id]
        if job.status is JobStatus.PENDING and job.periods_left(t + 1) <= 0:
            job.status = JobStatus.REJECTED
            state.queue.remove(job_id)
            report.expired += 1
    decay_and_restake(state)
    state.cost_history.append(report.max_matched_cost)
    if params.floor_update:
        state.floor_price = update_floor(state.cost_history, params.floor_window, state.floor_price)
    state.history.append(report)
    state.period += 1
    logger.info(f"period {t}: P={price} alpha={alpha} S_f={report.floor_supply} D={demand} "
                f"matched={report.matched} infeasible={report.infeasible}")
    return report


def decay_and_restake(state: MarketState) -> MarketState:
    """One period of availability decay; cyclic providers restake at the end of a cycle"""
    for provider in state.staked_providers():
        if provider.restake_policy is RestakePolicy.CYCLIC:
            provider.remaining = provider.initial_stake if provider.remaining <= 1 else provider.remaining - 1
            continue
        provider.remaining = max(provider.remaining - 1, 0)
        if provider.remaining == 0:
            provider.staked = False
            provider.state = ProviderState.DORMANT
            logger.debug(f"provider {provider.provider_id} stake exhausted")
    return state


def run_market(state: MarketState, params: MarketParams, algorithm: MatchingAlgorithm,
               fallback: GsmFallback = GsmFallback.REJECT) -> List[PeriodReport]:
    reports = []
    while state.period < params.horizon:
        reports.append(advance_period(state, params, algorithm, fallback))
    return reports
