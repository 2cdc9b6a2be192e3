"""Regret metrics, worst-case instance builders and adversary searches.

Covers single-period regret against GCM and GSM, the tight-pair construction for CFM's
feasible-count shortfall, restake windows of two cyclic providers, an exhaustive
constrained adversary over one hyper-period, peel-and-load thresholds with a brute-force
cross-check, and Monte Carlo checks of truthful reporting and early staking.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from math import gcd
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core_config import get_config
from .market_errors import SizeLimit, UnsortedCapacities
from .market_state import MarketParams, MarketState, run_market
from .market_types import GsmFallback, JobSpec, MatchingAlgorithm, Money, ProviderRecord, ValueFunction
from .matching import PoolEntry, feasible_count, matched_cost, naive_select, run_online
from .payout import hourly_payment, total_return
from .pricing import PricingFunction, PricingKind
from .seeding import stream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MatchingInstance:
    providers: Tuple[PoolEntry, ...]
    jobs: Tuple[int, ...]
    price: Money = 0
    floor_price: Money = 0


@dataclass
class RegretReport:
    matcher: str
    s_regret: Money
    d_regret: int
    supply_bound: Money
    demand_bound: int
    bound_satisfied: bool


def s_regret(instance: MatchingInstance, algorithm: MatchingAlgorithm,
             fallback: GsmFallback = GsmFallback.REJECT) -> Money:
    """Matched cost minus the greedy-cheapest matched cost"""
    outcomes = run_online(algorithm, instance.providers, instance.jobs, fallback)
    reference = run_online(MatchingAlgorithm.GCM, instance.providers, instance.jobs)
    return matched_cost(outcomes) - matched_cost(reference)


def d_regret(instance: MatchingInstance, algorithm: MatchingAlgorithm,
             fallback: GsmFallback = GsmFallback.REJECT) -> int:
    """Feasible matches of reject-mode GSM minus those of the matcher; infeasible fallbacks count as misses"""
    reference = run_online(MatchingAlgorithm.GSM, instance.providers, instance.jobs, GsmFallback.REJECT)
    outcomes = run_online(algorithm, instance.providers, instance.jobs, fallback)
    return feasible_count(reference) - feasible_count(outcomes)


def supply_regret_bound(m: int, n: int, price: Money, floor_price: Money) -> Money:
    if price < floor_price:
        raise ValueError("price below floor")
    spread = price - floor_price
    if spread == 0 or n >= m:
        return 0
    if n <= m // 2:
        return spread * n
    return spread * (m - n)


def regret_report(instance: MatchingInstance, algorithm: MatchingAlgorithm,
                  fallback: GsmFallback = GsmFallback.REJECT) -> RegretReport:
    m, n = len(instance.providers), len(instance.jobs)
    s = s_regret(instance, algorithm, fallback)
    d = d_regret(instance, algorithm, fallback)
    s_bound = supply_regret_bound(m, n, instance.price, instance.floor_price)
    d_bound = n // 2
    return RegretReport(algorithm.value, s, d, s_bound, d_bound, s <= s_bound and d <= d_bound)


def build_tight_pair_instance(pairs: int, sorted_costs: bool = False, base_cost: Money = 3) -> MatchingInstance:
    """Pairs (short, costly) / (long, cheap); per pair an easy job then a threshold job.

    Pairs are released longest first, so CFM spends each long provider on the easy job
    and must place the threshold job on the short one.
    """
    if pairs < 1:
        raise ValueError("need at least one pair")
    top = 2 * pairs
    providers = []
    for tau in range(1, top + 1):
        cost = base_cost + 2 * (tau - 1) if sorted_costs else base_cost + 2 * (top - tau)
        providers.append(PoolEntry(tau - 1, tau, cost))
    jobs = []
    for k in reversed(range(pairs)):
        short, long = 2 * k + 1, 2 * k + 2
        jobs.extend([short, long])
    costs = [p.cost for p in providers]
    return MatchingInstance(tuple(providers), tuple(jobs), max(costs), min(costs))


@dataclass
class Gap1Window:
    short_stake: int
    long_stake: int
    hyper_period: int
    periods: List[int]
    coprime: bool

    @property
    def contiguous(self) -> bool:
        return all(b == a + 1 for a, b in zip(self.periods, self.periods[1:]))

    @property
    def matches_structure(self) -> bool:
        if not self.coprime:
            return not self.periods
        return self.contiguous and len(self.periods) == self.short_stake


def cyclic_remaining(initial: int, period: int) -> int:
    """Remaining time under cyclic restake: the residue of -t in 1..initial"""
    return initial - (period % initial)


def gap1_window(short_stake: int, long_stake: int) -> Gap1Window:
    if not long_stake > short_stake >= 2:
        raise ValueError("need long stake > short stake >= 2")
    hyper = short_stake * long_stake // gcd(short_stake, long_stake)
    periods = [t for t in range(hyper)
               if cyclic_remaining(long_stake, t) - cyclic_remaining(short_stake, t) == 1]
    return Gap1Window(short_stake, long_stake, hyper, periods, gcd(short_stake, long_stake) == 1)


@dataclass
class AdversarySchedule:
    """Released jobs per period, in arrival order, with the rule checks that admitted them"""
    releases: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    idle_counts: Dict[int, int] = field(default_factory=dict)
    idle_budgets: Dict[int, int] = field(default_factory=dict)
    residuals: Dict[int, Tuple[int, ...]] = field(default_factory=dict)

    def satisfies_rules(self) -> bool:
        for t, jobs in self.releases.items():
            if len(jobs) != self.idle_counts[t] or sum(jobs) > self.idle_budgets[t]:
                return False
        return True


@dataclass
class AdversarySearchResult:
    short_stake: int
    long_stake: int
    algorithm: MatchingAlgorithm
    hyper_period: int
    max_infeasible: int
    schedule: AdversarySchedule
    infeasible_periods: List[int]
    max_per_period: int
    max_per_restake_cycle: int
    states: int


# provider slot: (free_at, residual released when it frees)
_Slot = Tuple[int, int]


def _assign(algorithm: MatchingAlgorithm, taus: Tuple[int, int], costs: Tuple[int, int],
            idle: Sequence[int], jobs: Sequence[int]) -> List[Tuple[int, int]]:
    """(provider, job length) pairs chosen by the matcher for one period's releases"""
    entries = [PoolEntry(p, taus[p], costs[p]) for p in idle]
    fallback = GsmFallback.LONGEST
    pairs = []
    for w in jobs:
        chosen = naive_select(algorithm, entries, w, fallback)
        entries = [e for e in entries if e.provider_id != chosen.provider_id]
        pairs.append((chosen.provider_id, w))
    return pairs


def two_provider_adversary_search(short_stake: int, long_stake: int, algorithm: MatchingAlgorithm,
                                  cap_to_longest: bool = False) -> AdversarySearchResult:
    """Exact maximum of infeasible matches an adversary can force in one hyper-period.

    Rules: as many jobs as idle providers each period; released lengths (residuals
    included) sum to at most the idle remaining times; a residual is released when its
    provider frees. The long provider is cheaper. `cap_to_longest` adds a stricter variant
    where no fresh job is longer than the largest idle remaining time.
    """
    hyper = short_stake * long_stake // gcd(short_stake, long_stake)
    limit = get_config()["defaults"].HYPER_PERIOD_LIMIT
    if hyper > limit:
        raise SizeLimit(f"hyper-period {hyper} exceeds {limit}")
    stakes = (short_stake, long_stake)
    costs = (2, 1)
    max_per_period = 0

    def options(t: int, slots: Tuple[_Slot, _Slot]):
        idle = [p for p in (0, 1) if slots[p][0] <= t]
        if not idle:
            return idle, []
        taus = tuple(cyclic_remaining(stakes[p], t) for p in (0, 1))
        residuals = [slots[p][1] for p in idle if slots[p][0] == t and slots[p][1] > 0]
        fresh = len(idle) - len(residuals)
        budget = sum(taus[p] for p in idle) - sum(residuals)
        cap = max(taus[p] for p in idle) if cap_to_longest else budget
        if budget < fresh:
            return idle, []
        batches = [()]
        for _ in range(fresh):
            batches = [b + (w,) for b in batches for w in range(1, cap + 1)
                       if sum(b) + w <= budget]
        orders = set()
        for batch in batches:
            orders.update(permutations(tuple(residuals) + batch))
        return idle, sorted(orders)

    @lru_cache(maxsize=None)
    def best(t: int, slots: Tuple[_Slot, _Slot]) -> Tuple[float, Optional[Tuple[int, ...]]]:
        nonlocal max_per_period
        if t >= hyper:
            return 0, None
        idle, orders = options(t, slots)
        if not idle:
            return best(t + 1, slots)
        if not orders:
            return float("-inf"), None
        taus = tuple(cyclic_remaining(stakes[p], t) for p in (0, 1))
        top, argbest = float("-inf"), None
        for order in orders:
            next_slots = list(slots)
            infeasible = 0
            for provider, w in _assign(algorithm, taus, costs, idle, order):
                if w <= taus[provider]:
                    next_slots[provider] = (t + w, 0)
                else:
                    next_slots[provider] = (t + taus[provider], w - taus[provider])
                    infeasible += 1
            max_per_period = max(max_per_period, infeasible)
            value = infeasible + best(t + 1, tuple(next_slots))[0]
            if value > top:
                top, argbest = value, order
        return top, argbest

    start: Tuple[_Slot, _Slot] = ((0, 0), (0, 0))
    total, _ = best(0, start)
    schedule, infeasible_periods, per_cycle = _replay(algorithm, stakes, costs, hyper, best, options)
    states = best.cache_info().currsize
    logger.info(f"adversary search ({short_stake},{long_stake}) {algorithm.value}: {int(total)} infeasible, {states} states")
    return AdversarySearchResult(short_stake, long_stake, algorithm, hyper, int(total), schedule,
                                 infeasible_periods, max_per_period, per_cycle, states)


@dataclass
class ExcessComparison:
    """CFM over GSM excess for one pair, against the bound for its coprimality"""
    short_stake: int
    long_stake: int
    coprime: bool
    gsm: AdversarySearchResult
    cfm: AdversarySearchResult

    @property
    def excess(self) -> int:
        return self.cfm.max_infeasible - self.gsm.max_infeasible

    @property
    def within_bound(self) -> bool:
        return self.excess <= 1 if self.coprime else self.excess == 0


def two_provider_excess(short_stake: int, long_stake: int, cap_to_longest: bool = False) -> ExcessComparison:
    gsm = two_provider_adversary_search(short_stake, long_stake, MatchingAlgorithm.GSM, cap_to_longest)
    cfm = two_provider_adversary_search(short_stake, long_stake, MatchingAlgorithm.CFM, cap_to_longest)
    comparison = ExcessComparison(short_stake, long_stake, gcd(short_stake, long_stake) == 1, gsm, cfm)
    if not comparison.within_bound:
        logger.info(f"adversary search ({short_stake},{long_stake}): excess {comparison.excess} "
                    f"above the bound for coprime={comparison.coprime}")
    return comparison


def _replay(algorithm, stakes, costs, hyper, best, options):
    """Walk the optimal choices forward, recording the schedule and per-cycle counts"""
    schedule = AdversarySchedule()
    slots = ((0, 0), (0, 0))
    infeasible_periods: List[int] = []
    cycles: Dict[Tuple[int, int], int] = {}
    for t in range(hyper):
        idle, orders = options(t, slots)
        if not idle:
            continue
        _, order = best(t, slots)
        taus = tuple(cyclic_remaining(stakes[p], t) for p in (0, 1))
        schedule.releases[t] = order
        schedule.idle_counts[t] = len(idle)
        schedule.idle_budgets[t] = sum(taus[p] for p in idle)
        schedule.residuals[t] = tuple(slots[p][1] for p in idle if slots[p][0] == t and slots[p][1] > 0)
        next_slots = list(slots)
        for provider, w in _assign(algorithm, taus, costs, idle, order):
            if w <= taus[provider]:
                next_slots[provider] = (t + w, 0)
            else:
                next_slots[provider] = (t + taus[provider], w - taus[provider])
                infeasible_periods.append(t)
                key = (provider, t // stakes[provider])
                cycles[key] = cycles.get(key, 0) + 1
        slots = tuple(next_slots)
    return schedule, infeasible_periods, max(cycles.values(), default=0)


@dataclass
class PeelAndLoad:
    capacities: Tuple[int, ...]
    cfm_saves: List[int]
    gsm_saves: List[int]
    cfm_threshold: int
    gsm_threshold: int

    @property
    def cfm_u_max(self) -> int:
        return len(self.capacities) - self.cfm_threshold

    @property
    def gsm_u_max(self) -> int:
        return len(self.capacities) - self.gsm_threshold


def _threshold(saves: Sequence[int], m: int) -> int:
    cumulative = 0
    for i, save in enumerate(saves, start=1):
        cumulative += save
        if cumulative >= m - i:
            return i
    return m


def peel_and_load(capacities: Sequence[int]) -> PeelAndLoad:
    """Smallest number of peeled providers whose banked budget pays for overloading the rest"""
    taus = tuple(capacities)
    if any(b > a for a, b in zip(taus, taus[1:])):
        raise UnsortedCapacities(f"capacities must be non-increasing: {list(taus)}")
    if not taus or taus[-1] < 2:
        raise ValueError("capacities must all be at least 2")
    m = len(taus)
    cfm_saves = [tau - 1 for tau in taus]
    padded = taus + (1,)
    gsm_saves = [padded[j] - padded[j + 1] - 1 for j in range(m)]
    return PeelAndLoad(taus, cfm_saves, gsm_saves, _threshold(cfm_saves, m), _threshold(gsm_saves, m))


def anti_sorted_entries(capacities: Sequence[int], base_cost: Money = 1) -> List[PoolEntry]:
    top = max(capacities)
    return [PoolEntry(i, tau, base_cost + top - tau) for i, tau in enumerate(capacities)]


def single_period_adversary_search(capacities: Sequence[int], algorithm: MatchingAlgorithm) -> int:
    """Most infeasible matches from one job per provider with total length at most the capacity sum"""
    entries = tuple(anti_sorted_entries(capacities))
    m = len(entries)
    if m > get_config()["defaults"].ORACLE_LIMIT:
        raise SizeLimit(f"{m} providers is too many for exhaustive search")

    @lru_cache(maxsize=None)
    def best(remaining: int, budget: int) -> float:
        live = [e for i, e in enumerate(entries) if remaining & (1 << i)]
        if not live:
            return 0
        jobs_left = len(live)
        top = float("-inf")
        longest = max(e.tau for e in live)
        for w in range(1, min(budget - (jobs_left - 1), longest + 1) + 1):
            chosen = naive_select(algorithm, live, w, GsmFallback.LONGEST)
            index = entries.index(chosen)
            top = max(top, (w > chosen.tau) + best(remaining & ~(1 << index), budget - w))
        return top

    return int(best((1 << m) - 1, sum(capacities)))


@dataclass
class PeelComparison:
    capacities: Tuple[int, ...]
    cfm_formula: int
    cfm_search: int
    gsm_formula: int
    gsm_search: int

    @property
    def cfm_agrees(self) -> bool:
        return self.cfm_formula == self.cfm_search

    @property
    def gsm_agrees(self) -> bool:
        return self.gsm_formula == self.gsm_search


def _non_increasing(m: int, low: int, high: int):
    if m == 0:
        yield ()
        return
    for first in range(high, low - 1, -1):
        for rest in _non_increasing(m - 1, low, first):
            yield (first,) + rest


def peel_and_load_crosscheck(max_providers: int = 5, max_tau: int = 6) -> List[PeelComparison]:
    rows = []
    for m in range(1, max_providers + 1):
        for taus in _non_increasing(m, 2, max_tau):
            formula = peel_and_load(taus)
            rows.append(PeelComparison(
                taus,
                formula.cfm_u_max, single_period_adversary_search(taus, MatchingAlgorithm.CFM),
                formula.gsm_u_max, single_period_adversary_search(taus, MatchingAlgorithm.GSM),
            ))
    disagreements = [r for r in rows if not r.gsm_agrees]
    if disagreements:
        logger.info(f"peel-and-load: GSM formula disagrees with search on {len(disagreements)} of {len(rows)} instances")
    return rows


def bootstrap_mean_ci(samples: Sequence[float], seed: int, resamples: Optional[int] = None,
                      confidence: Optional[float] = None) -> Tuple[float, float]:
    """Percentile bootstrap interval for the mean"""
    defaults = get_config()["defaults"]
    resamples = resamples or defaults.BOOTSTRAP_RESAMPLES
    confidence = confidence or defaults.CONFIDENCE
    data = np.asarray(samples, dtype=float)
    rng = stream(seed, "bootstrap")
    picks = rng.integers(0, len(data), size=(resamples, len(data)))
    means = data[picks].mean(axis=1)
    tail = (1 - confidence) / 2 * 100
    low, high = np.percentile(means, [tail, 100 - tail])
    return float(low), float(high)


@dataclass
class IncentiveScenario:
    """One provider under test among rivals, one market period of short jobs.

    Rival costs are drawn uniformly in [cost - spread_below, cost + spread_above];
    the number of jobs is uniform in 1..max_jobs.
    """
    cost: Money = 20
    price: Money = 30
    rivals: int = 12
    spread_below: Money = 2
    spread_above: Money = 6
    max_jobs: int = 12
    max_hours: int = 1
    stake: int = 3

    @classmethod
    def competitive(cls) -> 'IncentiveScenario':
        return cls()

    @classmethod
    def monopoly(cls) -> 'IncentiveScenario':
        """A lone provider facing more jobs than it can serve: it is paid P whatever it reports"""
        return cls(rivals=0, max_jobs=4)


@dataclass
class ReportPoint:
    report: Money
    mean_return: float
    samples: List[float]


@dataclass
class IncentiveCurve:
    scenario: IncentiveScenario
    points: List[ReportPoint]
    trials: int
    truthful_margin: Tuple[float, float] = (0.0, 0.0)  # CI of truthful minus first over-report
    inconclusive: bool = False

    @property
    def best_report(self) -> Money:
        return max(self.points, key=lambda p: (p.mean_return, -p.report)).report

    @property
    def truthful_dominates(self) -> bool:
        return not self.inconclusive and self.truthful_margin[0] > 0


def _one_hour_jobs(count: int, hours: Sequence[int], budget: Money, value_per_hour: int,
                   start_id: int = 0, arrival: int = 0) -> List[JobSpec]:
    jobs = []
    for k in range(count):
        w = hours[k]
        values = [value_per_hour * h for h in range(w + 1)]
        jobs.append(JobSpec(start_id + k, budget, w, w, ValueFunction.tabulated(values), arrival))
    return jobs


def _trial_return(scenario: IncentiveScenario, report: Money, rival_costs: Sequence[int],
                  hours: Sequence[int], order: Sequence[int]) -> float:
    """Profit of the tested provider for one trial; ids follow `order` so ties break randomly"""
    providers = []
    costs = [scenario.cost] + list(rival_costs)
    reports = [report] + list(rival_costs)
    for rank, index in enumerate(order):
        providers.append(ProviderRecord(rank, costs[index], reports[index], scenario.stake))
    tested = list(order).index(0)
    pricing = PricingFunction(PricingKind.LINEAR_CAPPED, scenario.price, scenario.price * 4)
    jobs = _one_hour_jobs(len(hours), hours, scenario.price * 10, scenario.price * 4)
    state = MarketState.create(providers, jobs, scenario.price)
    params = MarketParams(pricing, horizon=scenario.max_hours)
    run_market(state, params, MatchingAlgorithm.CFM)
    worked = sum(r.hours for r in state.ledger.for_provider(tested))
    return float(total_return(tested, state.ledger) - scenario.cost * worked)


def incentive_best_response(scenario: IncentiveScenario, report_offsets: Sequence[int],
                            trials: int, seed: int) -> IncentiveCurve:
    """Monte Carlo mean profit for each report, with common random numbers across reports"""
    samples: Dict[int, List[float]] = {offset: [] for offset in report_offsets}
    for trial in range(trials):
        rng = stream(seed, "incentive-trial", trial)
        rivals = rng.integers(scenario.cost - scenario.spread_below,
                              scenario.cost + scenario.spread_above + 1, size=scenario.rivals)
        jobs = int(rng.integers(1, scenario.max_jobs + 1))
        hours = rng.integers(1, scenario.max_hours + 1, size=jobs)
        order = rng.permutation(scenario.rivals + 1)
        for offset in report_offsets:
            samples[offset].append(_trial_return(scenario, scenario.cost + offset, rivals.tolist(),
                                                 hours.tolist(), order.tolist()))
    points = [ReportPoint(scenario.cost + o, float(np.mean(samples[o])), samples[o]) for o in report_offsets]
    curve = IncentiveCurve(scenario, points, trials)
    over = [o for o in report_offsets if o > 0]
    if 0 in samples and over:
        diffs = np.asarray(samples[0]) - np.asarray(samples[over[0]])
        curve.truthful_margin = bootstrap_mean_ci(diffs, seed)
        curve.inconclusive = trials < 30
    return curve


@dataclass
class DelayComparison:
    delay: int
    early_return: Fraction
    late_return: Fraction
    prefix_return: Fraction

    @property
    def identity_holds(self) -> bool:
        return self.early_return - self.late_return == self.prefix_return


def _delay_market(stake: int, delay: int, rivals: int, demand: int, cost: Money,
                  floor_price: Money) -> MarketState:
    providers = [ProviderRecord(0, cost, cost, stake - delay, arrival=delay)]
    for k in range(rivals):
        providers.append(ProviderRecord(k + 1, cost + 1 + k, cost + 1 + k, stake))
    jobs = []
    for t in range(stake):
        jobs.extend(_one_hour_jobs(demand, [1] * demand, floor_price * 10, floor_price * 6,
                                   start_id=len(jobs), arrival=t))
    return MarketState.create(providers, jobs, floor_price)


def stake_delay_identity(delay: int, stake: int = 5, rivals: int = 2, demand: int = 6,
                         cost: Money = 8, floor_price: Money = 10) -> DelayComparison:
    """Scripted over-demanded market: staking late forfeits exactly the skipped hours' pay"""
    if not 0 <= delay < stake:
        raise ValueError("delay must lie in [0, stake)")
    pricing = PricingFunction(PricingKind.LINEAR_CAPPED, floor_price, floor_price * 5)
    params = MarketParams(pricing, horizon=stake)
    early = _delay_market(stake, 0, rivals, demand, cost, floor_price)
    late = _delay_market(stake, delay, rivals, demand, cost, floor_price)
    run_market(early, params, MatchingAlgorithm.CFM)
    run_market(late, params, MatchingAlgorithm.CFM)
    prefix = sum((hourly_payment(0, h, early.ledger) for h in range(delay)), Fraction(0))
    return DelayComparison(delay, total_return(0, early.ledger), total_return(0, late.ledger), prefix)


def staking_delay_curve(scenario: IncentiveScenario, delays: Sequence[int], trials: int,
                        seed: int) -> Dict[int, float]:
    """Mean profit by staking delay in a random competitive market of one-hour jobs"""
    means: Dict[int, List[float]] = {d: [] for d in delays}
    for trial in range(trials):
        rng = stream(seed, "delay-trial", trial)
        rivals = rng.integers(scenario.cost - scenario.spread_below,
                              scenario.cost + scenario.spread_above + 1, size=scenario.rivals).tolist()
        demand = rng.integers(1, scenario.max_jobs + 1, size=scenario.stake).tolist()
        for delay in delays:
            providers = [ProviderRecord(0, scenario.cost, scenario.cost, scenario.stake - delay, arrival=delay)]
            providers += [ProviderRecord(k + 1, c, c, scenario.stake) for k, c in enumerate(rivals)]
            jobs: List[JobSpec] = []
            for t in range(scenario.stake):
                jobs.extend(_one_hour_jobs(demand[t], [1] * demand[t], scenario.price * 10,
                                           scenario.price * 4, start_id=len(jobs), arrival=t))
            state = MarketState.create(providers, jobs, scenario.price)
            pricing = PricingFunction(PricingKind.LINEAR_CAPPED, scenario.price, scenario.price * 4)
            run_market(state, MarketParams(pricing, horizon=scenario.stake), MatchingAlgorithm.CFM)
            worked = sum(r.hours for r in state.ledger.for_provider(0))
            means[delay].append(float(total_return(0, state.ledger) - scenario.cost * worked))
    return {d: float(np.mean(v)) for d, v in means.items()}
