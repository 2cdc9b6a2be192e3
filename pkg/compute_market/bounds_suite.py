"""Property suites behind `verify-bounds`.

Each suite draws its instances from seeded streams, checks one family of guarantees and
returns a SuiteResult; nothing here raises on a failed property.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .adversary import (ExcessComparison, IncentiveScenario, MatchingInstance, RegretReport,
                        build_tight_pair_instance, d_regret, gap1_window, incentive_best_response, peel_and_load,
                        peel_and_load_crosscheck, regret_report, stake_delay_identity,
                        staking_delay_curve, two_provider_excess)
from .bench import BenchReport, run_complexity_bench
from .core_config import get_config
from .demand import decide_hours
from .market_errors import HourChoiceMismatch
from .market_types import JobSpec, MatchingAlgorithm, MatchLedger, MatchRecord, ValueFunction
from .matching import PoolEntry, deficiency, feasible_count, run_online
from .oracles import oracle_max_feasible
from .payout import hourly_payment, premium_pool
from .pricing import (PricingFunction, PricingKind, check_admissibility, compute_load,
                      grid_scan_quote, solve_equilibrium_quote)
from .race import BestResponse, best_response_scan, check_race, random_race_configs
from .seeding import stream

logger = logging.getLogger(__name__)

DeficiencyFn = Callable[[Sequence[int], Sequence[int]], object]

SUITES = ("gsm-optimality", "cfm-dregret", "sregret", "fixed-point", "admissibility", "pool-sharing",
          "statics", "multiperiod", "peel-load", "complexity", "race", "incentive")
MULTIPERIOD_PAIRS = ((2, 3), (2, 4), (3, 4), (3, 5), (4, 6))


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, message: str) -> None:
        self.failures.append(message)
        logger.debug(f"{self.name}: {message}")


@dataclass
class VerifyReport:
    seed: int
    results: List[SuiteResult] = field(default_factory=list)
    regret_rows: List[Tuple[str, RegretReport]] = field(default_factory=list)
    bench: Optional[BenchReport] = None
    payoff_scans: List[BestResponse] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> List[str]:
        lines = [f"VERIFY BOUNDS (seed {self.seed})", "=" * 80]
        for result in self.results:
            verdict = "PASS" if result.passed else "FAIL"
            lines.append(f"{result.name}: {verdict} ({result.checked} checked, {len(result.failures)} failed)")
            lines.extend(f"  note: {note}" for note in result.notes)
            lines.extend(f"  failure: {failure}" for failure in result.failures[:20])
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return lines


def _entries(rng, m: int, max_tau: int, low_cost: int, high_cost: int) -> List[PoolEntry]:
    taus = rng.integers(1, max_tau + 1, size=m)
    costs = rng.integers(low_cost, high_cost + 1, size=m)
    return [PoolEntry(i, int(taus[i]), int(costs[i])) for i in range(m)]


def suite_gsm_optimality(seed: int, count: int, deficiency_fn: DeficiencyFn = deficiency) -> SuiteResult:
    result = SuiteResult("gsm-optimality")
    for i in range(count):
        rng = stream(seed, "gsm-optimality", i)
        m, n = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        entries = _entries(rng, m, 6, 1, 20)
        jobs = [int(w) for w in rng.integers(1, 7, size=n)]
        matched = feasible_count(run_online(MatchingAlgorithm.GSM, entries, jobs))
        predicted = n - deficiency_fn([e.tau for e in entries], jobs).delta
        oracle = oracle_max_feasible(entries, jobs)
        result.checked += 1
        if not matched == predicted == oracle:
            result.fail(f"instance {i}: GSM {matched}, n - delta {predicted}, oracle {oracle}")
    return result


def suite_cfm_dregret(seed: int, count: int, rows: List[Tuple[str, RegretReport]]) -> SuiteResult:
    result = SuiteResult("cfm-dregret")
    floor_price = 10
    for i in range(count):
        rng = stream(seed, "cfm-dregret", i)
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        entries = tuple(_entries(rng, m, 5, floor_price, floor_price + 3))
        jobs = [int(w) for w in rng.integers(1, 6, size=n)]
        worst: Optional[RegretReport] = None
        for order in sorted(set(permutations(jobs))):
            instance = MatchingInstance(entries, order, floor_price + 3, floor_price)
            report = regret_report(instance, MatchingAlgorithm.CFM)
            result.checked += 1
            if report.d_regret > n // 2:
                result.fail(f"instance {i} order {list(order)}: D-regret {report.d_regret} > {n // 2}")
            if worst is None or report.d_regret > worst.d_regret:
                worst = report
        rows.append((f"cfm-dregret-{i}", worst))
    for k in (1, 2, 3):
        tight = d_regret(build_tight_pair_instance(k), MatchingAlgorithm.CFM)
        coincide = d_regret(build_tight_pair_instance(k, sorted_costs=True), MatchingAlgorithm.CFM)
        result.checked += 2
        if tight != k:
            result.fail(f"tight pairs k={k}: D-regret {tight}, expected {k}")
        if coincide != 0:
            result.fail(f"sorted-cost pairs k={k}: D-regret {coincide}, expected 0")
    return result


def suite_sregret(seed: int, count: int, rows: List[Tuple[str, RegretReport]]) -> SuiteResult:
    result = SuiteResult("sregret")
    for i in range(count):
        rng = stream(seed, "sregret", i)
        m, n = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        floor_price = int(rng.integers(10, 31))
        price = floor_price + int(rng.integers(0, 11))
        entries = tuple(_entries(rng, m, 6, floor_price, price))
        jobs = tuple(int(w) for w in rng.integers(1, 7, size=n))
        report = regret_report(MatchingInstance(entries, jobs, price, floor_price), MatchingAlgorithm.CFM)
        rows.append((f"sregret-{i}", report))
        result.checked += 1
        if report.s_regret > report.supply_bound:
            result.fail(f"instance {i}: S-regret {report.s_regret} > bound {report.supply_bound}")
    return result


def _random_pricing(rng, floor_price: int) -> PricingFunction:
    b_max = floor_price + int(rng.integers(1, 81))
    kind = list(PricingKind)[int(rng.integers(0, 3))]
    if kind is PricingKind.LINEAR_CAPPED:
        return PricingFunction(kind, floor_price, b_max, slope=Fraction(int(rng.integers(1, 9)), 4))
    if kind is PricingKind.CONCAVE_POWER:
        return PricingFunction(kind, floor_price, b_max, exponent=(0.25, 0.5, 0.75, 1.0)[int(rng.integers(0, 4))])
    first = int(rng.integers(0, 30))
    return PricingFunction(kind, floor_price, b_max,
                           markups=((Fraction(1), 0), (Fraction(2), first), (Fraction(4), first + int(rng.integers(0, 30)))))


def _step_demand(start: int, floor_price: int, step: int):
    return lambda price: max(0, start - max(0, price - floor_price) // step)


def suite_fixed_point(seed: int, count: int) -> SuiteResult:
    result = SuiteResult("fixed-point")
    for i in range(count):
        rng = stream(seed, "fixed-point", i)
        floor_price = int(rng.integers(5, 41))
        f = _random_pricing(rng, floor_price)
        demand = _step_demand(int(rng.integers(0, 41)), floor_price, int(rng.integers(1, 6)))
        floor_supply = int(rng.integers(1, 11))
        quote = solve_equilibrium_quote(f, demand, floor_supply)
        reference = grid_scan_quote(f, demand, floor_supply)
        result.checked += 1
        if quote.price != reference:
            result.fail(f"pair {i}: bisection {quote.price}, grid scan {reference}")
        loads = [compute_load(demand(p), floor_supply) for p in range(floor_price, f.b_max + 1)]
        if any(b > a for a, b in zip(loads, loads[1:])):
            result.fail(f"pair {i}: load increases with price")
        if not quote.clamped:
            wider = solve_equilibrium_quote(f, demand, floor_supply, low=max(1, floor_price - 5),
                                            high=f.b_max + 20, validate=False)
            if wider.price != quote.price:
                result.fail(f"pair {i}: bracket widening moved the quote {quote.price} -> {wider.price}")
    return result


def suite_admissibility(seed: int, count: int) -> SuiteResult:
    """Regular-crossing curves with unit gap; the gated family uses a slope of S_f*(P_adm - P_f)"""
    result = SuiteResult("admissibility")
    literal_admissible = 0
    for i in range(count):
        rng = stream(seed, "admissibility", i)
        floor_price = int(rng.integers(10, 31))
        gap = int(rng.integers(1, 21))
        threshold = floor_price + gap
        floor_supply = int(rng.integers(1, 11))
        step = int(rng.integers(2, 6))

        def supply(price, s0=floor_supply, p0=floor_price, k=step):
            return s0 + max(0, price - p0) // k

        def demand(price, p_adm=threshold):
            return max(0, supply(price) + p_adm - price)

        b_max = threshold + int(rng.integers(0, 51))
        multiple = int(rng.integers(1, 4))
        strong = PricingFunction(PricingKind.LINEAR_CAPPED, floor_price, b_max,
                                 slope=Fraction(floor_supply * gap * multiple, floor_price))
        quote = solve_equilibrium_quote(strong, demand, floor_supply)
        report = check_admissibility(supply, demand, quote.price, floor_price, b_max)
        result.checked += 1
        if not report.admissible or quote.price < threshold:
            result.fail(f"construction {i}: P*={quote.price} below P_adm={threshold}")
        if report.threshold != threshold:
            result.fail(f"construction {i}: threshold {report.threshold}, built {threshold}")

        literal = PricingFunction(PricingKind.LINEAR_CAPPED, floor_price, b_max,
                                  slope=Fraction(floor_supply, floor_price))
        weak = solve_equilibrium_quote(literal, demand, floor_supply)
        weak_report = check_admissibility(supply, demand, weak.price, floor_price, b_max)
        if weak_report.admissible != (supply(weak.price) >= demand(weak.price)):
            result.fail(f"construction {i}: checker disagrees with direct evaluation")
        literal_admissible += weak_report.admissible
    result.notes.append(f"slope S_f alone: {literal_admissible}/{count} quotes admissible")
    return result


def _random_ledger(rng, providers: int, periods: int) -> MatchLedger:
    ledger = MatchLedger()
    free_at = [0] * providers
    for t in range(periods):
        price = int(rng.integers(10, 51))
        for p in range(providers):
            if free_at[p] <= t and rng.random() < 0.5:
                hours = int(rng.integers(1, 4))
                cost = int(rng.integers(1, price + 1))
                ledger.add(MatchRecord(p, len(ledger.records), t, price, cost, hours, True))
                free_at[p] = t + hours
    return ledger


def suite_pool_sharing(seed: int, count: int) -> SuiteResult:
    result = SuiteResult("pool-sharing")
    for i in range(count):
        rng = stream(seed, "pool-sharing", i)
        n = int(rng.integers(1, 7))
        price = int(rng.integers(10, 51))
        ledger = MatchLedger()
        for p in range(n):
            ledger.add(MatchRecord(p, p, 0, price, int(rng.integers(1, price + 1)), int(rng.integers(1, 4)), True))
        total = sum(hourly_payment(p, 0, ledger) for p in range(n))
        result.checked += 1
        if total != n * price:
            result.fail(f"cohort {i}: payments {total} != {n} * {price}")

        mixed = _random_ledger(rng, int(rng.integers(1, 6)), 6)
        for hour in range(8):
            working = mixed.working_at(hour)
            for record in working:
                if hourly_payment(record.provider_id, hour, mixed) < record.reported_cost:
                    result.fail(f"cohort {i}: provider {record.provider_id} paid below cost at {hour}")
            for a in working:
                for b in working:
                    if a.period <= b.period:
                        wide = set(premium_pool(mixed, hour, a.period).members)
                        narrow = set(premium_pool(mixed, hour, b.period).members)
                        if not narrow <= wide:
                            result.fail(f"cohort {i}: pool of an earlier start misses later members")

    staggered = MatchLedger()
    staggered.add(MatchRecord(1, 1, 1, 10, 4, 2, True))
    staggered.add(MatchRecord(2, 2, 2, 10, 6, 1, True))
    pays = (hourly_payment(1, 2, staggered), hourly_payment(2, 2, staggered))
    result.checked += 1
    if pays != (9, 10):
        result.fail(f"staggered starts pay {pays}, expected (9, 10)")
    return result


def _random_user(rng, index: int) -> JobSpec:
    support = int(rng.integers(1, 31))
    gains = [int(rng.integers(1, 61))]
    for _ in range(support - 1):
        gains.append(int(rng.integers(1, gains[-1] + 1)))
    values = [0]
    for gain in gains:
        values.append(values[-1] + gain)
    return JobSpec(index, int(rng.integers(1, 400)), int(rng.integers(1, support + 5)),
                   int(rng.integers(1, max(2, support // 2) + 1)), ValueFunction.tabulated(values))


def suite_statics(seed: int, count: int) -> SuiteResult:
    result = SuiteResult("statics")
    for i in range(count):
        rng = stream(seed, "statics", i)
        job = _random_user(rng, i)
        low, high = sorted(int(p) for p in rng.choice(np.arange(1, 61), size=2, replace=False))
        try:
            cheap, dear = decide_hours(job, low), decide_hours(job, high)
        except HourChoiceMismatch as exc:
            result.fail(str(exc))
            continue
        result.checked += 1
        if not (cheap.cap >= dear.cap and cheap.marginal_count >= dear.marginal_count
                and cheap.chosen >= dear.chosen and (cheap.chosen > 0) >= (dear.chosen > 0)):
            result.fail(f"user {i}: P'={low} -> {cheap}, P={high} -> {dear}")
    return result


def suite_multiperiod(seed: int, pairs: Iterable[Tuple[int, int]] = MULTIPERIOD_PAIRS) -> SuiteResult:
    result = SuiteResult("multiperiod")
    outside: List[ExcessComparison] = []
    for short, long in pairs:
        window = gap1_window(short, long)
        comparison = two_provider_excess(short, long)
        result.checked += 1
        result.notes.append(f"({short},{long}) coprime={window.coprime} gap-1={window.periods} "
                            f"GSM={comparison.gsm.max_infeasible} CFM={comparison.cfm.max_infeasible} "
                            f"excess={comparison.excess}")
        if not window.matches_structure:
            result.fail(f"({short},{long}): gap-1 periods {window.periods}")
        if window.coprime and comparison.excess > 1:
            result.fail(f"({short},{long}): excess {comparison.excess}")
        elif not comparison.within_bound:
            outside.append(comparison)
            capped = two_provider_excess(short, long, cap_to_longest=True)
            result.notes.append(f"({short},{long}) jobs capped at the longest idle time: "
                                f"GSM={capped.gsm.max_infeasible} CFM={capped.cfm.max_infeasible} "
                                f"excess={capped.excess}")
        for search in (comparison.gsm, comparison.cfm):
            if search.max_per_period > 1:
                result.fail(f"({short},{long}) {search.algorithm.value}: "
                            f"{search.max_per_period} infeasible in one period")
            if search.max_per_restake_cycle > 1:
                result.fail(f"({short},{long}) {search.algorithm.value}: "
                            f"{search.max_per_restake_cycle} infeasible in one restake cycle")
            if not search.schedule.satisfies_rules():
                result.fail(f"({short},{long}) {search.algorithm.value}: witness schedule breaks the release rules")
    result.notes.append(f"shared-factor pairs with nonzero excess: {len(outside)}")
    result.notes.extend(f"excess {c.excess} at ({c.short_stake},{c.long_stake}), CFM periods "
                        f"{c.cfm.infeasible_periods}, GSM periods {c.gsm.infeasible_periods}" for c in outside)
    return result


def suite_peel_load() -> SuiteResult:
    result = SuiteResult("peel-load")
    defaults = get_config()["defaults"]
    rows = peel_and_load_crosscheck(defaults.PEEL_MAX_PROVIDERS, defaults.PEEL_MAX_TAU)
    for row in rows:
        result.checked += 1
        m = len(row.capacities)
        if not row.cfm_agrees:
            result.fail(f"{list(row.capacities)}: CFM formula {row.cfm_formula}, search {row.cfm_search}")
        if peel_and_load(row.capacities).cfm_u_max > m - 1:
            result.fail(f"{list(row.capacities)}: U_max above m - 1")
    disagreements = [r for r in rows if not r.gsm_agrees]
    result.notes.append(f"GSM formula disagrees on {len(disagreements)} of {len(rows)} instances")
    result.notes.extend(f"GSM {list(r.capacities)}: formula {r.gsm_formula}, search {r.gsm_search}"
                        for r in disagreements[:10])
    return result


def suite_complexity(seed: int, exponents: Optional[Sequence[int]] = None) -> Tuple[SuiteResult, BenchReport]:
    result = SuiteResult("complexity")
    bench = run_complexity_bench(exponents, seed)
    result.checked = len(bench.rows)
    result.notes.append(f"CFM ops/job = {bench.cfm_slope:.3f} log2 n + {bench.cfm_intercept:.3f}, "
                        f"r = {bench.cfm_correlation:.4f}; GCM ratio {bench.gcm_ratio:.3f}")
    if bench.cfm_correlation < 0.99:
        result.fail(f"CFM log fit correlation {bench.cfm_correlation:.4f} < 0.99")
    if bench.gcm_ratio >= 2:
        result.fail(f"GCM per-job cost ratio {bench.gcm_ratio:.3f} >= 2")
    return result, bench


def suite_race(seed: int, count: int, scans: List[BestResponse]) -> SuiteResult:
    result = SuiteResult("race")
    for i, config in enumerate(random_race_configs(count, seed)):
        check = check_race(config)
        result.checked += 1
        if not check.passed:
            result.fail(f"config {i}: windows={check.windows_hold} optimal={check.selection_optimal} "
                        f"error={check.quote_error} eps={config.epsilon}")
        if i == 0:
            scans.extend(best_response_scan(config, r) for r in range(config.racers))
        if config.epsilon == 0:
            for racer, t in enumerate(config.true_times):
                if best_response_scan(config, racer).undominated != [t]:
                    result.fail(f"config {i}: racer {racer} has undominated quotes other than {t}")
    return result


def suite_incentive(seed: int, trials: int) -> SuiteResult:
    result = SuiteResult("incentive")
    delay = stake_delay_identity(2)
    result.checked += 1
    if not delay.identity_holds or delay.prefix_return <= 0:
        result.fail(f"stake delay: early {delay.early_return}, late {delay.late_return}, prefix {delay.prefix_return}")

    competitive = incentive_best_response(IncentiveScenario.competitive(), (0, 3), trials, seed)
    low, high = competitive.truthful_margin
    result.checked += 1
    result.notes.append(f"competitive: truthful minus over-report 95% CI [{low:.3f}, {high:.3f}]")
    if not competitive.truthful_dominates:
        result.fail("competitive: truthful report does not beat over-reporting at 95% confidence")

    monopoly = incentive_best_response(IncentiveScenario.monopoly(), (0, 3), min(trials, 500), seed)
    gap = monopoly.points[1].mean_return - monopoly.points[0].mean_return
    result.checked += 1
    result.notes.append(f"monopoly: over-report gains {gap:.3f} ticks on average")
    if gap < 0:
        result.fail("monopoly: over-reporting lost money without competition")

    delays = staking_delay_curve(IncentiveScenario.competitive(), (0, 1, 2), min(trials, 500), seed)
    result.checked += 1
    if any(delays[0] < value for value in delays.values()):
        result.fail(f"staking delay: {delays}")
    return result


def verify_bounds(suites: Optional[Sequence[str]] = None, seed: Optional[int] = None,
                  deficiency_fn: DeficiencyFn = deficiency, sizes: Optional[Dict[str, int]] = None,
                  bench_exponents: Optional[Sequence[int]] = None) -> VerifyReport:
    """Run the named suites ("default" or None for all)"""
    defaults = get_config()["defaults"]
    seed = defaults.DEFAULT_SEED if seed is None else seed
    size = {**defaults.SUITE_SIZES, **(sizes or {})}
    chosen = list(SUITES) if not suites or "default" in suites else list(suites)
    unknown = [s for s in chosen if s not in SUITES]
    if unknown:
        raise ValueError(f"unknown suites: {unknown}")
    report = VerifyReport(seed)
    for name in chosen:
        logger.info(f"suite {name}: running")
        if name == "gsm-optimality":
            result = suite_gsm_optimality(seed, size["gsm_instances"], deficiency_fn)
        elif name == "cfm-dregret":
            result = suite_cfm_dregret(seed, size["dregret_instances"], report.regret_rows)
        elif name == "sregret":
            result = suite_sregret(seed, size["sregret_instances"], report.regret_rows)
        elif name == "fixed-point":
            result = suite_fixed_point(seed, size["curve_pairs"])
        elif name == "admissibility":
            result = suite_admissibility(seed, size["admissibility_constructions"])
        elif name == "pool-sharing":
            result = suite_pool_sharing(seed, size["cohorts"])
        elif name == "statics":
            result = suite_statics(seed, size["users"])
        elif name == "multiperiod":
            result = suite_multiperiod(seed)
        elif name == "peel-load":
            result = suite_peel_load()
        elif name == "complexity":
            result, report.bench = suite_complexity(seed, bench_exponents)
        elif name == "race":
            result = suite_race(seed, size["race_configs"], report.payoff_scans)
        else:
            result = suite_incentive(seed, size["incentive_trials"])
        report.results.append(result)
        logger.info(f"suite {name}: {'pass' if result.passed else 'FAIL'} ({result.checked} checked)")
    return report
