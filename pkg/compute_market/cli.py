"""Command line entry point: run, verify-bounds, adversary-search, race, complexity-bench.

Exit codes: 0 success, 1 a verification suite failed, 2 configuration error,
3 any other engine fault.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .adversary import gap1_window, peel_and_load, single_period_adversary_search, two_provider_adversary_search
from .bench import run_complexity_bench
from .bounds_suite import MULTIPERIOD_PAIRS, SUITES, verify_bounds
from .core_config import ArtifactName, get_config, output_root
from .ledger_validator import LedgerValidator
from .market_errors import ConfigError, LedgerViolation, MarketError
from .market_report import MarketReport, write_bench, write_payoffs, write_regret, write_text
from .market_state import run_market
from .market_types import GsmFallback, MatchingAlgorithm, format_money, parse_money
from .race import RaceConfig, best_response_scan, run_race
from .scenario_config import load_scenario, parse_race

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_SUITE_FAILED, EXIT_CONFIG, EXIT_FAULT = 0, 1, 2, 3


def _money(value: str) -> int:
    try:
        return parse_money(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compute_market", description="Deterministic compute-market engine")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a scenario and write prices, matches and payouts")
    run.add_argument("scenario", type=Path)
    run.add_argument("--algo", choices=[a.value for a in MatchingAlgorithm])
    run.add_argument("--gsm-fallback", choices=[f.value for f in GsmFallback])
    run.add_argument("--seed", type=int)
    run.add_argument("--out")

    verify = commands.add_parser("verify-bounds", help="run the property suites")
    verify.add_argument("--suite", action="append", choices=("default",) + SUITES)
    verify.add_argument("--seed", type=int)
    verify.add_argument("--out")

    search = commands.add_parser("adversary-search", help="exhaustive adversary searches")
    search.add_argument("--pair", type=int, nargs=2, action="append", metavar=("SHORT", "LONG"))
    search.add_argument("--algo", choices=[a.value for a in MatchingAlgorithm], action="append")
    search.add_argument("--peel", type=int, nargs="+", metavar="TAU")
    search.add_argument("--cap-to-longest", action="store_true",
                        help="also forbid fresh jobs longer than the largest idle remaining time")
    search.add_argument("--out")

    race = commands.add_parser("race", help="stake-and-tolerance race with best-response tables")
    race.add_argument("--config", type=Path)
    race.add_argument("--epsilon", type=int)
    race.add_argument("--stake", type=_money)
    race.add_argument("--price", type=_money)
    race.add_argument("--true-times", type=int, nargs="+")
    race.add_argument("--quotes", type=int, nargs="+")
    race.add_argument("--one-sided", action="store_true")
    race.add_argument("--out")

    bench = commands.add_parser("complexity-bench", help="operation counts per matcher and pool size")
    bench.add_argument("--min-exp", type=int, default=min(get_config()["defaults"].BENCH_EXPONENTS))
    bench.add_argument("--max-exp", type=int, default=max(get_config()["defaults"].BENCH_EXPONENTS))
    bench.add_argument("--seed", type=int)
    bench.add_argument("--out")
    return parser


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario, args.seed)
    if args.algo:
        scenario.run.algorithm = MatchingAlgorithm(args.algo)
    if args.gsm_fallback:
        scenario.run.gsm_fallback = GsmFallback(args.gsm_fallback)
    state = scenario.build()
    reports = run_market(state, scenario.params, scenario.run.algorithm, scenario.run.gsm_fallback)
    ok, problems = LedgerValidator().validate_run(state, reports)
    if not ok:
        raise LedgerViolation("; ".join(problems))
    directory = output_root(args.out) / scenario.name
    MarketReport(scenario.name, state, reports, scenario.header()).write(directory)
    print(f"{scenario.name}: {len(reports)} periods written to {directory}")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify_bounds(args.suite, args.seed)
    directory = output_root(args.out)
    write_text(directory / ArtifactName.VERIFY.value, report.lines())
    if report.regret_rows:
        write_regret(directory / ArtifactName.REGRET.value, report.regret_rows)
    if report.bench is not None:
        write_bench(directory / ArtifactName.BENCH.value, report.bench)
    if report.payoff_scans:
        write_payoffs(directory / ArtifactName.PAYOFFS.value, report.payoff_scans)
    print("\n".join(report.lines()))
    return EXIT_OK if report.passed else EXIT_SUITE_FAILED


def cmd_adversary(args) -> int:
    lines: List[str] = ["ADVERSARY SEARCH", "=" * 80]
    algorithms = [MatchingAlgorithm(a) for a in (args.algo or ["gsm", "cfm"])]
    pairs = [tuple(p) for p in args.pair] if args.pair else list(MULTIPERIOD_PAIRS)
    if args.peel is None or args.pair:
        for short, long in pairs:
            window = gap1_window(short, long)
            lines.append(f"pair ({short},{long}) hyper-period {window.hyper_period} coprime={window.coprime}")
            lines.append(f"  gap-1 periods: {window.periods}")
            for algorithm in algorithms:
                found = two_provider_adversary_search(short, long, algorithm, args.cap_to_longest)
                lines.append(f"  {algorithm.value}: max infeasible {found.max_infeasible} at periods "
                             f"{found.infeasible_periods} ({found.states} states)")
                for t in sorted(found.schedule.releases):
                    lines.append(f"    t={t} release {list(found.schedule.releases[t])}")
    if args.peel:
        taus = sorted(args.peel, reverse=True)
        formula = peel_and_load(taus)
        lines.append(f"peel-and-load {taus}")
        lines.append(f"  CFM threshold {formula.cfm_threshold}, U_max {formula.cfm_u_max}, "
                     f"search {single_period_adversary_search(taus, MatchingAlgorithm.CFM)}")
        lines.append(f"  GSM threshold {formula.gsm_threshold}, U_max {formula.gsm_u_max}, "
                     f"search {single_period_adversary_search(taus, MatchingAlgorithm.GSM)}")
    write_text(output_root(args.out) / ArtifactName.ADVERSARY.value, lines)
    print("\n".join(lines))
    return EXIT_OK


def _race_config(args) -> RaceConfig:
    if args.config:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read race config {args.config}: {exc}") from exc
        config = parse_race(text)
    elif args.true_times and args.price is not None and args.stake is not None:
        config = RaceConfig(args.price, args.stake, args.epsilon or 0, tuple(args.true_times),
                            tuple(args.true_times))
    else:
        raise ConfigError("race needs --config or --price, --stake and --true-times")
    config = RaceConfig(
        args.price if args.price is not None else config.price,
        args.stake if args.stake is not None else config.stake,
        args.epsilon if args.epsilon is not None else config.epsilon,
        tuple(args.true_times) if args.true_times else config.true_times,
        tuple(args.quotes) if args.quotes else config.quotes,
        args.one_sided or config.one_sided,
    )
    if len(config.quotes) != len(config.true_times):
        raise ConfigError("one quote per racer required", None, "quotes")
    return config


def cmd_race(args) -> int:
    config = _race_config(args)
    outcome = run_race(config)
    grid = config.affordable_grid()
    if len(grid) < len(config.grid()):
        logger.warning(f"stake covers quotes up to {grid[-1]} only; best responses scanned on that range")
    scans = [best_response_scan(config, racer, grid) for racer in range(config.racers)]
    write_payoffs(output_root(args.out) / ArtifactName.PAYOFFS.value, scans)
    print(f"winner {outcome.winner} quote {outcome.quote} true {outcome.true_time} "
          f"paid {format_money(outcome.paid)} stake returned {outcome.stake_returned}")
    for scan in scans:
        print(f"racer {scan.racer}: undominated quotes {scan.undominated}")
    return EXIT_OK


def cmd_bench(args) -> int:
    report = run_complexity_bench(range(args.min_exp, args.max_exp + 1), args.seed)
    write_bench(output_root(args.out) / ArtifactName.BENCH.value, report)
    print(f"CFM ops/job = {report.cfm_slope:.3f} log2 n + {report.cfm_intercept:.3f} "
          f"(r={report.cfm_correlation:.4f}); GCM ratio {report.gcm_ratio:.3f}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "verify-bounds": cmd_verify,
    "adversary-search": cmd_adversary,
    "race": cmd_race,
    "complexity-bench": cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        logger.error(f"configuration error: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MarketError as exc:
        logger.error(f"engine fault: {exc}")
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except ValueError as exc:
        logger.error(f"invalid input: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
