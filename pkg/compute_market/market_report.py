"""Write run and verification artifacts.

CSV files open with a versioned comment line followed by a fixed header. Money columns
are decimals with one fractional digit; exact sub-tick quantities are written as tick
fractions. Nothing time-dependent is written, so equal inputs give equal files.
"""
import csv
import logging
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .adversary import RegretReport
from .bench import BenchReport
from .core_config import ArtifactName, get_config
from .market_state import MarketState
from .market_types import PeriodReport, format_money
from .race import BestResponse

logger = logging.getLogger(__name__)

PRICE_COLUMNS = ["period", "price", "alpha", "floor_price", "floor_supply", "demand", "clamped",
                 "no_floor_supply", "submitted", "matched", "infeasible", "rejected", "expired",
                 "completed", "matched_cost", "treasury_delta_ticks"]
MATCH_COLUMNS = ["period", "provider", "job", "hours", "price", "reported_cost", "feasible"]
PAYOUT_COLUMNS = ["period", "provider", "job", "base", "premium_share_ticks", "exact_ticks", "paid",
                  "carry_ticks", "cumulative", "user_price"]
REGRET_COLUMNS = ["instance", "matcher", "s_regret", "d_regret", "s_bound", "d_bound", "satisfied"]
BENCH_COLUMNS = ["algorithm", "n", "jobs", "ops", "ops_per_job"]
PAYOFF_COLUMNS = ["racer", "quote", "nonzero_profiles", "min_payoff", "max_payoff", "mean_payoff", "undominated"]


def _flag(value: bool) -> str:
    return "1" if value else "0"


def _fraction(value: Optional[Fraction]) -> str:
    return "" if value is None else str(value)


def write_csv(path: Path, kind: str, columns: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write one versioned CSV; returns the number of data rows"""
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write(f"# {get_config()['defaults'].CSV_SCHEMA} {kind}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)
            count += 1
    logger.debug(f"wrote {count} rows to {path}")
    return count


def read_csv(path: Path) -> List[Dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    return list(csv.DictReader(lines))


class MarketReport:
    """Artifacts of one scenario run"""

    def __init__(self, name: str, state: MarketState, reports: List[PeriodReport],
                 header: Optional[Dict] = None):
        self.name = name
        self.state = state
        self.reports = reports
        self.header = header or {}

    def price_rows(self) -> List[List[str]]:
        return [[
            r.period, format_money(r.price), _fraction(r.alpha), format_money(r.floor_price),
            r.floor_supply, r.demand, _flag(r.clamped), _flag(r.no_floor_supply), r.submitted,
            r.matched, r.infeasible, r.rejected, r.expired, r.completed,
            format_money(r.matched_cost_total), _fraction(r.treasury_delta),
        ] for r in self.reports]

    def match_rows(self) -> List[List[str]]:
        return [[
            m.period, m.provider_id, m.job_id, m.hours, format_money(m.price),
            format_money(m.reported_cost), _flag(m.feasible),
        ] for r in self.reports for m in r.matches]

    def payout_rows(self) -> List[List[str]]:
        return [[
            s.period, s.provider_id, s.job_id, format_money(s.base), _fraction(s.premium_share),
            _fraction(s.exact), format_money(s.paid), _fraction(s.carry), format_money(s.cumulative),
            format_money(s.user_price),
        ] for r in self.reports for s in r.settlements]

    def generate_summary(self) -> str:
        """Plain-text summary: run header, then one line per period"""
        lines = [f"MARKET RUN: {self.name}", "=" * 80, ""]
        for key in sorted(self.header):
            lines.append(f"{key}: {self.header[key]}")
        lines.extend(["", "PERIODS", "-" * 40])
        for r in self.reports:
            alpha = _fraction(r.alpha) or "-"
            lines.append(
                f"t={r.period} P={format_money(r.price)} alpha={alpha} S_f={r.floor_supply} D={r.demand} "
                f"matched={r.matched} infeasible={r.infeasible} treasury={_fraction(r.treasury_delta)} "
                f"floor={format_money(r.floor_price)}"
                + (" [no floor supply]" if r.no_floor_supply else "")
                + (" [clamped]" if r.clamped else "")
            )
        totals = {
            "matched": sum(r.matched for r in self.reports),
            "infeasible": sum(r.infeasible for r in self.reports),
            "completed": sum(r.completed for r in self.reports),
            "expired": sum(r.expired for r in self.reports),
        }
        treasury = sum((r.treasury_delta for r in self.reports), Fraction(0))
        lines.extend(["", "TOTALS", "-" * 40])
        lines.extend(f"{key}: {value}" for key, value in totals.items())
        lines.append(f"treasury: {treasury}")
        lines.append(f"final floor: {format_money(self.state.floor_price)}")
        return "\n".join(lines) + "\n"

    def write(self, directory: Path) -> Dict[str, int]:
        directory.mkdir(parents=True, exist_ok=True)
        counts = {
            ArtifactName.PRICES.value: write_csv(directory / ArtifactName.PRICES.value, "prices",
                                                 PRICE_COLUMNS, self.price_rows()),
            ArtifactName.MATCHES.value: write_csv(directory / ArtifactName.MATCHES.value, "matches",
                                                  MATCH_COLUMNS, self.match_rows()),
            ArtifactName.PAYOUTS.value: write_csv(directory / ArtifactName.PAYOUTS.value, "payouts",
                                                  PAYOUT_COLUMNS, self.payout_rows()),
        }
        (directory / ArtifactName.SUMMARY.value).write_text(self.generate_summary(), encoding="utf-8")
        logger.info(f"run {self.name}: artifacts written to {directory}")
        return counts


def write_regret(path: Path, rows: Iterable[Tuple[str, RegretReport]]) -> int:
    return write_csv(path, "regret", REGRET_COLUMNS, (
        [instance, r.matcher, format_money(r.s_regret), r.d_regret, format_money(r.supply_bound),
         r.demand_bound, _flag(r.bound_satisfied)]
        for instance, r in rows
    ))


def write_bench(path: Path, report: BenchReport) -> int:
    return write_csv(path, "bench", BENCH_COLUMNS, (
        [r.algorithm, r.n, r.jobs, r.ops, f"{r.ops_per_job:.4f}"] for r in report.rows
    ))


def write_payoffs(path: Path, scans: Iterable[BestResponse]) -> int:
    rows = []
    for scan in scans:
        nonzero = (scan.payoffs != 0).sum(axis=1)
        for k, quote in enumerate(scan.grid):
            column = scan.payoffs[k]
            rows.append([scan.racer, quote, int(nonzero[k]), format_money(int(column.min())),
                         format_money(int(column.max())), f"{column.mean():.4f}",
                         _flag(quote in scan.undominated)])
    return write_csv(path, "payoffs", PAYOFF_COLUMNS, rows)


def write_text(path: Path, lines: Iterable[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
