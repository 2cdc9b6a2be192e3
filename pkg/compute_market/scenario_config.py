"""Scenario files: TOML with explicit keys, validated into engine objects.

Sections: [market], [pricing], [[providers]], [[jobs]], [providers_generator],
[jobs_generator], [run]. Money is written in currency units with one decimal digit.
"""
import logging
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .core_config import get_config
from .market_errors import ConfigError, InvalidStake
from .market_state import MarketParams, MarketState
from .market_types import (GsmFallback, JobSpec, MatchingAlgorithm, Money, ProviderRecord,
                           RestakePolicy, ValueFunction, parse_money)
from .pricing import PricingFunction, PricingKind
from .race import RaceConfig
from .seeding import stream

logger = logging.getLogger(__name__)

_HEADER = re.compile(r"^\s*(\[\[?)\s*([A-Za-z0-9_.-]+)\s*\]\]?")
_KEY = re.compile(r"^\s*([A-Za-z0-9_-]+)\s*=")


class _Locator:
    """Maps (section, occurrence, key) to the line where the key is written"""

    def __init__(self, text: str):
        self.lines: Dict[Tuple[str, int, str], int] = {}
        self.headers: Dict[Tuple[str, int], int] = {}
        counts: Dict[str, int] = {}
        section, occurrence = "", 0
        for number, line in enumerate(text.splitlines(), start=1):
            header = _HEADER.match(line)
            if header:
                section = header.group(2)
                occurrence = counts.get(section, 0)
                counts[section] = occurrence + 1
                self.headers[(section, occurrence)] = number
                continue
            key = _KEY.match(line)
            if key:
                self.lines.setdefault((section, occurrence, key.group(1)), number)

    def line(self, section: str, key: Optional[str] = None, occurrence: int = 0) -> Optional[int]:
        if key is not None and (section, occurrence, key) in self.lines:
            return self.lines[(section, occurrence, key)]
        return self.headers.get((section, occurrence))


@dataclass
class RunSection:
    algorithm: MatchingAlgorithm = MatchingAlgorithm.CFM
    gsm_fallback: GsmFallback = GsmFallback.REJECT
    seed: int = field(default_factory=lambda: get_config()["defaults"].DEFAULT_SEED)
    reoptimize: bool = True


@dataclass
class ScenarioConfig:
    """A validated scenario, ready to build a market"""
    name: str
    params: MarketParams
    providers: List[ProviderRecord]
    jobs: List[JobSpec]
    run: RunSection

    def build(self) -> MarketState:
        providers = [ProviderRecord(**{**p.__dict__}) for p in self.providers]
        jobs = [JobSpec(**{**j.__dict__}) for j in self.jobs]
        return MarketState.create(providers, jobs, self.params.floor_price)

    def header(self) -> Dict[str, Any]:
        return {
            "scenario": self.name,
            "pricing": self.params.pricing.to_dict(),
            "horizon": self.params.horizon,
            "floor_window": self.params.floor_window,
            "floor_update": self.params.floor_update,
            "algo": self.run.algorithm.value,
            "gsm_fallback": self.run.gsm_fallback.value,
            "seed": self.run.seed,
            "reoptimize": self.run.reoptimize,
            "providers": len(self.providers),
            "jobs": len(self.jobs),
        }


class _Reader:
    def __init__(self, data: Dict[str, Any], locator: _Locator):
        self.data = data
        self.locator = locator

    def fail(self, message: str, section: str, key: Optional[str] = None, occurrence: int = 0):
        name = f"{section}.{key}" if key else section
        raise ConfigError(f"{name}: {message}", self.locator.line(section, key, occurrence), name)

    def money(self, table: Dict, section: str, key: str, occurrence: int = 0,
              default: Optional[Money] = None) -> Money:
        if key not in table:
            if default is None:
                self.fail("missing money field", section, key, occurrence)
            return default
        try:
            ticks = parse_money(table[key])
        except ValueError as exc:
            self.fail(str(exc), section, key, occurrence)
        if ticks < 0:
            self.fail("must not be negative", section, key, occurrence)
        return ticks

    def integer(self, table: Dict, section: str, key: str, occurrence: int = 0,
                default: Optional[int] = None, minimum: int = 1) -> int:
        if key not in table:
            if default is None:
                self.fail("missing integer field", section, key, occurrence)
            return default
        value = table[key]
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(f"expected an integer, got {value!r}", section, key, occurrence)
        if value < minimum:
            self.fail(f"must be at least {minimum}", section, key, occurrence)
        return value

    def choice(self, table: Dict, section: str, key: str, enum, default, occurrence: int = 0):
        if key not in table:
            return default
        try:
            return enum(table[key])
        except ValueError:
            options = ", ".join(e.value for e in enum)
            self.fail(f"expected one of {options}", section, key, occurrence)

    def span(self, table: Dict, section: str, key: str, money: bool = False) -> Tuple:
        value = table.get(key)
        if not isinstance(value, list) or len(value) != 2:
            self.fail("expected a [low, high] pair", section, key)
        low, high = (self.money({key: v}, section, key) for v in value) if money else value
        if high < low:
            self.fail("high end below low end", section, key)
        return low, high


def _pricing(reader: _Reader) -> PricingFunction:
    market = reader.data.get("market", {})
    table = reader.data.get("pricing", {})
    floor = reader.money(market, "market", "floor")
    b_max = reader.money(market, "market", "b_max")
    if b_max < floor:
        reader.fail("b_max below floor", "market", "b_max")
    kind = reader.choice(table, "pricing", "kind", PricingKind, PricingKind.LINEAR_CAPPED)
    try:
        if kind is PricingKind.LINEAR_CAPPED:
            return PricingFunction(kind, floor, b_max, slope=Fraction(str(table.get("slope", 1))))
        if kind is PricingKind.CONCAVE_POWER:
            return PricingFunction(kind, floor, b_max, exponent=float(table.get("exponent", 0.5)))
        markups = tuple((Fraction(str(a)), parse_money(p)) for a, p in table.get("markups", []))
        return PricingFunction(kind, floor, b_max, markups=markups)
    except ValueError as exc:
        reader.fail(str(exc), "pricing")


def _value_function(reader: _Reader, entry: Dict, section: str, occurrence: int) -> ValueFunction:
    if "values" in entry:
        try:
            values = [parse_money(v) for v in entry["values"]]
            return ValueFunction.tabulated(values)
        except ValueError as exc:
            reader.fail(str(exc), section, "values", occurrence)
    family = entry.get("value")
    if not isinstance(family, dict):
        reader.fail("needs either values = [...] or value = {scale, exponent, support}", section, None, occurrence)
    try:
        return ValueFunction.power_family(float(family["scale"]) * 10, float(family["exponent"]), int(family["support"]))
    except (KeyError, ValueError) as exc:
        reader.fail(f"bad value family: {exc}", section, "value", occurrence)


def _providers(reader: _Reader, seed: int) -> List[ProviderRecord]:
    providers: List[ProviderRecord] = []
    for k, entry in enumerate(reader.data.get("providers", [])):
        cost = reader.money(entry, "providers", "cost", k)
        reported = reader.money(entry, "providers", "reported", k, default=cost)
        for _ in range(reader.integer(entry, "providers", "count", k, default=1)):
            providers.append(ProviderRecord(
                provider_id=len(providers),
                true_cost=cost,
                reported_cost=reported,
                initial_stake=reader.integer(entry, "providers", "stake", k),
                restake_policy=reader.choice(entry, "providers", "restake", RestakePolicy, RestakePolicy.NONE, k),
                arrival=reader.integer(entry, "providers", "arrival", k, default=0, minimum=0),
            ))
    generator = reader.data.get("providers_generator")
    if generator:
        section = "providers_generator"
        count = reader.integer(generator, section, "count", minimum=0)
        cost_lo, cost_hi = reader.span(generator, section, "cost", money=True)
        mark_lo, mark_hi = reader.span(generator, section, "markup", money=True) if "markup" in generator else (0, 0)
        stake_lo, stake_hi = reader.span(generator, section, "stake")
        arr_lo, arr_hi = reader.span(generator, section, "arrival") if "arrival" in generator else (0, 0)
        restake = reader.choice(generator, section, "restake", RestakePolicy, RestakePolicy.NONE)
        for index in range(count):
            rng = stream(seed, "provider", index)
            cost = int(rng.integers(cost_lo, cost_hi + 1))
            providers.append(ProviderRecord(
                provider_id=len(providers),
                true_cost=cost,
                reported_cost=cost + int(rng.integers(mark_lo, mark_hi + 1)),
                initial_stake=int(rng.integers(stake_lo, stake_hi + 1)),
                restake_policy=restake,
                arrival=int(rng.integers(arr_lo, arr_hi + 1)),
            ))
    return providers


def _jobs(reader: _Reader, seed: int) -> List[JobSpec]:
    jobs: List[JobSpec] = []
    for k, entry in enumerate(reader.data.get("jobs", [])):
        budget = reader.money(entry, "jobs", "budget", k)
        value_fn = _value_function(reader, entry, "jobs", k)
        for _ in range(reader.integer(entry, "jobs", "count", k, default=1)):
            jobs.append(JobSpec(
                job_id=len(jobs),
                budget=budget,
                deadline=reader.integer(entry, "jobs", "deadline", k),
                min_run=reader.integer(entry, "jobs", "min_run", k, default=1),
                value_fn=value_fn,
                arrival=reader.integer(entry, "jobs", "arrival", k, default=0, minimum=0),
            ))
    generator = reader.data.get("jobs_generator")
    if generator:
        section = "jobs_generator"
        count = reader.integer(generator, section, "count", minimum=0)
        budget_lo, budget_hi = reader.span(generator, section, "budget", money=True)
        dl_lo, dl_hi = reader.span(generator, section, "deadline")
        run_lo, run_hi = reader.span(generator, section, "min_run") if "min_run" in generator else (1, 1)
        scale_lo, scale_hi = reader.span(generator, section, "scale")
        exp_lo, exp_hi = reader.span(generator, section, "exponent")
        arr_lo, arr_hi = reader.span(generator, section, "arrival") if "arrival" in generator else (0, 0)
        for index in range(count):
            rng = stream(seed, "job", index)
            deadline = int(rng.integers(dl_lo, dl_hi + 1))
            value_fn = ValueFunction.power_family(
                float(rng.uniform(scale_lo, scale_hi)) * 10, float(rng.uniform(exp_lo, exp_hi)), deadline)
            jobs.append(JobSpec(
                job_id=len(jobs),
                budget=int(rng.integers(budget_lo, budget_hi + 1)),
                deadline=deadline,
                min_run=min(deadline, int(rng.integers(run_lo, run_hi + 1))),
                value_fn=value_fn,
                arrival=int(rng.integers(arr_lo, arr_hi + 1)),
            ))
    return jobs


def parse_scenario(text: str, name: str = "scenario", seed: Optional[int] = None) -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            found = re.search(r"line (\d+)", str(exc))
            line = int(found.group(1)) if found else None
        raise ConfigError(f"malformed scenario: {exc}", line) from exc
    reader = _Reader(data, _Locator(text))
    if "market" not in data:
        raise ConfigError("missing [market] section", None, "market")
    market = data["market"]
    run_table = data.get("run", {})
    run = RunSection(
        algorithm=reader.choice(run_table, "run", "algo", MatchingAlgorithm, MatchingAlgorithm.CFM),
        gsm_fallback=reader.choice(run_table, "run", "gsm_fallback", GsmFallback, GsmFallback.REJECT),
        seed=reader.integer(run_table, "run", "seed", default=get_config()["defaults"].DEFAULT_SEED, minimum=0),
        reoptimize=bool(run_table.get("reoptimize", True)),
    )
    if seed is not None:
        run.seed = seed
    params = MarketParams(
        pricing=_pricing(reader),
        horizon=reader.integer(market, "market", "horizon"),
        floor_window=reader.integer(market, "market", "floor_window", default=1),
        floor_update=bool(market.get("floor_update", False)),
        reoptimize=run.reoptimize,
    )
    providers = _providers(reader, run.seed)
    jobs = _jobs(reader, run.seed)
    logger.info(f"scenario {name}: {len(providers)} providers, {len(jobs)} jobs, horizon {params.horizon}")
    return ScenarioConfig(name, params, providers, jobs, run)


def load_scenario(path: Path, seed: Optional[int] = None) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(text, path.stem, seed)


def parse_race(text: str) -> RaceConfig:
    """A [race] table: price, stake, epsilon, true_times, optional quotes and one_sided"""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed race config: {exc}", getattr(exc, "lineno", None)) from exc
    reader = _Reader(data, _Locator(text))
    table = data.get("race")
    if not isinstance(table, dict):
        raise ConfigError("missing [race] section", None, "race")
    times = table.get("true_times")
    if not isinstance(times, list) or not times or not all(isinstance(t, int) and t >= 0 for t in times):
        reader.fail("expected a non-empty list of hours", "race", "true_times")
    quotes = table.get("quotes", times)
    if not isinstance(quotes, list) or len(quotes) != len(times):
        reader.fail("expected one quote per racer", "race", "quotes")
    config = RaceConfig(
        price=reader.money(table, "race", "price"),
        stake=reader.money(table, "race", "stake"),
        epsilon=reader.integer(table, "race", "epsilon", default=0, minimum=0),
        true_times=tuple(times),
        quotes=tuple(quotes),
        one_sided=bool(table.get("one_sided", False)),
    )
    try:
        return config.validate()
    except InvalidStake as exc:
        reader.fail(str(exc), "race", "stake")
