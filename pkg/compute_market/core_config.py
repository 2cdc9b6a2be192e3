"""Core configuration for the market engine.

Modules read shared limits and defaults from here so the CLI, the suites and the
tests agree on one set of numbers.
"""

import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

OUTPUT_ENV_VAR = "COMPUTE_MARKET_OUT"


class ArtifactName(Enum):
    """Files a run or a verification writes"""
    PRICES = "prices.csv"
    MATCHES = "matches.csv"
    PAYOUTS = "payouts.csv"
    SUMMARY = "summary.txt"
    REGRET = "regret.csv"
    VERIFY = "verify_report.txt"
    BENCH = "bench.csv"
    PAYOFFS = "payoffs.csv"
    ADVERSARY = "adversary_report.txt"


@dataclass
class EngineDefaults:
    """Limits and defaults shared across the package"""

    CSV_SCHEMA: str = "compute-market-csv v1"
    DEFAULT_SEED: int = 20240601
    ORACLE_LIMIT: int = 8  # providers and jobs for exhaustive oracles
    HYPER_PERIOD_LIMIT: int = 24
    PEEL_MAX_PROVIDERS: int = 5
    PEEL_MAX_TAU: int = 6
    BOOTSTRAP_RESAMPLES: int = 2000
    CONFIDENCE: float = 0.95

    SUITE_SIZES: Dict[str, int] = field(default_factory=lambda: {
        "gsm_instances": 1000,
        "sregret_instances": 1000,
        "dregret_instances": 60,
        "curve_pairs": 200,
        "admissibility_constructions": 100,
        "cohorts": 500,
        "users": 500,
        "race_configs": 200,
        "incentive_trials": 10000,
    })

    BENCH_EXPONENTS: tuple = tuple(range(4, 17))


ENGINE_CONFIG = {
    "defaults": EngineDefaults(),
    "money_digits": 1,
    "default_output": "runs",
}


def get_config() -> Dict[str, Any]:
    """Get the global engine configuration"""
    return ENGINE_CONFIG


def output_root(override: Optional[str] = None) -> Path:
    """Resolve the output directory: flag, then environment (.env honoured), then default"""
    if override:
        return Path(override)
    load_dotenv()
    return Path(os.environ.get(OUTPUT_ENV_VAR, ENGINE_CONFIG["default_output"]))
