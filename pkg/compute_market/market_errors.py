"""Exception hierarchy for the compute market engine"""
from typing import Optional


class MarketError(Exception):
    """Base class for every engine fault"""


class InconsistentState(MarketError):
    """Market state is malformed; the engine never repairs it"""


class LedgerViolation(MarketError):
    """A provider or job appears twice in one period's ledger"""


class NoFloorSupply(MarketError):
    """Positive demand with no staked provider at or below the floor price"""


class MonotonicityViolation(MarketError):
    """A demand or supply curve breaks its monotone direction"""


class NotConcave(MarketError):
    """Value function is not increasing and discretely concave"""


class HourChoiceMismatch(MarketError):
    """Closed-form hour choice disagrees with the exhaustive argmax"""


class OutOfSupport(MarketError, ValueError):
    """Hour count outside a value function's tabulated support"""


class NotWorking(MarketError):
    """Provider has no running match at the requested hour"""


class SizeLimit(MarketError):
    """Instance exceeds the exhaustive search limits"""


class UnsortedCapacities(MarketError, ValueError):
    """Capacities were expected in non-increasing order"""


class InvalidStake(MarketError):
    """Race stake does not exceed every possible reward"""


class NoRacers(MarketError):
    """Race has no eligible racer"""


class ConfigError(MarketError):
    """Scenario file could not be parsed or validated"""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{location}")
