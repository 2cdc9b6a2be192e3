"""Load, pricing functions, the equilibrium quote and floor updates.

All prices are integer ticks. The quote is the smallest tick P in [P_f, b_max] with
P - f(D(P) / S_f) >= 0, found by bisection on the tick grid.
"""
import logging
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

from .market_errors import MonotonicityViolation, NoFloorSupply
from .market_types import Money, round_half_down

logger = logging.getLogger(__name__)

Number = Union[int, Fraction, float]
Curve = Callable[[Money], Number]


class PricingKind(Enum):
    LINEAR_CAPPED = "linear-capped"
    CONCAVE_POWER = "concave-power"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class PricingFunction:
    """Price as a function of load, equal to the floor at load one and capped at b_max"""
    kind: PricingKind
    floor_price: Money
    b_max: Money
    slope: Fraction = Fraction(1)  # linear-capped: markup per unit of excess load, relative to the floor
    exponent: float = 1.0  # concave-power
    markups: Tuple[Tuple[Fraction, Money], ...] = ()  # tabulated: (load, ticks over the floor)

    def __post_init__(self):
        if self.floor_price < 0 or self.b_max < self.floor_price:
            raise ValueError(f"need 0 <= floor ({self.floor_price}) <= b_max ({self.b_max})")
        if self.kind is PricingKind.LINEAR_CAPPED and self.slope <= 0:
            raise ValueError("linear-capped slope must be positive")
        if self.kind is PricingKind.CONCAVE_POWER and not 0 < self.exponent <= 1:
            raise ValueError("concave-power exponent must lie in (0, 1]")
        if self.kind is PricingKind.TABULATED:
            loads = [a for a, _ in self.markups]
            marks = [p for _, p in self.markups]
            if not self.markups or loads[0] != 1 or marks[0] != 0:
                raise ValueError("tabulated markups must start at (1, 0)")
            if any(b <= a for a, b in zip(loads, loads[1:])) or any(q < p for p, q in zip(marks, marks[1:])):
                raise ValueError("tabulated loads must increase and markups must not decrease")

    def __call__(self, alpha: Number) -> Number:
        if alpha < 1:
            raise ValueError(f"load {alpha} below 1")
        if self.kind is PricingKind.LINEAR_CAPPED:
            raw = self.floor_price * (1 + self.slope * (Fraction(alpha) - 1))
        elif self.kind is PricingKind.CONCAVE_POWER:
            raw = self.floor_price * float(alpha) ** self.exponent
        else:
            raw = self.floor_price + self._markup(Fraction(alpha))
        return min(self.b_max, raw)

    def _markup(self, alpha: Fraction) -> Fraction:
        for (a0, p0), (a1, p1) in zip(self.markups, self.markups[1:]):
            if alpha <= a1:
                return p0 + (p1 - p0) * (alpha - a0) / (a1 - a0)
        return Fraction(self.markups[-1][1])

    def with_floor(self, floor_price: Money) -> 'PricingFunction':
        return replace(self, floor_price=floor_price, b_max=max(self.b_max, floor_price))

    def to_dict(self) -> Dict:
        data = {"kind": self.kind.value, "floor_price": self.floor_price, "b_max": self.b_max}
        if self.kind is PricingKind.LINEAR_CAPPED:
            data["slope"] = str(self.slope)
        elif self.kind is PricingKind.CONCAVE_POWER:
            data["exponent"] = self.exponent
        else:
            data["markups"] = [[str(a), p] for a, p in self.markups]
        return data


def compute_load(demand: Number, floor_supply: int) -> Fraction:
    """1 when demand fits under the floor supply, else demand / floor supply"""
    if demand <= floor_supply:
        return Fraction(1)
    if floor_supply <= 0:
        raise NoFloorSupply(f"demand {demand} with no floor supply")
    return Fraction(demand) / floor_supply


@dataclass
class Quote:
    price: Money
    clamped: bool = False
    evaluations: int = 0


def check_monotone(curve: Curve, low: Money, high: Money, increasing: bool = False) -> None:
    """Sample a curve on every tick of [low, high] and enforce its direction"""
    previous = curve(low)
    for price in range(low + 1, high + 1):
        current = curve(price)
        if (current < previous) if increasing else (current > previous):
            direction = "decreases" if increasing else "increases"
            raise MonotonicityViolation(f"curve {direction} at P={price}: {previous} -> {current}")
        previous = current


def solve_equilibrium_quote(f: PricingFunction, demand: Curve, floor_supply: int,
                            low: Optional[Money] = None, high: Optional[Money] = None,
                            validate: bool = True) -> Quote:
    """Smallest tick P in the bracket with P >= f(alpha(P))"""
    low = f.floor_price if low is None else low
    high = f.b_max if high is None else high
    if validate:
        check_monotone(demand, low, high)
    evaluations = 0

    def phi(price: Money) -> Number:
        nonlocal evaluations
        evaluations += 1
        return price - f(compute_load(demand(price), floor_supply))

    at_low = phi(low)
    if at_low >= 0:
        clamped = at_low > 0
        if clamped:
            logger.warning(f"quote clamped at lower bracket {low}")
        return Quote(low, clamped, evaluations)
    if phi(high) < 0:
        logger.warning(f"quote clamped at upper bracket {high}")
        return Quote(high, True, evaluations)
    below, above = low, high
    while above - below > 1:
        middle = (below + above) // 2
        if phi(middle) >= 0:
            above = middle
        else:
            below = middle
    return Quote(above, False, evaluations)


def grid_scan_quote(f: PricingFunction, demand: Curve, floor_supply: int) -> Money:
    """Independent reference: walk the tick grid upward to the first P with Phi(P) >= 0"""
    for price in range(f.floor_price, f.b_max + 1):
        if price - f(compute_load(demand(price), floor_supply)) >= 0:
            return price
    return f.b_max


@dataclass
class AdmissibilityReport:
    admissible: bool
    threshold: Optional[Money]  # None when no admissible price exists up to b_max
    supply_at_quote: Number = 0
    demand_at_quote: Number = 0


def check_admissibility(supply: Curve, demand: Curve, price: Money, floor_price: Money,
                        b_max: Money) -> AdmissibilityReport:
    threshold = next((p for p in range(floor_price, b_max + 1) if supply(p) >= demand(p)), None)
    s, d = supply(price), demand(price)
    return AdmissibilityReport(s >= d, threshold, s, d)


def update_floor(history: Sequence[Optional[Money]], window: int, current_floor: Money) -> Money:
    """Time average of the last `window` per-period marginal costs, rounded half down.

    Periods without matches (None) contribute the current floor; short histories are
    padded by repeating their oldest entry.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    if not history:
        raise ValueError("floor update needs at least one period of history")
    costs = [current_floor if c is None else c for c in history][-window:]
    costs = [costs[0]] * (window - len(costs)) + costs
    return round_half_down(Fraction(sum(costs), window))
