"""
Interval abstract domain over the extended reals.

Used by the safety pre-analysis that proves operator arguments stay inside
the region where the operator is smooth (positive variances, denominators
bounded away from zero, ...).
"""

import math
from dataclasses import dataclass
from typing import Dict, Iterable

INF = math.inf


@dataclass(frozen=True)
class Interval:
    """
    Closed interval [lo, hi] with possibly infinite bounds.

    Attributes:
        lo (float): Lower bound (may be -inf)
        hi (float): Upper bound (may be +inf)
    """

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            # collapse malformed results to top
            object.__setattr__(self, "lo", -INF)
            object.__setattr__(self, "hi", INF)

    @classmethod
    def top(cls) -> "Interval":
        return cls(-INF, INF)

    @classmethod
    def point(cls, value: float) -> "Interval":
        return cls(value, value)

    @classmethod
    def hull(cls, values: Iterable[float]) -> "Interval":
        items = [v for v in values if not math.isnan(v)]
        if not items:
            return cls.top()
        return cls(min(items), max(items))

    @property
    def is_top(self) -> bool:
        return self.lo == -INF and self.hi == INF

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"

    def __contains__(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    def __le__(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def __or__(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def widen(self, other: "Interval") -> "Interval":
        """Push every bound that moved in ``other`` to infinity."""
        lo = self.lo if other.lo >= self.lo else -INF
        hi = self.hi if other.hi <= self.hi else INF
        return Interval(lo, hi)

    def positive(self) -> bool:
        return self.lo > 0

    def excludes_zero(self) -> bool:
        return self.lo > 0 or self.hi < 0


def _mul(a: float, b: float) -> float:
    if a == 0 or b == 0:
        return 0.0
    return a * b


class Arithmetic:
    """Transfer functions for the real operators."""

    @staticmethod
    def add(a: Interval, b: Interval) -> Interval:
        return Interval(a.lo + b.lo, a.hi + b.hi)

    @staticmethod
    def sub(a: Interval, b: Interval) -> Interval:
        return Interval(a.lo - b.hi, a.hi - b.lo)

    @staticmethod
    def mul(a: Interval, b: Interval) -> Interval:
        corners = [_mul(x, y) for x in (a.lo, a.hi) for y in (b.lo, b.hi)]
        return Interval.hull(corners)

    @staticmethod
    def div(a: Interval, b: Interval) -> Interval:
        if not b.excludes_zero():
            return Interval.top()
        corners = []
        for x in (a.lo, a.hi):
            for y in (b.lo, b.hi):
                if math.isinf(x) and math.isinf(y):
                    return Interval.top()
                corners.append(x / y)
        return Interval.hull(corners)

    @staticmethod
    def exp(a: Interval) -> Interval:
        return Interval(math.exp(min(a.lo, 709.0)), math.exp(min(a.hi, 709.0)))

    @staticmethod
    def log(a: Interval) -> Interval:
        if a.hi <= 0:
            return Interval.point(-745.0)
        hi = math.log(a.hi) if a.hi < INF else INF
        if a.lo > 0:
            return Interval(math.log(a.lo), hi)
        return Interval(-745.0, max(hi, -745.0))

    @staticmethod
    def sqrt(a: Interval) -> Interval:
        if a.hi <= 0:
            return Interval.point(1.0)
        hi = math.sqrt(a.hi)
        if a.lo > 0:
            return Interval(math.sqrt(a.lo), hi)
        return Interval(0.0, max(hi, 1.0))

    @staticmethod
    def relu(a: Interval) -> Interval:
        return Interval(max(a.lo, 0.0), max(a.hi, 0.0))

    @staticmethod
    def floor(a: Interval) -> Interval:
        return Interval(math.floor(a.lo) if a.lo > -INF else -INF,
                        math.floor(a.hi) if a.hi < INF else INF)

    @staticmethod
    def step(a: Interval) -> Interval:
        if a.lo > 0:
            return Interval.point(1.0)
        if a.hi <= 0:
            return Interval.point(0.0)
        return Interval(0.0, 1.0)

    @staticmethod
    def normal_pdf(x: Interval, mean: Interval, variance: Interval) -> Interval:
        if variance.positive():
            return Interval(0.0, 1.0 / math.sqrt(2 * math.pi * variance.lo))
        return Interval(0.0, INF)

    @staticmethod
    def uniform_pdf(x: Interval, lo: Interval, hi: Interval) -> Interval:
        return Interval(0.0, INF)

    @staticmethod
    def xy_ratio(x: Interval, y: Interval) -> Interval:
        return Interval(-0.5, 0.5)


IntervalEnv = Dict[str, Interval]


def join_envs(a: IntervalEnv, b: IntervalEnv) -> IntervalEnv:
    """Pointwise join; a variable missing on one side is unconstrained."""
    return {k: a[k] | b[k] for k in a.keys() & b.keys()}


def widen_envs(old: IntervalEnv, new: IntervalEnv) -> IntervalEnv:
    return {k: old[k].widen(new[k]) for k in old.keys() & new.keys()}
