"""
Primitive operator and distribution tables.

Every operator symbol that may appear in a program resolves to exactly one
``OperatorDescriptor``. A descriptor carries the total evaluator (with the
default values used outside the operator's domain), an interval transfer
function for the safety pre-analysis, and a per-argument smoothness
classification for each supported smoothness property.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import dual
from .dual import value_of, where
from .intervals import Arithmetic, Interval

LOG_DEFAULT = -745.0
SQRT_DEFAULT = 1.0
VARIANCE_DEFAULT = 1.0
EXP_CLAMP = 709.0


class SmoothnessProperty(enum.Enum):
    """The two smoothness properties the analysis can be instantiated with."""

    DIFFERENTIABILITY = "diff"
    LOCAL_LIPSCHITZ = "lip"

    @classmethod
    def parse(cls, text: str) -> "SmoothnessProperty":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"unknown smoothness property: {text!r}") from None


class ArgKind(enum.Enum):
    SMOOTH = "smooth"
    CONDITIONAL = "conditional"
    NONSMOOTH = "nonsmooth"


@dataclass(frozen=True)
class ArgRule:
    """
    Smoothness of an operator in one argument.

    Attributes:
        kind (ArgKind): Classification
        condition (Optional[Callable]): Range condition on the argument's
            interval, required when ``kind`` is CONDITIONAL
        label (str): Human-readable name of the condition
    """

    kind: ArgKind
    condition: Optional[Callable[[Interval], bool]] = field(default=None, compare=False)
    label: str = ""

    def holds(self, interval: Interval) -> bool:
        if self.kind is ArgKind.SMOOTH:
            return True
        if self.kind is ArgKind.NONSMOOTH:
            return False
        return bool(self.condition(interval))


SMOOTH = ArgRule(ArgKind.SMOOTH)
NONSMOOTH = ArgRule(ArgKind.NONSMOOTH)
POSITIVE = ArgRule(ArgKind.CONDITIONAL, Interval.positive, "positive")
NONZERO = ArgRule(ArgKind.CONDITIONAL, Interval.excludes_zero, "nonzero")


@dataclass(frozen=True)
class OperatorDescriptor:
    """
    A primitive real operator.

    Attributes:
        name (str): Symbol used in programs
        arity (int): Number of arguments
        evaluator (Callable): Total function over floats, lane arrays and duals
        interval (Callable): Interval transfer function
        smoothness (Mapping): Per-property tuple of ArgRule, one per argument
        infix (Optional[int]): Binding power when printed infix, None for calls
    """

    name: str
    arity: int
    evaluator: Callable = field(compare=False)
    interval: Callable = field(compare=False)
    smoothness: Mapping[SmoothnessProperty, Tuple[ArgRule, ...]] = field(compare=False)
    infix: Optional[int] = None

    def rules(self, prop: SmoothnessProperty) -> Tuple[ArgRule, ...]:
        return self.smoothness[prop]


def _both(*rules: ArgRule) -> Dict[SmoothnessProperty, Tuple[ArgRule, ...]]:
    return {prop: tuple(rules) for prop in SmoothnessProperty}


def _div(a, b):
    zero = value_of(b) == 0
    return where(zero, 0.0, a / where(zero, 1.0, b))


def _exp(x):
    high = value_of(x) > EXP_CLAMP
    return dual.exp(where(high, EXP_CLAMP, x))


def _log(x):
    pos = value_of(x) > 0
    return where(pos, dual.log(where(pos, x, 1.0)), LOG_DEFAULT)


def _sqrt(x):
    pos = value_of(x) > 0
    return where(pos, dual.sqrt(where(pos, x, 1.0)), SQRT_DEFAULT)


def _relu(x):
    return where(value_of(x) > 0, x, 0.0)


def _step(x):
    return where(value_of(x) > 0, 1.0, 0.0)


def normal_variance(v):
    """Variance with the default applied to non-positive values."""
    return where(value_of(v) > 0, v, VARIANCE_DEFAULT)


def _normal_pdf(x, mean, variance):
    v = normal_variance(variance)
    d = x - mean
    return dual.exp(-(d * d) / (2.0 * v)) / dual.sqrt(2.0 * math.pi * v)


def uniform_bounds(lo, hi):
    """Bounds with the default [0, 1] applied to empty ranges."""
    ok = value_of(hi) > value_of(lo)
    return where(ok, lo, 0.0), where(ok, hi, 1.0)


def _uniform_pdf(x, lo, hi):
    a, b = uniform_bounds(lo, hi)
    xv = value_of(x)
    inside = np.logical_and(xv >= value_of(a), xv <= value_of(b))
    return where(inside, 1.0 / (b - a), 0.0)


def _xy_ratio(x, y):
    den = x * x + y * y
    zero = value_of(den) == 0
    return where(zero, 0.0, (x * y) / where(zero, 1.0, den))


OPERATORS: Dict[str, OperatorDescriptor] = {
    op.name: op
    for op in (
        OperatorDescriptor(
            "+", 2, lambda a, b: a + b, Arithmetic.add, _both(SMOOTH, SMOOTH), infix=1
        ),
        OperatorDescriptor(
            "-", 2, lambda a, b: a - b, Arithmetic.sub, _both(SMOOTH, SMOOTH), infix=1
        ),
        OperatorDescriptor(
            "*", 2, lambda a, b: a * b, Arithmetic.mul, _both(SMOOTH, SMOOTH), infix=2
        ),
        OperatorDescriptor("/", 2, _div, Arithmetic.div, _both(SMOOTH, NONZERO), infix=2),
        OperatorDescriptor("exp", 1, _exp, Arithmetic.exp, _both(SMOOTH)),
        OperatorDescriptor("log", 1, _log, Arithmetic.log, _both(POSITIVE)),
        OperatorDescriptor("sqrt", 1, _sqrt, Arithmetic.sqrt, _both(POSITIVE)),
        OperatorDescriptor(
            "relu",
            1,
            _relu,
            Arithmetic.relu,
            {
                SmoothnessProperty.DIFFERENTIABILITY: (NONSMOOTH,),
                SmoothnessProperty.LOCAL_LIPSCHITZ: (SMOOTH,),
            },
        ),
        OperatorDescriptor("floor", 1, dual.floor, Arithmetic.floor, _both(NONSMOOTH)),
        OperatorDescriptor("step", 1, _step, Arithmetic.step, _both(NONSMOOTH)),
        OperatorDescriptor(
            "normal_pdf",
            3,
            _normal_pdf,
            Arithmetic.normal_pdf,
            _both(SMOOTH, SMOOTH, POSITIVE),
        ),
        OperatorDescriptor(
            "uniform_pdf",
            3,
            _uniform_pdf,
            Arithmetic.uniform_pdf,
            _both(NONSMOOTH, NONSMOOTH, NONSMOOTH),
        ),
        OperatorDescriptor(
            "xy_ratio", 2, _xy_ratio, Arithmetic.xy_ratio, _both(NONSMOOTH, NONSMOOTH)
        ),
    )
}

INFIX = {name: op.infix for name, op in OPERATORS.items() if op.infix is not None}


def lookup(name: str) -> OperatorDescriptor:
    try:
        return OPERATORS[name]
    except KeyError:
        raise KeyError(f"unknown operator: {name!r}") from None


def _sample_normal(rng: np.random.Generator, params: Sequence, size: int) -> np.ndarray:
    mean, variance = (np.asarray(value_of(p), dtype=float) for p in params)
    variance = np.where(variance > 0, variance, VARIANCE_DEFAULT)
    return mean + np.sqrt(variance) * rng.standard_normal(size)


def _sample_uniform(rng: np.random.Generator, params: Sequence, size: int) -> np.ndarray:
    lo, hi = (np.asarray(value_of(p), dtype=float) for p in params)
    ok = hi > lo
    lo, hi = np.where(ok, lo, 0.0), np.where(ok, hi, 1.0)
    return lo + (hi - lo) * rng.random(size)


@dataclass(frozen=True)
class DistributionDescriptor:
    """
    A distribution constructor.

    Attributes:
        kind (str): Internal kind ("normal", "uniform")
        keyword (str): Surface keyword ("N", "U")
        arity (int): Number of parameters
        pdf (str): Name of the density operator taking (value, *params)
        sampler (Callable): Draws ``size`` values given parameter values
    """

    kind: str
    keyword: str
    arity: int
    pdf: str
    sampler: Callable = field(compare=False)


DISTRIBUTIONS: Dict[str, DistributionDescriptor] = {
    d.kind: d
    for d in (
        DistributionDescriptor("normal", "N", 2, "normal_pdf", _sample_normal),
        DistributionDescriptor("uniform", "U", 2, "uniform_pdf", _sample_uniform),
    )
}

DIST_KEYWORDS = {d.keyword: d for d in DISTRIBUTIONS.values()}
