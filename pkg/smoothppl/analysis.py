"""
Smoothness and dependency analysis of commands.

An abstract state (p, d, V) records, for every output variable v, the set
p(v) of input variables in which v is smooth (for the chosen smoothness
property), the set d(v) of inputs v may depend on, and the set V of inputs
that may influence termination. Variable sets are Python ints used as
bitsets over the universe's interned variables.

A forward interval pre-analysis supplies range facts that let conditionally
smooth operators (division, log, sqrt, the normal variance argument) be
treated as smooth.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .errors import InvariantViolation
from .interp import eval_expr
from .intervals import Interval, IntervalEnv, join_envs, widen_envs
from .operators import DISTRIBUTIONS, OPERATORS, ArgKind, SmoothnessProperty
from .syntax import (
    LIKE,
    Assign,
    BinderRef,
    Command,
    Const,
    Cnt,
    Expr,
    If,
    Name,
    Observe,
    Op,
    Pr,
    PVar,
    RName,
    Sample,
    Seq,
    Skip,
    Universe,
    Val,
    Var,
    VarRef,
    While,
    apply_lambda,
    fv,
    is_constant,
    subcommands,
)

logger = logging.getLogger(__name__)

Path = Tuple[int, ...]
WIDEN_AFTER = 3


# ---------------------------------------------------------------------------
# Interval pre-analysis
# ---------------------------------------------------------------------------


def interval_of(e: Expr, env: Optional[IntervalEnv], binder: Optional[Interval] = None) -> Interval:
    """Interval of ``e`` under ``env``; unknown variables are unconstrained."""
    if isinstance(e, Const):
        return Interval.point(e.value)
    if isinstance(e, VarRef):
        if env is not None and isinstance(e.var, PVar):
            return env.get(e.var.name, Interval.top())
        return Interval.top()
    if isinstance(e, BinderRef):
        return binder if binder is not None else Interval.top()
    args = [interval_of(a, env, binder) for a in e.args]
    return OPERATORS[e.op].interval(*args)


@dataclass
class IntervalResult:
    """
    Result of the interval pre-analysis.

    Attributes:
        points (dict): Environment before every atomic command, keyed by its path
        exit (dict): Environment at program exit
    """

    points: Dict[Path, IntervalEnv]
    exit: IntervalEnv

    def at(self, path: Path) -> Optional[IntervalEnv]:
        return self.points.get(path)


def initial_env(c: Command, params: Sequence[str] = (), mode: str = "initial") -> IntervalEnv:
    """
    Start environment of the pre-analysis.

    ``initial`` follows the start state of the density semantics (parameters
    unconstrained, other program variables 0); ``top`` leaves every variable
    unconstrained.
    """
    if mode == "top":
        return {}
    if mode != "initial":
        raise ValueError(f"unknown interval mode: {mode!r}")
    universe = Universe.of(c, params=params)
    env = {x: Interval.point(0.0) for x in universe.pvars}
    env.update({x: Interval.top() for x in params})
    return env


def pre_analyze(
    c: Command, params: Sequence[str] = (), mode: str = "initial"
) -> IntervalResult:
    """Forward interval analysis with join at branches and widening at loop heads."""
    points: Dict[Path, IntervalEnv] = {}
    env = initial_env(c, params, mode)
    exit_env = _intervals(c, env, (), points)
    return IntervalResult(points, exit_env)


def _lookup_all(env: IntervalEnv, keys: Iterable[str]) -> IntervalEnv:
    return {k: env.get(k, Interval.top()) for k in keys}


def _intervals(c: Command, env: IntervalEnv, path: Path, points: Dict[Path, IntervalEnv]) -> IntervalEnv:
    if isinstance(c, Seq):
        mid = _intervals(c.first, env, path + (0,), points)
        return _intervals(c.second, mid, path + (1,), points)
    if isinstance(c, If):
        then = _intervals(c.then, env, path + (0,), points)
        orelse = _intervals(c.orelse, env, path + (1,), points)
        keys = then.keys() | orelse.keys()
        return join_envs(_lookup_all(then, keys), _lookup_all(orelse, keys))
    if isinstance(c, While):
        head = dict(env)
        iteration = 0
        while True:
            out = _intervals(c.body, head, path + (0,), points)
            keys = head.keys() | out.keys()
            head_all = _lookup_all(head, keys)
            new = join_envs(head_all, _lookup_all(out, keys))
            iteration += 1
            if iteration > WIDEN_AFTER:
                new = widen_envs(head_all, new)
            if new == head_all:
                return head_all
            head = new
    points[path] = dict(env)
    if isinstance(c, Assign):
        return {**env, c.target: interval_of(c.expr, env)}
    if isinstance(c, Sample):
        return {**env, c.target: interval_of(c.lam.body, env, Interval.top())}
    return env


# ---------------------------------------------------------------------------
# Abstract states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbstractState:
    """
    Element (p, d, V) of the abstract domain.

    Attributes:
        universe (Universe): Variable universe the bitsets index
        p (tuple): Smooth-input bitset per variable
        d (tuple): Dependency bitset per variable
        V (int): Bitset of inputs that may affect termination
    """

    universe: Universe = field(compare=False)
    p: Tuple[int, ...]
    d: Tuple[int, ...]
    V: int

    @classmethod
    def identity(cls, universe: Universe) -> "AbstractState":
        full = universe.full
        return cls(universe, (full,) * universe.size, tuple(1 << i for i in range(universe.size)), 0)

    def smooth_inputs(self, v: Var) -> FrozenSet[Var]:
        return frozenset(self.universe.unbits(self.p[self.universe.index(v)]))

    def non_smooth_inputs(self, v: Var) -> FrozenSet[Var]:
        mask = self.universe.full & ~self.p[self.universe.index(v)]
        return frozenset(self.universe.unbits(mask))

    def dependencies(self, v: Var) -> FrozenSet[Var]:
        return frozenset(self.universe.unbits(self.d[self.universe.index(v)]))

    @property
    def termination_inputs(self) -> FrozenSet[Var]:
        return frozenset(self.universe.unbits(self.V))

    def is_smooth_in(self, v: Var, inputs: Iterable[Var]) -> bool:
        wanted = self.universe.bits(inputs)
        return self.p[self.universe.index(v)] & wanted == wanted

    def is_identity_at(self, i: int) -> bool:
        return self.p[i] == self.universe.full and self.d[i] == 1 << i

    def check_well_formed(self) -> None:
        """
        Raises:
            InvariantViolation: Unless p(v) ⊇ d(v)ᶜ and d(v) ⊇ V for every v
        """
        full = self.universe.full
        for i, v in enumerate(self.universe.variables):
            if (self.p[i] | self.d[i]) != full:
                raise InvariantViolation(f"smooth set of {v} misses a non-dependency")
            if self.d[i] & self.V != self.V:
                raise InvariantViolation(f"dependency set of {v} misses a termination input")


def _union(f: Sequence[int], mask: int) -> int:
    out = 0
    while mask:
        low = mask & -mask
        out |= f[low.bit_length() - 1]
        mask ^= low
    return out


def _inter(f: Sequence[int], mask: int, full: int) -> int:
    out = full
    while mask:
        low = mask & -mask
        out &= f[low.bit_length() - 1]
        mask ^= low
    return out


def compose(first: AbstractState, second: AbstractState) -> AbstractState:
    """Abstract state of ``first; second``."""
    full = first.universe.full
    p, d, V = first.p, first.d, first.V
    new_p, new_d = [], []
    for i in range(len(p)):
        p2, d2 = second.p[i], second.d[i]
        if p2 == full and d2 == 1 << i:
            new_p.append(p[i] & ~V & full)
            new_d.append(V | d[i])
            continue
        bad = V | (full & ~_inter(p, d2, full)) | _union(d, full & ~p2)
        new_p.append(full & ~bad)
        new_d.append(V | _union(d, d2))
    return AbstractState(first.universe, tuple(new_p), tuple(new_d), V | _union(d, second.V))


# ---------------------------------------------------------------------------
# Expressions and commands
# ---------------------------------------------------------------------------


class _Analyzer:
    def __init__(self, universe: Universe, prop: SmoothnessProperty, intervals: Optional[IntervalResult]):
        self.universe = universe
        self.prop = prop
        self.intervals = intervals
        self.full = universe.full

    def fv_bits(self, e) -> int:
        return self.universe.bits(fv(e))

    def smooth(self, e: Expr, env: Optional[IntervalEnv]) -> int:
        if not isinstance(e, Op):
            return self.full
        result = self.full
        for arg, rule in zip(e.args, OPERATORS[e.op].rules(self.prop)):
            if rule.kind is ArgKind.SMOOTH or (
                rule.kind is ArgKind.CONDITIONAL and rule.holds(interval_of(arg, env))
            ):
                result &= self.smooth(arg, env)
            else:
                result &= self.full & ~self.fv_bits(arg)
        return result

    def env_at(self, path: Path) -> Optional[IntervalEnv]:
        return self.intervals.at(path) if self.intervals is not None else None

    def updates(self, assignments: Dict[Var, Tuple[int, int]], V: int = 0) -> AbstractState:
        state = AbstractState.identity(self.universe)
        p, d = list(state.p), list(state.d)
        for v, (pv, dv) in assignments.items():
            i = self.universe.index(v)
            p[i], d[i] = pv, dv
        return AbstractState(self.universe, tuple(p), tuple(d), V)

    def command(self, c: Command, path: Path) -> AbstractState:
        if isinstance(c, Skip):
            return AbstractState.identity(self.universe)
        if isinstance(c, Seq):
            return compose(self.command(c.first, path + (0,)), self.command(c.second, path + (1,)))
        if isinstance(c, If):
            return self._if(c, path)
        if isinstance(c, While):
            return self._while(c, path)
        env = self.env_at(path)
        if isinstance(c, Assign):
            return self.updates({PVar(c.target): (self.smooth(c.expr, env), self.fv_bits(c.expr))})
        if isinstance(c, Observe):
            pdf = DISTRIBUTIONS[c.dist.kind].pdf
            e = Op("*", (VarRef(LIKE), Op(pdf, (Const(c.value),) + c.dist.args)))
            bit = 1 << self.universe.index(LIKE)
            return self.updates({LIKE: (self.smooth(e, env), bit | self.fv_bits(c.dist))})
        if isinstance(c, Sample):
            return self._sample(c, env)
        raise TypeError(f"not a command: {c!r}")

    def _if(self, c: If, path: Path) -> AbstractState:
        a = self.command(c.then, path + (0,))
        b = self.command(c.orelse, path + (1,))
        fb = self.fv_bits(c.cond)
        keep = self.full & ~fb
        p = tuple(keep & pa & pb for pa, pb in zip(a.p, b.p))
        d = tuple(fb | da | db for da, db in zip(a.d, b.d))
        return AbstractState(self.universe, p, d, fb | a.V | b.V)

    def _while(self, c: While, path: Path) -> AbstractState:
        body = self.command(c.body, path + (0,))
        fb = self.fv_bits(c.cond)
        keep = self.full & ~fb
        n = self.universe.size
        p0, d0, V0 = (self.full,) * n, (0,) * n, 0
        rounds = 0
        while True:
            rounds += 1
            p1, d1 = [], []
            for i in range(n):
                bad = body.V | (self.full & ~_inter(body.p, d0[i], self.full)) | _union(
                    body.d, self.full & ~p0[i]
                )
                p1.append(keep & ~bad)
                d1.append(fb | body.V | _union(body.d, d0[i]) | (1 << i))
            V1 = fb | body.V | _union(body.d, V0)
            p1, d1 = tuple(p1), tuple(d1)
            if (p1, d1, V1) == (p0, d0, V0):
                logger.debug("loop fixpoint reached after %d rounds", rounds)
                return AbstractState(self.universe, p1, d1, V1)
            p0, d0, V0 = p1, d1, V1

    def _sample(self, c: Sample, env: Optional[IntervalEnv]) -> AbstractState:
        pdf = DISTRIBUTIONS[c.dist.kind].pdf
        dist_bits = self.fv_bits(c.dist)
        bit = lambda v: 1 << self.universe.index(v)  # noqa: E731
        x = PVar(c.target)

        def per_name(name: Name):
            body = apply_lambda(c.lam, VarRef(RName(name)))
            density = Op(pdf, (VarRef(RName(name)),) + c.dist.args)
            return body, self.smooth(body, env), self.fv_bits(body), self.smooth(density, env)

        if is_constant(c.name.index):
            raw = float(eval_expr(c.name.index, None))
            name = self.universe.clamp_name(c.name.string, raw)
            _, p_body, d_body, p_pdf = per_name(name)
            return self.updates(
                {
                    x: (p_body, d_body),
                    Val(name): (p_body, d_body),
                    Pr(name): (p_pdf, bit(RName(name)) | dist_bits),
                    Cnt(name): (self.full, bit(Cnt(name))),
                }
            )

        fe = self.fv_bits(c.name.index)
        keep = self.full & ~fe
        assignments = {}
        p_x, d_x = keep, fe
        for name in self.universe.names_of(c.name.string):
            _, p_body, d_body, p_pdf = per_name(name)
            p_x &= p_body
            d_x |= d_body
            assignments[Val(name)] = (keep & p_body, fe | bit(Val(name)) | d_body)
            assignments[Pr(name)] = (keep & p_pdf, fe | bit(Pr(name)) | bit(RName(name)) | dist_bits)
            assignments[Cnt(name)] = (keep, fe | bit(Cnt(name)))
        assignments[x] = (p_x, d_x)
        return self.updates(assignments)


def expr_smooth(
    e: Expr,
    prop: SmoothnessProperty,
    env: Optional[IntervalEnv] = None,
    universe: Optional[Universe] = None,
) -> FrozenSet[Var]:
    """
    Variables in which ``e`` is smooth, under-approximated.

    Returns the set of variables of ``universe`` (by default the variables
    of ``e``) for which the analysis can show smoothness.
    """
    universe = universe or _expr_universe(e)
    return frozenset(universe.unbits(_Analyzer(universe, prop, None).smooth(e, env)))


def _expr_universe(e: Expr) -> Universe:
    pvars = sorted(v.name for v in fv(e) if isinstance(v, PVar))
    strings = sorted({v.name.string for v in fv(e) if not isinstance(v, (PVar, type(LIKE)))})
    return Universe(tuple(pvars), tuple(strings))


def abstract_exec(
    c: Command,
    prop: SmoothnessProperty,
    universe: Optional[Universe] = None,
    intervals: Optional[IntervalResult] = None,
) -> AbstractState:
    """
    Abstract semantics of ``c``.

    Args:
        c (Command): Command to analyse
        prop (SmoothnessProperty): Smoothness property
        universe (Optional[Universe]): Variable universe (default: from ``c``)
        intervals (Optional[IntervalResult]): Pre-analysis facts; None disables refinement

    Returns:
        AbstractState: Well-formed (p, d, V)

    Raises:
        InvariantViolation: If the result is not well formed
    """
    universe = universe or Universe.of(c)
    state = _Analyzer(universe, prop, intervals).command(c, ())
    state.check_well_formed()
    return state


def analyze(
    c: Command,
    prop: SmoothnessProperty,
    params: Sequence[str] = (),
    universe: Optional[Universe] = None,
    refine: bool = True,
) -> AbstractState:
    """Pre-analysis followed by the abstract semantics."""
    intervals = pre_analyze(c, params) if refine else None
    return abstract_exec(c, prop, universe or Universe.of(c, params=params), intervals)


# ---------------------------------------------------------------------------
# Derived sets and reports
# ---------------------------------------------------------------------------


def program_strings(c: Command) -> List[str]:
    return sorted({node.name.string for node in subcommands(c) if isinstance(node, Sample)})


@dataclass(frozen=True)
class SmoothSet:
    """
    Parameters and names in which a program's density factors are smooth.

    Attributes:
        params (frozenset): Smooth parameter variables
        strings (frozenset): Name strings all of whose indices are smooth
        names (frozenset): Smooth individual names
    """

    params: FrozenSet[str]
    strings: FrozenSet[str]
    names: FrozenSet[Name]


def density_factor_bits(state: AbstractState, names: Iterable[Name]) -> int:
    """p(like) ∩ ⋂ p(pr_μ) over ``names``."""
    universe = state.universe
    bits = state.p[universe.index(LIKE)]
    for name in names:
        bits &= state.p[universe.index(Pr(name))]
    return bits


def smooth_name_param_set(
    c: Command,
    params: Sequence[str],
    prop: SmoothnessProperty,
    state: Optional[AbstractState] = None,
    universe: Optional[Universe] = None,
) -> SmoothSet:
    """
    Parameters and names in which every density factor of ``c`` is smooth.

    Only names of strings that ``c`` samples are considered.
    """
    if state is None:
        state = analyze(c, prop, params, universe)
    universe = state.universe
    strings = program_strings(c)
    names = [n for s in strings for n in universe.names_of(s)]
    bits = density_factor_bits(state, names)
    smooth = set(universe.unbits(bits))
    smooth_names = frozenset(n for n in names if RName(n) in smooth)
    return SmoothSet(
        params=frozenset(x for x in params if PVar(x) in smooth),
        strings=frozenset(
            s for s in strings if all(n in smooth_names for n in universe.names_of(s))
        ),
        names=smooth_names,
    )


def analysis_report(
    state: AbstractState,
    prop: SmoothnessProperty,
    smooth: Optional[SmoothSet] = None,
) -> dict:
    """JSON-ready report; variables whose entry is the identity are omitted."""
    universe = state.universe
    variables = {}
    for i, v in enumerate(universe.variables):
        if v is not LIKE and state.is_identity_at(i):
            continue
        variables[str(v)] = {
            "not_smooth_in": [str(u) for u in universe.unbits(universe.full & ~state.p[i])],
            "depends_on": [str(u) for u in universe.unbits(state.d[i])],
        }
    report = {
        "property": prop.value,
        "variables": variables,
        "termination_depends_on": [str(u) for u in universe.unbits(state.V)],
    }
    if smooth is not None:
        report["smooth_params"] = sorted(smooth.params)
        report["smooth_names"] = sorted(smooth.strings)
    return report
