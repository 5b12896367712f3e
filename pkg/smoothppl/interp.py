"""
Density semantics and sampling semantics of commands.

The interpreter executes a command over a batch of independent *lanes*:
every state variable holds either a plain float (shared by all lanes), a
numpy array with one entry per lane, or a ``Dual`` of either. Control flow
is handled with lane masks, so each lane follows exactly the scalar
semantics; the scalar entry points are the one-lane case.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Union

import numpy as np

from .dual import Dual, lane, value_of, where
from .errors import DivergedError, DoubleSampleError
from .operators import DISTRIBUTIONS, OPERATORS
from .syntax import (
    LIKE,
    And,
    Assign,
    BinderRef,
    BoolExpr,
    BTrue,
    Cnt,
    Command,
    Const,
    Dist,
    Expr,
    If,
    Less,
    Name,
    NameExpr,
    Not,
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
)

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 1_000_000


class State:
    """
    A valuation of every variable in a universe.

    Attributes:
        universe (Universe): The variables this state is defined on
        values (list): One value per interned variable
    """

    __slots__ = ("universe", "values")

    def __init__(self, universe: Universe, values: Optional[List] = None):
        self.universe = universe
        self.values = list(values) if values is not None else [0.0] * universe.size
        if len(self.values) != universe.size:
            raise ValueError("state size does not match its universe")

    def __getitem__(self, v: Var):
        return self.values[self.universe.index(v)]

    def __setitem__(self, v: Var, value) -> None:
        self.values[self.universe.index(v)] = value

    def get(self, v: Var):
        return self.values[self.universe.index(v)]

    def copy(self) -> "State":
        return State(self.universe, self.values)

    @property
    def lanes(self) -> Optional[int]:
        """Number of lanes if any value is batched, else None."""
        for x in self.values:
            n = np.ndim(value_of(x))
            if n:
                return int(np.shape(value_of(x))[0])
        return None

    def lane(self, index: int) -> "State":
        return State(self.universe, [lane(x, index) for x in self.values])

    def as_dict(self) -> Dict[Var, object]:
        return dict(zip(self.universe.variables, self.values))

    def __repr__(self) -> str:
        shown = ", ".join(
            f"{v}={x}" for v, x in self.as_dict().items() if not _is_zero(x)
        )
        return f"State({shown})"


def _is_zero(x) -> bool:
    return not isinstance(x, (Dual, np.ndarray)) and x == 0.0


@dataclass(frozen=True)
class Ok:
    state: State
    steps: int


@dataclass(frozen=True)
class Diverged:
    budget: int


ExecResult = Union[Ok, Diverged]


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


def eval_expr(e: Expr, state: Optional[State], binder_value=None):
    """
    Evaluate a real expression.

    Out-of-domain operator arguments produce the operator's default value.
    Works lane-wise and in dual mode.

    Args:
        e (Expr): Expression
        state (Optional[State]): State to read variables from
        binder_value: Value of the enclosing lambda's binder, if any

    Returns:
        The value (float, lane array or Dual)
    """
    if isinstance(e, Const):
        return e.value
    if isinstance(e, VarRef):
        if state is None:
            raise ValueError(f"no state to read {e.var} from")
        return state.get(e.var)
    if isinstance(e, BinderRef):
        if binder_value is None:
            raise ValueError("lambda binder used outside its body")
        return binder_value
    args = [eval_expr(a, state, binder_value) for a in e.args]
    return OPERATORS[e.op].evaluator(*args)


def eval_bool(b: BoolExpr, state: State):
    if isinstance(b, BTrue):
        return True
    if isinstance(b, Less):
        return np.less(value_of(eval_expr(b.left, state)), value_of(eval_expr(b.right, state)))
    if isinstance(b, And):
        return np.logical_and(eval_bool(b.left, state), eval_bool(b.right, state))
    return np.logical_not(eval_bool(b.operand, state))


def eval_name(n: NameExpr, state: State) -> Name:
    """create_name: the clamped name denoted by ``n`` (single-lane)."""
    raw = value_of(eval_expr(n.index, state))
    if np.ndim(raw):
        raise ValueError("eval_name needs a single-lane state")
    return state.universe.clamp_name(n.string, float(raw))


@dataclass(frozen=True)
class DensityFn:
    """
    An evaluated distribution.

    Attributes:
        kind (str): Distribution kind
        params (tuple): Parameter values, before defaulting
    """

    kind: str
    params: tuple

    def pdf(self, r):
        return OPERATORS[DISTRIBUTIONS[self.kind].pdf].evaluator(r, *self.params)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return DISTRIBUTIONS[self.kind].sampler(rng, self.params, size)

    @property
    def mean(self):
        if self.kind != "normal":
            raise AttributeError("mean is only tracked for normal distributions")
        return self.params[0]

    @property
    def variance(self):
        if self.kind != "normal":
            raise AttributeError("variance is only tracked for normal distributions")
        v = self.params[1]
        return where(value_of(v) > 0, v, 1.0)


def eval_dist(d: Dist, state: State) -> DensityFn:
    return DensityFn(d.kind, tuple(eval_expr(a, state) for a in d.args))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


class _Machine:
    """Executes a command on all lanes of a state in place."""

    def __init__(
        self,
        state: State,
        lanes: int,
        budget: int,
        rng: Optional[np.random.Generator] = None,
    ):
        if budget <= 0:
            raise ValueError(f"budget must be positive, got {budget}")
        self.state = state
        self.universe = state.universe
        self.lanes = lanes
        self.budget = budget
        self.rng = rng
        self.steps = np.zeros(lanes, dtype=np.int64)
        self.alive = np.ones(lanes, dtype=bool)
        self.double = np.zeros(lanes, dtype=bool)
        self.double_names: List[Name] = []

    def tick(self, mask: np.ndarray) -> np.ndarray:
        self.steps += mask
        over = self.steps > self.budget
        if over.any():
            self.alive &= ~over
        return mask & self.alive

    def update(self, v: Var, value, mask: np.ndarray) -> None:
        i = self.universe.index(v)
        if mask.all():
            self.state.values[i] = value
        else:
            self.state.values[i] = where(mask, value, self.state.values[i])

    def run(self, c: Command, mask: np.ndarray) -> None:
        if isinstance(c, Seq):
            self.run(c.first, mask)
            self.run(c.second, mask & self.alive)
            return
        if isinstance(c, While):
            self._while(c, mask)
            return
        mask = mask & self.alive
        if not mask.any():
            return
        mask = self.tick(mask)
        if not mask.any():
            return
        if isinstance(c, Skip):
            return
        if isinstance(c, Assign):
            self.update(PVar(c.target), eval_expr(c.expr, self.state), mask)
        elif isinstance(c, If):
            cond = eval_bool(c.cond, self.state)
            then = np.logical_and(mask, cond)
            orelse = np.logical_and(mask, np.logical_not(cond))
            if then.any():
                self.run(c.then, then)
            if orelse.any():
                self.run(c.orelse, orelse & self.alive)
        elif isinstance(c, Observe):
            density = eval_dist(c.dist, self.state).pdf(c.value)
            self.update(LIKE, self.state.get(LIKE) * density, mask)
        elif isinstance(c, Sample):
            self._sample(c, mask)
        else:
            raise TypeError(f"not a command: {c!r}")

    def _while(self, c: While, mask: np.ndarray) -> None:
        active = mask
        while True:
            active = active & self.alive
            if not active.any():
                return
            active = self.tick(active)
            cond = np.logical_and(active, eval_bool(c.cond, self.state))
            if not cond.any():
                return
            self.run(c.body, cond)
            active = cond

    def _sample(self, c: Sample, mask: np.ndarray) -> None:
        raw = value_of(eval_expr(c.name.index, self.state))
        if np.ndim(raw) == 0:
            self._sample_at(c, self.universe.clamp_name(c.name.string, float(raw)), mask)
            return
        n = self.universe.name_bound
        indices = np.floor(np.clip(np.nan_to_num(raw, nan=0.0), 0, n - 1)).astype(int)
        for i in np.unique(indices[mask]):
            self._sample_at(c, Name(c.name.string, int(i)), mask & (indices == i))

    def _sample_at(self, c: Sample, name: Name, mask: np.ndarray) -> None:
        dist = eval_dist(c.dist, self.state)
        if self.rng is not None:
            hit = mask & (np.asarray(value_of(self.state.get(Cnt(name)))) >= 1)
            if hit.any():
                self.double |= hit
                self.double_names.append(name)
            draws = dist.sample(self.rng, self.lanes)
            self.update(RName(name), draws, mask)
        r = self.state.get(RName(name))
        value = eval_expr(c.lam.body, self.state, binder_value=r)
        density = dist.pdf(r)
        count = self.state.get(Cnt(name)) + 1.0
        self.update(PVar(c.target), value, mask)
        self.update(Val(name), value, mask)
        self.update(Pr(name), density, mask)
        self.update(Cnt(name), count, mask)


@dataclass
class LaneRun:
    """
    Outcome of running a command over lanes.

    Attributes:
        state (State): Final state (diverged lanes hold partial results)
        ok (np.ndarray): Lanes that finished within the budget
        double (np.ndarray): Lanes that sampled some name twice (sampling mode)
        steps (np.ndarray): Steps used per lane
        double_names (list): Names that were sampled twice
    """

    state: State
    ok: np.ndarray
    double: np.ndarray
    steps: np.ndarray
    double_names: List[Name] = field(default_factory=list)


def exec_lanes(
    c: Command,
    state: State,
    lanes: int,
    budget: int = DEFAULT_BUDGET,
    rng: Optional[np.random.Generator] = None,
) -> LaneRun:
    """
    Run ``c`` on a copy of ``state`` over ``lanes`` lanes.

    With ``rng`` given, every executed sample command first draws the name's
    value from its distribution (sampling semantics); otherwise names keep
    their preset values (density semantics).
    """
    machine = _Machine(state.copy(), lanes, budget, rng)
    machine.run(c, np.ones(lanes, dtype=bool))
    return LaneRun(
        machine.state, machine.alive, machine.double, machine.steps, machine.double_names
    )


def exec(c: Command, state: State, budget: int = DEFAULT_BUDGET) -> ExecResult:  # noqa: A001
    """
    Execute ``c`` from a single-lane state.

    Args:
        c (Command): Command to run
        state (State): Initial state, left unmodified
        budget (int): Maximum number of executed commands

    Returns:
        ExecResult: Ok with the final state, or Diverged
    """
    run = exec_lanes(c, state, 1, budget)
    if not run.ok[0]:
        logger.debug("execution diverged after %d steps", int(run.steps[0]))
        return Diverged(budget)
    return Ok(run.state.lane(0), int(run.steps[0]))


# ---------------------------------------------------------------------------
# Initial states and sampling
# ---------------------------------------------------------------------------

NameValuation = Mapping[Name, object]
ThetaValuation = Mapping[str, object]


def initial_state(
    universe: Universe, theta: ThetaValuation, names: NameValuation
) -> State:
    """
    The start state σ₀ ⊕ σθ ⊕ σn used by every density-style function.

    ``like`` is 1, each pr_μ holds the standard-normal density of σn(μ),
    each val_μ holds σn(μ), program variables outside θ and all counters
    are 0. Names missing from ``names`` are taken to be 0.
    """
    state = State(universe)
    values = state.values
    values[universe.index(LIKE)] = 1.0
    for key, value in theta.items():
        values[universe.index(PVar(key))] = value
    normal_pdf = OPERATORS["normal_pdf"].evaluator
    for name in universe.names:
        value = names.get(name, 0.0)
        values[universe.index(RName(name))] = value
        values[universe.index(Pr(name))] = normal_pdf(value, 0.0, 1.0)
        values[universe.index(Val(name))] = value
    return state


def lane_count(*valuations: Mapping) -> int:
    """Number of lanes implied by the array-valued entries, 1 when none."""
    for valuation in valuations:
        for x in valuation.values():
            shape = np.shape(value_of(x))
            if shape:
                return int(shape[0])
    return 1


@dataclass
class SampleRun:
    """
    Draws produced by the sampling semantics.

    Attributes:
        names (dict): Raw drawn value per name, one entry per lane
        run (LaneRun): The underlying execution
    """

    names: Dict[Name, np.ndarray]
    run: LaneRun

    @property
    def ok(self) -> np.ndarray:
        return self.run.ok & ~self.run.double


def sample_lanes(
    c: Command,
    theta: ThetaValuation,
    rng: np.random.Generator,
    lanes: int,
    universe: Optional[Universe] = None,
    budget: int = DEFAULT_BUDGET,
) -> SampleRun:
    """Run ``c`` in the sampling semantics on ``lanes`` independent lanes."""
    universe = universe or Universe.of(c, params=tuple(theta))
    fallback = rng.standard_normal((len(universe.names), lanes))
    start = initial_state(universe, theta, dict(zip(universe.names, fallback)))
    run = exec_lanes(c, start, lanes, budget, rng)
    names = {
        name: np.broadcast_to(np.asarray(value_of(run.state.get(RName(name))), float), (lanes,))
        for name in universe.names
    }
    return SampleRun(names, run)


def exec_sampling(
    c: Command,
    theta: ThetaValuation,
    rng: np.random.Generator,
    universe: Optional[Universe] = None,
    budget: int = DEFAULT_BUDGET,
) -> Dict[Name, float]:
    """
    Draw one σ̂n from the sampling semantics of ``c``.

    Returns:
        dict: Raw value per name; names never sampled are standard-normal draws

    Raises:
        DivergedError: If the run exceeds the budget
        DoubleSampleError: If a name is drawn twice
    """
    result = sample_lanes(c, theta, rng, 1, universe, budget)
    if not result.run.ok[0]:
        raise DivergedError(budget)
    if result.run.double[0]:
        raise DoubleSampleError(result.run.double_names[0])
    return {name: float(values[0]) for name, values in result.names.items()}


def random_states(
    universe: Universe, rng: np.random.Generator, lanes: int, scale: float = 3.0
) -> State:
    """Lane batch of states with random program and name variables, counters at 0."""
    state = State(universe)
    state[LIKE] = 1.0
    for v in universe.variables:
        if isinstance(v, (PVar, RName)):
            state[v] = scale * rng.standard_normal(lanes)
    return state


def check_no_double_sampling(
    c: Command,
    trials: int,
    rng: np.random.Generator,
    universe: Optional[Universe] = None,
    budget: int = DEFAULT_BUDGET,
) -> bool:
    """
    Randomised falsification of the no-double-sampling condition.

    Returns:
        bool: False if some tested state makes a counter grow by more than 1

    Raises:
        DivergedError: If any tested run exceeds the budget
    """
    universe = universe or Universe.of(c)
    run = exec_lanes(c, random_states(universe, rng, trials), trials, budget)
    if not run.ok.all():
        raise DivergedError(budget)
    for name in universe.names:
        if np.any(np.asarray(value_of(run.state.get(Cnt(name)))) > 1):
            logger.debug("name %s sampled twice", name)
            return False
    return True
