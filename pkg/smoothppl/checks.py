"""
Executable invariants of the semantics, the analysis and the transform.

Every check returns a ``CheckReport`` counting the cases it tried and the
violations it found; none of them is a proof. The ``run_suite`` entry point
drives them over given programs and a fuzz corpus.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .analysis import abstract_exec, pre_analyze
from .density import log_density, log_density_grad, run_density, sampled_names
from .dual import gradient, value_of
from .errors import InvariantViolation
from .fuzz import FuzzConfig, generate_corpus
from .interp import DEFAULT_BUDGET, State, exec_lanes, sample_lanes
from .operators import SmoothnessProperty
from .reparam import ReparamPlan, restrict, rv, transform
from .syntax import (
    LIKE,
    Cnt,
    BinderRef,
    Command,
    Pr,
    PVar,
    RName,
    Sample,
    Universe,
    has_observe,
    subcommands,
)
from .utils import make_rng

logger = logging.getLogger(__name__)

QUOTIENT_SCALES = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
CHECK_BUDGET = 10_000


@dataclass
class CheckReport:
    """
    Outcome of one invariant check.

    Attributes:
        name (str): Check name
        cases (int): Number of (program, state) cases examined
        violations (int): Number of cases that failed
        examples (list): Descriptions of the first few failures
    """

    name: str
    cases: int = 0
    violations: int = 0
    examples: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, failed: int, cases: int, example: Optional[str] = None) -> None:
        self.cases += cases
        self.violations += failed
        if failed and example is not None and len(self.examples) < 5:
            self.examples.append(example)

    def merge(self, other: "CheckReport") -> None:
        self.record(other.violations, other.cases)
        self.examples.extend(other.examples[: 5 - len(self.examples)])

    def as_dict(self) -> dict:
        return {
            "cases": self.cases,
            "violations": self.violations,
            "passed": self.passed,
            "examples": self.examples,
        }


def random_full_state(universe: Universe, rng: np.random.Generator, lanes: int, scale: float = 3.0) -> State:
    """Lane batch of states with every variable random; counters are small naturals."""
    state = State(universe)
    for v in universe.variables:
        if isinstance(v, Cnt):
            state[v] = rng.integers(0, 3, lanes).astype(float)
        elif isinstance(v, Pr) or v is LIKE:
            state[v] = rng.uniform(0.1, 2.0, lanes)
        else:
            state[v] = scale * rng.standard_normal(lanes)
    return state


def _column(state: State, v, lanes: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(value_of(state.get(v)), dtype=float), (lanes,))


def _same(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a == b) | (np.isnan(a) & np.isnan(b))


def _close(a: np.ndarray, b: np.ndarray, rel: float) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return _same(a, b) | (np.abs(a - b) <= rel * np.maximum(np.abs(a), np.abs(b)))


# ---------------------------------------------------------------------------
# Semantic lemmas
# ---------------------------------------------------------------------------


def check_semantic_lemmas(
    programs: Iterable[Command],
    states: int,
    seed: int,
    budget: int = CHECK_BUDGET,
) -> Dict[str, CheckReport]:
    """
    Name immutability, counter monotonicity, observe-free likelihood and
    likelihood multiplicativity on random states.
    """
    reports = {
        key: CheckReport(key)
        for key in ("name_immutability", "cnt_monotonicity", "observe_free_likelihood", "likelihood_scaling")
    }
    for index, c in enumerate(programs):
        universe = Universe.of(c, name_bound=2)
        rng = make_rng(seed, "lemmas", str(index))
        start = random_full_state(universe, rng, states)
        run = exec_lanes(c, start, states, budget)
        ok = run.ok
        n_ok = int(ok.sum())
        if not n_ok:
            continue
        bad_names = np.zeros(states, dtype=bool)
        bad_cnt = np.zeros(states, dtype=bool)
        for name in universe.names:
            before = _column(start, RName(name), states)
            after = _column(run.state, RName(name), states)
            bad_names |= ~_same(before, after)
            bad_cnt |= _column(run.state, Cnt(name), states) < _column(start, Cnt(name), states)
        label = f"program #{index}"
        reports["name_immutability"].record(int((bad_names & ok).sum()), n_ok, label)
        reports["cnt_monotonicity"].record(int((bad_cnt & ok).sum()), n_ok, label)
        if not has_observe(c):
            changed = ~_same(_column(start, LIKE, states), _column(run.state, LIKE, states))
            reports["observe_free_likelihood"].record(int((changed & ok).sum()), n_ok, label)

        factor = 2.5
        scaled = start.copy()
        scaled[LIKE] = _column(start, LIKE, states) * factor
        run2 = exec_lanes(c, scaled, states, budget)
        both = ok & run2.ok
        bad = ~_close(_column(run2.state, LIKE, states), factor * _column(run.state, LIKE, states), 1e-12)
        for v in universe.variables:
            if v is not LIKE:
                bad |= ~_same(_column(run.state, v, states), _column(run2.state, v, states))
        reports["likelihood_scaling"].record(int((bad & both).sum()), int(both.sum()), label)
    return reports


def check_density_decomposition(
    programs: Iterable[Command],
    points: int,
    seed: int,
    params: Sequence[str] = (),
    budget: int = CHECK_BUDGET,
) -> CheckReport:
    """p = p^S · p^(Name∖S) for observe-free programs and random splits S."""
    report = CheckReport("density_decomposition")
    for index, c in enumerate(programs):
        if has_observe(c):
            continue
        universe = Universe.of(c, params=params, name_bound=2)
        rng = make_rng(seed, "decomposition", str(index))
        theta = {k: rng.normal(0.0, 2.0, points) for k in params}
        names = {n: rng.normal(0.0, 2.0, points) for n in universe.names}
        run = run_density(c, theta, names, universe, budget)
        split = rng.random(len(universe.names)) < 0.5
        left = [n for n, s in zip(universe.names, split) if s]
        right = [n for n, s in zip(universe.names, split) if not s]
        whole = np.broadcast_to(np.asarray(value_of(run.density()), dtype=float), (points,))
        parts = np.asarray(value_of(run.partial(left) * run.partial(right)), dtype=float)
        parts = np.broadcast_to(parts, (points,))
        ok = run.ok
        bad = ~_close(whole, parts, 1e-12) & ok
        report.record(int(bad.sum()), int(ok.sum()), f"program #{index}")
    return report


def _identity_lambdas(c: Command) -> bool:
    return all(
        isinstance(node.lam.body, BinderRef) and node.lam.body.binder == node.lam.binder
        for node in subcommands(c)
        if isinstance(node, Sample)
    )


def check_value_connection(
    c: Command,
    params: Sequence[str],
    plans: Sequence[ReparamPlan],
    points: int,
    seed: int,
    budget: int = DEFAULT_BUDGET,
) -> CheckReport:
    """
    For identity-lambda programs: the unreparameterised partial density of
    the transformed program equals that of the original program at the
    transformed program's values.
    """
    report = CheckReport("value_function_connection")
    if not _identity_lambdas(c):
        return report
    universe = Universe.of(c, params=params, name_bound=2)
    for index, plan in enumerate(plans):
        rng = make_rng(seed, "value-connection", str(index))
        theta = {k: rng.normal(0.0, 2.0, points) for k in params}
        names = {n: rng.normal(0.0, 2.0, points) for n in universe.names}
        moved = transform(c, plan)
        rest = [n for n in universe.names if n not in rv(plan, universe, c)]
        lhs_run = run_density(moved, theta, names, universe, budget)
        rhs_run = run_density(c, theta, lhs_run.values(), universe, budget)
        lhs = np.broadcast_to(np.asarray(value_of(lhs_run.partial(rest)), float), (points,))
        rhs = np.broadcast_to(np.asarray(value_of(rhs_run.partial(rest)), float), (points,))
        positive = lhs_run.ok & (np.asarray(value_of(lhs_run.density()), float) > 0)
        bad = ~_close(lhs, rhs, 1e-12) & positive
        report.record(int(bad.sum()), int(positive.sum()), plan.describe())
    return report


def check_moment_preservation(
    c: Command,
    params: Sequence[str],
    theta: Dict[str, float],
    plans: Sequence[ReparamPlan],
    samples: int,
    seed: int,
    threshold: float = 4.0,
    budget: int = DEFAULT_BUDGET,
) -> CheckReport:
    """
    First and second moments of every sampled value agree between ``c`` and
    each transformed program, within ``threshold`` standard errors.
    """
    report = CheckReport("moment_preservation")
    universe = Universe.of(c, params=params, name_bound=2)
    names = sampled_names((c,), universe)

    def moments(program: Command, stream: str):
        draw = sample_lanes(program, theta, make_rng(seed, "moments", stream), samples, universe, budget)
        run = run_density(program, theta, draw.names, universe, budget)
        values = run.values()
        return {n: np.broadcast_to(np.asarray(value_of(values[n]), float), (samples,)) for n in names}

    base = moments(c, "base")
    for index, plan in enumerate(plans):
        other = moments(transform(c, plan), f"plan{index}")
        for n in names:
            for power in (1, 2):
                a, b = base[n] ** power, other[n] ** power
                se = math.sqrt(a.var(ddof=1) / samples + b.var(ddof=1) / samples)
                z = abs(a.mean() - b.mean()) / se if se > 0 else 0.0
                report.record(int(z > threshold), 1, f"{plan.describe()} {n} moment {power}: z={z:.2f}")
    return report


def check_gradients(
    c: Command,
    params: Sequence[str],
    points: int,
    seed: int,
    rel: float = 1e-5,
) -> CheckReport:
    """Dual-mode gradients of the log density against central differences."""
    report = CheckReport("gradient_agreement")
    universe = Universe.of(c, params=params, name_bound=2)
    names_used = sampled_names((c,), universe)
    rng = make_rng(seed, "gradients")
    for point in range(points):
        theta = {k: float(rng.normal(0.0, 1.5)) for k in params}
        names = {n: float(rng.normal(0.0, 1.5)) for n in names_used}
        value = log_density_grad(c, theta, names, universe=universe)
        if not np.isfinite(value_of(value)):
            continue
        for i, k in enumerate(params):
            h = 1e-5 * max(1.0, abs(theta[k]))
            up = log_density(c, dict(theta, **{k: theta[k] + h}), names, universe=universe)
            down = log_density(c, dict(theta, **{k: theta[k] - h}), names, universe=universe)
            fd = (up - down) / (2 * h)
            ad = float(gradient(value, len(params))[i])
            bad = abs(ad - fd) > rel * max(1.0, abs(ad), abs(fd))
            report.record(int(bad), 1, f"point {point} {k}: dual {ad:.8g} vs difference {fd:.8g}")
    return report


# ---------------------------------------------------------------------------
# Analysis invariants
# ---------------------------------------------------------------------------


def check_well_formedness(programs: Iterable[Command]) -> CheckReport:
    report = CheckReport("well_formedness")
    for index, c in enumerate(programs):
        universe = Universe.of(c, name_bound=2)
        intervals = pre_analyze(c)
        for prop in SmoothnessProperty:
            try:
                abstract_exec(c, prop, universe, intervals)
                report.record(0, 1)
            except InvariantViolation as e:
                report.record(1, 1, f"program #{index} ({prop.value}): {e}")
    return report


def check_dependency_soundness(
    programs: Iterable[Command],
    pairs: int,
    seed: int,
    budget: int = CHECK_BUDGET,
) -> CheckReport:
    """
    States agreeing on d(v) must agree on termination and, when both
    terminate, on the final value of v.
    """
    report = CheckReport("dependency_soundness")
    for index, c in enumerate(programs):
        universe = Universe.of(c, name_bound=2)
        state = abstract_exec(c, SmoothnessProperty.DIFFERENTIABILITY, universe)
        variables = universe.variables
        lanes = pairs * len(variables)
        rng = make_rng(seed, "dependency", str(index))
        first = random_full_state(universe, rng, pairs)
        second = random_full_state(universe, rng, lanes)
        left = State(universe)
        for v in variables:
            column = np.tile(_column(first, v, pairs), len(variables))
            left[v] = column
            keep = np.zeros(lanes, dtype=bool)
            for j, target in enumerate(variables):
                if state.d[universe.index(target)] >> universe.index(v) & 1:
                    keep[j * pairs:(j + 1) * pairs] = True
            second[v] = np.where(keep, column, _column(second, v, lanes))
        run_a = exec_lanes(c, left, lanes, budget)
        run_b = exec_lanes(c, second, lanes, budget)
        bad = run_a.ok != run_b.ok
        both = run_a.ok & run_b.ok
        for j, target in enumerate(variables):
            block = slice(j * pairs, (j + 1) * pairs)
            a = _column(run_a.state, target, lanes)[block]
            b = _column(run_b.state, target, lanes)[block]
            bad[block] |= both[block] & ~_same(a, b)
        failed = int(bad.sum())
        report.record(failed, lanes, f"program #{index}" if failed else None)
    return report


def check_difference_quotients(
    programs: Iterable[Command],
    points: int,
    seed: int,
    prop: SmoothnessProperty = SmoothnessProperty.DIFFERENTIABILITY,
    budget: int = CHECK_BUDGET,
    jump: float = 1e3,
) -> CheckReport:
    """
    Difference quotients of v along a random line within p(v) must not blow up
    as the step shrinks.

    A blow-up at the smallest scale by more than ``jump`` times the quotient
    at the largest scale counts as a violation, unless the change is within
    rounding noise of the value.
    """
    report = CheckReport("difference_quotients")
    scales = np.array(QUOTIENT_SCALES)
    for index, c in enumerate(programs):
        universe = Universe.of(c, name_bound=2)
        state = abstract_exec(c, prop, universe, pre_analyze(c, mode="top"))
        rng = make_rng(seed, "quotients", str(index))
        base = random_full_state(universe, rng, points)
        lanes = points * (len(scales) + 1)
        for v in universe.variables:
            inputs = [
                u for u in universe.unbits(state.p[universe.index(v)])
                if isinstance(u, (PVar, RName))
            ]
            if not inputs:
                continue
            direction = {u: rng.standard_normal(points) for u in inputs}
            start = State(universe)
            for u in universe.variables:
                column = np.tile(_column(base, u, points), len(scales) + 1)
                if u in direction:
                    steps = np.concatenate([np.zeros(points)] + [s * direction[u] for s in scales])
                    column = column + steps
                start[u] = column
            run = exec_lanes(c, start, lanes, budget)
            values = _column(run.state, v, lanes).reshape(len(scales) + 1, points)
            ok = run.ok.reshape(len(scales) + 1, points).all(axis=0)
            with np.errstate(invalid="ignore", over="ignore"):
                changes = np.abs(values[1:] - values[0])
                quotients = changes / scales[:, None]
                noise = 1e-9 * np.maximum(1.0, np.abs(values[0]))
            finite = ok & np.isfinite(quotients).all(axis=0)
            bad = finite & (quotients[-1] > jump * (1.0 + quotients[0])) & (changes[-1] > noise)
            report.record(int(bad.sum()), int(finite.sum()), f"program #{index} variable {v}")
    return report


# ---------------------------------------------------------------------------
# Suite
# ---------------------------------------------------------------------------


@dataclass
class SuiteConfig:
    """
    Sizes of the check suite.

    Attributes:
        programs (int): Fuzz programs
        states (int): Random states (or state pairs) per program
        seed (int): Master seed
        samples (int): Draws for the moment check
        points (int): Evaluation points for the exact equalities
    """

    programs: int = 200
    states: int = 20
    seed: int = 0
    samples: int = 100_000
    points: int = 200
    fuzz: FuzzConfig = field(default_factory=FuzzConfig)


def _restrictions(c: Command, universe: Universe) -> List[ReparamPlan]:
    strings = sorted({node.name.string for node in subcommands(c) if isinstance(node, Sample)})
    plans = [restrict(ReparamPlan(), ())]
    plans.extend(restrict(ReparamPlan(), (s,)) for s in strings)
    if len(strings) > 1:
        plans.append(restrict(ReparamPlan(), strings))
    return plans


def run_suite(
    programs: Sequence[Command] = (),
    params: Sequence[str] = (),
    config: SuiteConfig = SuiteConfig(),
    progress: Optional[Callable[[str], None]] = None,
) -> Dict[str, CheckReport]:
    """
    Run every check on ``programs`` and on a fuzz corpus.

    Program-specific checks (value connection, moment preservation,
    gradients) run only on the given programs, with θ drawn at random.
    """
    corpus = generate_corpus(config.programs, config.seed, config.fuzz)
    everything = list(programs) + corpus
    say = progress or (lambda message: logger.info(message))
    results: Dict[str, CheckReport] = {}

    say(f"semantic lemmas on {len(everything)} programs")
    results.update(check_semantic_lemmas(everything, config.states, config.seed))
    say("density decomposition")
    results["density_decomposition"] = check_density_decomposition(
        list(programs), config.points, config.seed, params
    )
    results["density_decomposition"].merge(check_density_decomposition(corpus, config.states, config.seed))
    say("well-formedness")
    results["well_formedness"] = check_well_formedness(everything)
    say("dependency soundness")
    results["dependency_soundness"] = check_dependency_soundness(everything, config.states, config.seed)
    say("difference quotients")
    results["difference_quotients"] = check_difference_quotients(everything, 10, config.seed)

    connection = CheckReport("value_function_connection")
    moments = CheckReport("moment_preservation")
    gradients = CheckReport("gradient_agreement")
    rng = make_rng(config.seed, "suite-theta")
    for c in programs:
        universe = Universe.of(c, params=params, name_bound=2)
        plans = _restrictions(c, universe)
        theta = {k: float(rng.normal()) for k in params}
        connection.merge(check_value_connection(c, params, plans, config.points, config.seed))
        moments.merge(check_moment_preservation(c, params, theta, plans[1:], config.samples, config.seed))
        if params:
            gradients.merge(check_gradients(c, params, 50, config.seed))
    if programs:
        say("value-function connection, moment preservation and gradients")
        results["value_function_connection"] = connection
        results["moment_preservation"] = moments
        results["gradient_agreement"] = gradients

    for name, report in results.items():
        logger.debug("%s: %d cases, %d violations", name, report.cases, report.violations)
    return results


def suite_report(results: Dict[str, CheckReport]) -> dict:
    return {
        "passed": all(r.passed for r in results.values()),
        "checks": {name: r.as_dict() for name, r in sorted(results.items())},
    }
