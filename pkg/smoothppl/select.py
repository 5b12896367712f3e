"""
Choosing which random variables to reparameterise.

Starting from every name string in which both densities are smooth, the
selection repeatedly restricts the base plan, analyses the transformed
guide, and drops one string until the transformed guide's prior factors and
values are smooth in the parameters.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Union

from .analysis import AbstractState, analysis_report, analyze, program_strings
from .errors import DoubleSampleError, InvariantViolation
from .interp import DEFAULT_BUDGET, check_no_double_sampling
from .operators import SmoothnessProperty
from .reparam import (
    ReparamPlan,
    check_r4_structural,
    covered_strings,
    default_plan,
    plan_to_json,
    restrict,
    rv,
    transform,
)
from .syntax import Command, Name, Pr, PVar, RName, Universe, Val, LIKE
from .utils import make_rng

logger = logging.getLogger(__name__)


@dataclass
class CheckOutcome:
    """
    Result of one smoothness check on the parameters.

    Attributes:
        passed (bool): Whether every parameter is in the smooth set
        smooth (list): Parameters found smooth
        missing (list): Parameters not shown smooth
    """

    passed: bool
    smooth: List[str]
    missing: List[str]

    def as_dict(self) -> dict:
        return {"passed": self.passed, "smooth": self.smooth, "missing": self.missing}


@dataclass
class Selection:
    """
    A plan found by the selection.

    Attributes:
        plan (ReparamPlan): The restricted plan
        calls (int): Number of analysis runs
        checks (dict): Outcome per check
        conjecture_held (bool): Whether the first candidate set was accepted
        unsound_under_full (list): Strings the base plan would reparameterise
            but the selection left out
        reports (dict): Analysis reports of the model, guide and transformed guide
    """

    plan: ReparamPlan
    calls: int
    prop: SmoothnessProperty
    checks: Dict[str, CheckOutcome] = field(default_factory=dict)
    conjecture_held: bool = True
    unsound_under_full: List[str] = field(default_factory=list)
    reports: Dict[str, dict] = field(default_factory=dict)

    feasible = True

    @property
    def selected(self) -> FrozenSet[str]:
        return self.plan.selected or frozenset()

    def as_dict(self) -> dict:
        return {
            "status": "plan",
            "property": self.prop.value,
            "plan": plan_to_json(self.plan),
            "analysis_calls": self.calls,
            "checks": {k: v.as_dict() for k, v in self.checks.items()},
            "conjecture_held": self.conjecture_held,
            "unsound_under_full": self.unsound_under_full,
            "reports": self.reports,
        }


@dataclass
class Infeasible:
    """No plan can be justified by the analysis."""

    reason: str
    calls: int
    prop: SmoothnessProperty
    checks: Dict[str, CheckOutcome] = field(default_factory=dict)

    feasible = False

    def as_dict(self) -> dict:
        return {
            "status": "infeasible",
            "property": self.prop.value,
            "reason": self.reason,
            "analysis_calls": self.calls,
            "checks": {k: v.as_dict() for k, v in self.checks.items()},
        }


SelectionResult = Union[Selection, Infeasible]


def greedy_shrink_order(strings: Iterable[str]) -> List[str]:
    """Order in which candidate strings are dropped: lexicographic."""
    return sorted(strings)


def _outcome(params: Sequence[str], smooth_bits: int, universe: Universe) -> CheckOutcome:
    smooth = [x for x in params if smooth_bits >> universe.index(PVar(x)) & 1]
    missing = [x for x in params if x not in smooth]
    return CheckOutcome(not missing, smooth, missing)


def _inter(state: AbstractState, variables) -> int:
    bits = state.universe.full
    for v in variables:
        bits &= state.p[state.universe.index(v)]
    return bits


class _Selector:
    def __init__(
        self,
        model: Command,
        guide: Command,
        params: Sequence[str],
        base: ReparamPlan,
        prop: SmoothnessProperty,
        universe: Universe,
        refine: bool,
        budget: int,
        trials: int,
        seed: int,
    ):
        self.model = model
        self.guide = guide
        self.params = tuple(params)
        self.base = base
        self.prop = prop
        self.universe = universe
        self.refine = refine
        self.budget = budget
        self.trials = trials
        self.seed = seed
        self.calls = 0
        strings = sorted(set(program_strings(model)) | set(program_strings(guide)))
        self.names: List[Name] = [n for s in strings for n in universe.names_of(s)]

    def analyze(self, c: Command) -> AbstractState:
        self.calls += 1
        logger.debug("analysis call %d", self.calls)
        return analyze(c, self.prop, self.params, self.universe, self.refine)

    def falsify_double_sampling(self, c: Command, label: str) -> None:
        if self.trials <= 0:
            return
        rng = make_rng(self.seed, "select", "double-sampling", label)
        if not check_no_double_sampling(c, self.trials, rng, self.universe, self.budget):
            raise DoubleSampleError(f"some name in the {label} program")

    def densities_smooth(self, model: AbstractState, guide: AbstractState) -> int:
        """p_m(like) ∩ ⋂ p_m(pr_μ) ∩ ⋂ p_g(pr_μ) over the programs' names."""
        pr = [Pr(n) for n in self.names]
        return _inter(model, [LIKE] + pr) & _inter(guide, pr)

    def guide_smooth(self, transformed: AbstractState) -> int:
        """⋂ p(pr_μ) ∩ ⋂ p(val_μ) of the transformed guide."""
        return _inter(transformed, [Pr(n) for n in self.names] + [Val(n) for n in self.names])

    def candidates(self, smooth_bits: int) -> List[str]:
        out = []
        for string in program_strings(self.guide):
            if not self.base.selects(string):
                continue
            if all(smooth_bits >> self.universe.index(RName(n)) & 1 for n in self.universe.names_of(string)):
                out.append(string)
        return out


def select_variables(
    c_m: Command,
    c_g: Command,
    params: Sequence[str],
    base: Optional[ReparamPlan] = None,
    prop: SmoothnessProperty = SmoothnessProperty.DIFFERENTIABILITY,
    universe: Optional[Universe] = None,
    refine: bool = True,
    budget: int = DEFAULT_BUDGET,
    falsifier_trials: int = 20,
    seed: int = 0,
    verify_result: bool = True,
) -> SelectionResult:
    """
    Select the name strings to reparameterise.

    Args:
        c_m (Command): Model
        c_g (Command): Guide
        params (Sequence[str]): Parameters θ
        base (Optional[ReparamPlan]): Plan to restrict (default: full Normal plan)
        prop (SmoothnessProperty): Smoothness property of the analysis
        universe (Optional[Universe]): Variable universe (default: from the programs)
        refine (bool): Use the interval pre-analysis
        falsifier_trials (int): Random states for the double-sampling falsifier
        verify_result (bool): Re-run the analysis on the result and check it

    Returns:
        SelectionResult: Selection or Infeasible

    Raises:
        DivergedError: If a falsifier run exceeds the budget
        DoubleSampleError: If the falsifier finds a double-sampling run
        InvariantViolation: If post-hoc verification fails
    """
    base = base or default_plan()
    universe = universe or Universe.of(c_m, c_g, params=tuple(params))
    sel = _Selector(c_m, c_g, params, base, prop, universe, refine, budget, falsifier_trials, seed)
    sel.falsify_double_sampling(c_m, "model")
    sel.falsify_double_sampling(c_g, "guide")

    model_state = sel.analyze(c_m)
    guide_state = sel.analyze(c_g)
    reports = {
        "model": analysis_report(model_state, prop),
        "guide": analysis_report(guide_state, prop),
    }
    k_bits = sel.densities_smooth(model_state, guide_state)
    densities = _outcome(params, k_bits, universe)
    checks = {"densities_smooth": densities}
    if not densities.passed:
        reason = (
            "the analysis cannot show the model and guide densities smooth in "
            + ", ".join(densities.missing)
            + " for any plan"
        )
        logger.info("selection infeasible: %s", reason)
        return Infeasible(reason, sel.calls, prop, checks)

    if not check_r4_structural(base):
        return Infeasible("the plan's rules output parameter-dependent distributions", sel.calls, prop, checks)

    full_strings = sorted(covered_strings(c_g, base))
    remaining = sel.candidates(k_bits)
    logger.debug("initial candidate strings: %s", remaining)
    first = True
    while remaining:
        plan = restrict(base, remaining)
        transformed = transform(c_g, plan)
        sel.falsify_double_sampling(transformed, "transformed guide")
        transformed_state = sel.analyze(transformed)
        outcome = _outcome(params, sel.guide_smooth(transformed_state), universe)
        if outcome.passed:
            checks["transformed_guide_smooth"] = outcome
            checks["parameter_free_rules"] = CheckOutcome(True, [], [])
            reports["transformed_guide"] = analysis_report(transformed_state, prop)
            result = Selection(
                plan,
                sel.calls,
                prop,
                checks,
                conjecture_held=first,
                unsound_under_full=[s for s in full_strings if s not in remaining],
                reports=reports,
            )
            break
        dropped = greedy_shrink_order(remaining)[0]
        logger.debug("transformed guide not smooth in %s; dropping %s", outcome.missing, dropped)
        remaining = [s for s in remaining if s != dropped]
        first = False
    else:
        plan = restrict(base, ())
        checks["transformed_guide_smooth"] = _outcome(params, sel.guide_smooth(guide_state), universe)
        checks["parameter_free_rules"] = CheckOutcome(True, [], [])
        result = Selection(
            plan,
            sel.calls,
            prop,
            checks,
            conjecture_held=False,
            unsound_under_full=full_strings,
            reports=reports,
        )

    logger.info("selected %s after %d analysis calls", sorted(result.selected), result.calls)
    if verify_result:
        verify(result, c_m, c_g, params, universe, refine)
    return result


def verify(
    result: Selection,
    c_m: Command,
    c_g: Command,
    params: Sequence[str],
    universe: Optional[Universe] = None,
    refine: bool = True,
) -> None:
    """
    Re-check a selection from scratch.

    Raises:
        InvariantViolation: If a check fails on the returned plan or its
            reparameterised names are not closed over indices
    """
    universe = universe or Universe.of(c_m, c_g, params=tuple(params))
    sel = _Selector(
        c_m, c_g, params, result.plan, result.prop, universe, refine, DEFAULT_BUDGET, 0, 0
    )
    model_state = sel.analyze(c_m)
    guide_state = sel.analyze(c_g)
    if not _outcome(params, sel.densities_smooth(model_state, guide_state), universe).passed:
        raise InvariantViolation("model or guide density is not smooth in the parameters")
    if result.selected:
        transformed_state = sel.analyze(transform(c_g, result.plan))
        if not _outcome(params, sel.guide_smooth(transformed_state), universe).passed:
            raise InvariantViolation("transformed guide is not smooth in the parameters")
        if not check_r4_structural(result.plan):
            raise InvariantViolation("plan rules output parameter-dependent distributions")
    names = rv(result.plan, universe, c_g)
    for name in names:
        if any(other not in names for other in universe.names_of(name.string)):
            raise InvariantViolation(f"reparameterised names of {name.string!r} are not index-closed")


