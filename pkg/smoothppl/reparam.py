"""
Reparameterisation plans and the program transform they induce.

A plan selects a set of name strings and carries one rewrite rule per
distribution kind. A sample command is rewritten exactly when its name
string is selected and a rule covers its distribution, so whether a name is
reparameterised depends only on its string part.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np
from scipy.stats import ks_2samp

from .errors import PlanError
from .interp import eval_dist, eval_expr, random_states
from .syntax import (
    Binder,
    BinderRef,
    Command,
    Const,
    Dist,
    If,
    Lambda,
    Name,
    NameExpr,
    Op,
    PVar,
    Sample,
    Seq,
    Universe,
    VarRef,
    While,
    fv,
    is_constant,
    subcommands,
    subst_lambda,
)

logger = logging.getLogger(__name__)

KNOWN_VALID = "known-valid"
UNVERIFIED = "unverified"


@dataclass(frozen=True)
class RewriteRule:
    """
    Rewrite of a (distribution, lambda) pair for one distribution kind.

    Attributes:
        key (str): Registry name used in plan files
        kind (str): Distribution kind the rule applies to
        rewrite (Callable): Maps (Dist, Lambda) to the new (Dist, Lambda)
        certificate (str): ``known-valid`` or ``unverified``
    """

    key: str
    kind: str
    rewrite: Callable[[Dist, Lambda], Tuple[Dist, Lambda]] = field(compare=False)
    certificate: str = UNVERIFIED

    def __call__(self, dist: Dist, lam: Lambda) -> Tuple[Dist, Lambda]:
        return self.rewrite(dist, lam)


def _standardise_normal(dist: Dist, lam: Lambda) -> Tuple[Dist, Lambda]:
    mean, variance = dist.args
    binder = Binder.fresh(lam.binder.hint)
    moved = Op("+", (Op("*", (BinderRef(binder), Op("sqrt", (variance,)))), mean))
    body = subst_lambda(lam.body, lam.binder, moved)
    return Dist("normal", (Const(0.0), Const(1.0))), Lambda(binder, body)


def _identity(dist: Dist, lam: Lambda) -> Tuple[Dist, Lambda]:
    return dist, lam


NORMAL_STANDARDISE = RewriteRule("normal-standardise", "normal", _standardise_normal, KNOWN_VALID)
NORMAL_IDENTITY = RewriteRule("normal-identity", "normal", _identity, KNOWN_VALID)

RULES: Dict[str, RewriteRule] = {r.key: r for r in (NORMAL_STANDARDISE, NORMAL_IDENTITY)}


@dataclass(frozen=True)
class ReparamPlan:
    """
    A simple reparameterisation plan.

    Attributes:
        selected (Optional[frozenset]): Selected name strings; None selects every string
        rules (tuple): Rewrite rules, at most one per distribution kind
    """

    selected: Optional[FrozenSet[str]] = None
    rules: Tuple[RewriteRule, ...] = (NORMAL_STANDARDISE,)

    def __post_init__(self):
        kinds = [r.kind for r in self.rules]
        if len(kinds) != len(set(kinds)):
            raise PlanError("a plan may carry at most one rule per distribution kind")
        if self.selected is not None and not isinstance(self.selected, frozenset):
            object.__setattr__(self, "selected", frozenset(self.selected))

    def selects(self, string: str) -> bool:
        return self.selected is None or string in self.selected

    def rule_for(self, kind: str) -> Optional[RewriteRule]:
        return next((r for r in self.rules if r.kind == kind), None)

    def apply(self, name: NameExpr, dist: Dist, lam: Lambda) -> Optional[Tuple[Dist, Lambda]]:
        """π(n, d, l), or None where the plan is undefined."""
        rule = self.rule_for(dist.kind)
        if rule is None or not self.selects(name.string):
            return None
        return rule(dist, lam)

    def describe(self) -> str:
        chosen = "all" if self.selected is None else "{" + ", ".join(sorted(self.selected)) + "}"
        return f"selected={chosen} rules=[{', '.join(r.key for r in self.rules)}]"


def default_plan() -> ReparamPlan:
    """Every string selected, Normal standardisation installed."""
    return ReparamPlan(None, (NORMAL_STANDARDISE,))


def empty_plan() -> ReparamPlan:
    return ReparamPlan(frozenset(), ())


def restrict(plan: ReparamPlan, strings: Iterable[str]) -> ReparamPlan:
    """π[S]: keep only the selected strings that are in ``strings``."""
    strings = frozenset(strings)
    selected = strings if plan.selected is None else plan.selected & strings
    return ReparamPlan(selected, plan.rules)


def transform(c: Command, plan: ReparamPlan) -> Command:
    """⟨c⟩π: rewrite every sample command the plan is defined on."""
    if isinstance(c, Seq):
        return Seq(transform(c.first, plan), transform(c.second, plan))
    if isinstance(c, If):
        return If(c.cond, transform(c.then, plan), transform(c.orelse, plan))
    if isinstance(c, While):
        return While(c.cond, transform(c.body, plan))
    if isinstance(c, Sample):
        rewritten = plan.apply(c.name, c.dist, c.lam)
        if rewritten is not None:
            return Sample(c.target, c.name, *rewritten)
    return c


def covered_strings(c: Command, plan: ReparamPlan) -> FrozenSet[str]:
    """Selected strings all of whose sample commands in ``c`` the plan rewrites."""
    found: Dict[str, bool] = {}
    for node in subcommands(c):
        if isinstance(node, Sample):
            ok = plan.apply(node.name, node.dist, node.lam) is not None
            found[node.name.string] = found.get(node.name.string, True) and ok
    return frozenset(s for s, ok in found.items() if ok)


def rv(plan: ReparamPlan, universe: Universe, c: Optional[Command] = None) -> FrozenSet[Name]:
    """
    Names the plan reparameterises.

    Without ``c`` this is every name of a selected string (when the plan has
    a rule at all). With ``c``, strings whose sample commands the rule table
    does not cover are left out.
    """
    if not plan.rules:
        return frozenset()
    strings = covered_strings(c, plan) if c is not None else set(universe.strings)
    return frozenset(n for n in universe.names if plan.selects(n.string) and n.string in strings)


def skeleton(c: Command):
    """Shape of ``c`` with sample commands reduced to their target and name."""
    if isinstance(c, Seq):
        return ("seq", skeleton(c.first), skeleton(c.second))
    if isinstance(c, If):
        return ("if", c.cond, skeleton(c.then), skeleton(c.orelse))
    if isinstance(c, While):
        return ("while", c.cond, skeleton(c.body))
    if isinstance(c, Sample):
        return ("sam", c.target, c.name)
    return c


# ---------------------------------------------------------------------------
# Validity checks
# ---------------------------------------------------------------------------


def check_r4_structural(plan: ReparamPlan) -> bool:
    """True iff every rule in use outputs a distribution with constant parameters."""
    if plan.selected is not None and not plan.selected:
        return True
    for rule in plan.rules:
        sample_args = tuple(VarRef(PVar(f"arg{i}")) for i in range(2))
        y = Binder.fresh()
        out, _ = rule(Dist(rule.kind, sample_args), Lambda(y, BinderRef(y)))
        if not all(is_constant(a) for a in out.args):
            logger.debug("rule %s outputs a parameter-dependent distribution", rule.key)
            return False
    return True


def check_validity_mc(
    rule: RewriteRule,
    dist: Dist,
    lam: Lambda,
    rng: np.random.Generator,
    trials: int = 20,
    draws: int = 10_000,
    alpha: float = 1e-4,
) -> bool:
    """
    Falsify validity of ``rule`` on one (distribution, lambda) pair.

    At ``trials`` random states, compares the law of the transported value
    before and after the rewrite with a two-sample Kolmogorov-Smirnov test.

    Returns:
        bool: False iff some test rejects at level ``alpha``
    """
    new_dist, new_lam = rule(dist, lam)
    original = Sample("x", NameExpr("site", Const(0.0)), dist, lam)
    rewritten = Sample("x", NameExpr("site", Const(0.0)), new_dist, new_lam)
    universe = Universe.of(original, rewritten)
    for trial in range(trials):
        state = random_states(universe, rng, 1)
        before = eval_expr(lam.body, state, eval_dist(dist, state).sample(rng, draws))
        after = eval_expr(new_lam.body, state, eval_dist(new_dist, state).sample(rng, draws))
        before = np.broadcast_to(np.asarray(before, dtype=float), (draws,))
        after = np.broadcast_to(np.asarray(after, dtype=float), (draws,))
        result = ks_2samp(before, after)
        if result.pvalue < alpha:
            logger.info(
                "rule %s rejected at trial %d (KS statistic %.4f, p=%.2e)",
                rule.key,
                trial,
                result.statistic,
                result.pvalue,
            )
            return False
    return True


# ---------------------------------------------------------------------------
# Plan files
# ---------------------------------------------------------------------------


def plan_to_json(plan: ReparamPlan) -> dict:
    selected = None if plan.selected is None else sorted(plan.selected)
    return {"selected": selected, "rules": [r.key for r in plan.rules]}


def plan_from_json(data: Mapping) -> ReparamPlan:
    """
    Build a plan from its JSON form ``{"selected": [...], "rules": [...]}``.

    ``selected`` may be null to select every string.

    Raises:
        PlanError: On malformed data or unknown rules
    """
    if not isinstance(data, Mapping):
        raise PlanError("plan must be a JSON object")
    unknown = set(data) - {"selected", "rules"}
    if unknown:
        raise PlanError(f"unknown plan keys: {', '.join(sorted(unknown))}")
    selected = data.get("selected", None)
    if selected is not None:
        if not isinstance(selected, list) or not all(isinstance(s, str) for s in selected):
            raise PlanError("'selected' must be a list of name strings or null")
        selected = frozenset(selected)
    keys = data.get("rules", [NORMAL_STANDARDISE.key])
    if not isinstance(keys, list):
        raise PlanError("'rules' must be a list of rule names")
    rules: List[RewriteRule] = []
    for key in keys:
        if key not in RULES:
            raise PlanError(f"unknown rule: {key!r} (known: {', '.join(sorted(RULES))})")
        rules.append(RULES[key])
    return ReparamPlan(selected, tuple(rules))


def load_plan(path: Union[str, Path]) -> ReparamPlan:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise PlanError(f"plan file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise PlanError(f"invalid JSON in plan file {path}: {e}") from None
    return plan_from_json(data)


def save_plan(plan: ReparamPlan, path: Union[str, Path]) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(plan_to_json(plan), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def resolve_plan(spec: str) -> ReparamPlan:
    """``full``, ``empty`` or the path of a plan file."""
    if spec == "full":
        return default_plan()
    if spec == "empty":
        return empty_plan()
    return load_plan(spec)
