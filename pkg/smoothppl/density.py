"""
Density, value and partial-density functions of commands, their θ-gradients,
and a quadrature oracle for the ELBO of programs with at most two names.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from . import dual
from .dual import Dual, lane, value_of, where
from .errors import DivergedError, TooManyNamesError
from .interp import (
    DEFAULT_BUDGET,
    NameValuation,
    State,
    ThetaValuation,
    eval_expr,
    exec_lanes,
    initial_state,
    lane_count,
)
from .syntax import LIKE, Cnt, Command, Name, Pr, Sample, Universe, Val, is_constant, subcommands

logger = logging.getLogger(__name__)


def theta_duals(theta: ThetaValuation) -> Dict[str, Dual]:
    """Seed every parameter as an independent dual variable, in key order."""
    k = len(theta)
    return {key: Dual.variable(value_of(v), i, k) for i, (key, v) in enumerate(theta.items())}


def _universe(c: Command, theta: ThetaValuation, universe: Optional[Universe]) -> Universe:
    return universe if universe is not None else Universe.of(c, params=tuple(theta))


@dataclass
class DensityRun:
    """
    A density-semantics execution from σ₀ ⊕ σθ ⊕ σn.

    Attributes:
        state (State): Final state
        terminated (np.ndarray): Lanes that finished within the budget
        ok (np.ndarray): Terminated lanes without double sampling
        scalar (bool): True when the inputs had no lane axis
    """

    state: State
    terminated: np.ndarray
    ok: np.ndarray
    scalar: bool

    @property
    def universe(self) -> Universe:
        return self.state.universe

    def finish(self, x):
        return lane(x, 0) if self.scalar else x

    def like(self):
        return self.state.get(LIKE)

    def prior(self, name: Name):
        return self.state.get(Pr(name))

    def partial(self, names: Iterable[Name]):
        out = 1.0
        for name in names:
            out = out * self.prior(name)
        return out

    def log_partial(self, names: Iterable[Name]):
        out = 0.0
        for name in names:
            out = out + dual.log(self.prior(name))
        return out

    def log_density(self):
        """log like + Σ log pr over every name, ignoring the validity guard."""
        return dual.log(self.like()) + self.log_partial(self.universe.names)

    def density(self):
        return where(self.ok, self.like() * self.partial(self.universe.names), 0.0)

    def values(self) -> Dict[Name, object]:
        return {
            name: where(self.ok, self.state.get(Val(name)), 0.0) for name in self.universe.names
        }


def run_density(
    c: Command,
    theta: ThetaValuation,
    names: NameValuation,
    universe: Optional[Universe] = None,
    budget: int = DEFAULT_BUDGET,
) -> DensityRun:
    """Execute ``c`` from the shared start state over the lanes implied by ``names``."""
    universe = _universe(c, theta, universe)
    lanes = lane_count(names, theta)
    scalar = lanes == 1 and not any(np.ndim(value_of(x)) for x in names.values())
    run = exec_lanes(c, initial_state(universe, theta, names), lanes, budget)
    ok = run.ok.copy()
    for name in universe.names:
        ok &= np.asarray(value_of(run.state.get(Cnt(name)))) <= 1
    return DensityRun(run.state, run.ok, ok, scalar)


def density(
    c: Command,
    theta: ThetaValuation,
    names: NameValuation,
    universe: Optional[Universe] = None,
    budget: int = DEFAULT_BUDGET,
):
    """
    Unnormalised density p_{c,σθ}(σn).

    Returns like · Π pr_μ at the end of the run, or 0 when the run diverges
    or samples some name twice.
    """
    run = run_density(c, theta, names, universe, budget)
    return run.finish(run.density())


def value_fn(
    c: Command,
    theta: ThetaValuation,
    names: NameValuation,
    universe: Optional[Universe] = None,
    budget: int = DEFAULT_BUDGET,
) -> Dict[Name, object]:
    """Value function v_{c,σθ}(σn): final val_μ per name, all zeros on failure."""
    run = run_density(c, theta, names, universe, budget)
    return {name: run.finish(v) for name, v in run.values().items()}


def partial_density(
    c: Command,
    theta: ThetaValuation,
    names: NameValuation,
    subset: Iterable[Name],
    universe: Optional[Universe] = None,
    budget: int = DEFAULT_BUDGET,
):
    """
    Partial density p^S: the product of the final pr_μ over μ ∈ S.

    Raises:
        DivergedError: If any lane exceeds the budget
    """
    run = run_density(c, theta, names, universe, budget)
    if not run.terminated.all():
        raise DivergedError(budget)
    return run.finish(run.partial(subset))


def log_density(
    c: Command,
    theta: ThetaValuation,
    names: NameValuation,
    universe: Optional[Universe] = None,
    budget: int = DEFAULT_BUDGET,
):
    """log p_{c,σθ}(σn); -inf where the density is zero."""
    run = run_density(c, theta, names, universe, budget)
    return run.finish(where(run.ok, run.log_density(), -np.inf))


def density_grad(c: Command, theta: ThetaValuation, names: NameValuation, **kwargs) -> Dual:
    return density(c, theta_duals(theta), names, **kwargs)


def log_density_grad(c: Command, theta: ThetaValuation, names: NameValuation, **kwargs) -> Dual:
    return log_density(c, theta_duals(theta), names, **kwargs)


def value_grad(c: Command, theta: ThetaValuation, names: NameValuation, **kwargs):
    return value_fn(c, theta_duals(theta), names, **kwargs)


def partial_density_grad(
    c: Command, theta: ThetaValuation, names: NameValuation, subset: Iterable[Name], **kwargs
) -> Dual:
    return partial_density(c, theta_duals(theta), names, subset, **kwargs)


# ---------------------------------------------------------------------------
# Quadrature oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureGrid:
    """
    Tensor trapezoid grid.

    Attributes:
        lo (float): Lower bound on every axis
        hi (float): Upper bound on every axis
        points (int): Points per axis
        stripe (int): Rows evaluated per batch on 2-D grids
    """

    lo: float = -10.0
    hi: float = 10.0
    points: int = 2001
    stripe: int = 64

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)


def sampled_names(commands: Sequence[Command], universe: Universe) -> List[Name]:
    """Names that some sample command may draw; all indices for non-constant names."""
    found = set()
    for c in commands:
        for node in subcommands(c):
            if not isinstance(node, Sample):
                continue
            if is_constant(node.name.index):
                raw = float(value_of(eval_expr(node.name.index, None)))
                found.add(universe.clamp_name(node.name.string, raw))
            else:
                found.update(universe.names_of(node.name.string))
    return sorted(found)


def _elbo_integrand(
    c_m: Command,
    c_g: Command,
    theta: ThetaValuation,
    names: NameValuation,
    subset: Sequence[Name],
    universe: Universe,
    budget: int,
) -> np.ndarray:
    model = run_density(c_m, theta, names, universe, budget)
    guide = run_density(c_g, theta, names, universe, budget)
    weight = np.where(guide.ok, guide.like() * guide.partial(subset), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_m = np.where(model.ok, np.log(model.like()) + model.log_partial(subset), -np.inf)
        log_g = np.log(guide.like()) + guide.log_partial(subset)
        integrand = np.where(weight > 0, weight * (log_m - log_g), 0.0)
    return np.broadcast_to(integrand, (lane_count(names),))


def elbo_quadrature(
    c_m: Command,
    c_g: Command,
    theta: ThetaValuation,
    grid: QuadratureGrid = QuadratureGrid(),
    universe: Optional[Universe] = None,
    budget: int = DEFAULT_BUDGET,
    jobs: int = 1,
) -> float:
    """
    ELBO E_{p_g}[log(p_m / p_g)] by trapezoid quadrature over the sampled names.

    Raises:
        TooManyNamesError: If more than two names may be sampled
    """
    universe = universe or Universe.of(c_m, c_g, params=tuple(theta))
    theta = {k: float(value_of(v)) for k, v in theta.items()}
    subset = sampled_names((c_m, c_g), universe)
    if len(subset) > 2:
        raise TooManyNamesError(len(subset))
    axis = grid.axis

    if not subset:
        return float(_elbo_integrand(c_m, c_g, theta, {}, subset, universe, budget)[0])
    if len(subset) == 1:
        values = _elbo_integrand(c_m, c_g, theta, {subset[0]: axis}, subset, universe, budget)
        return float(trapezoid(values, axis))

    def stripe(start: int) -> np.ndarray:
        rows = axis[start:start + grid.stripe]
        xs = np.tile(axis, len(rows))
        ys = np.repeat(rows, len(axis))
        values = _elbo_integrand(
            c_m, c_g, theta, {subset[0]: xs, subset[1]: ys}, subset, universe, budget
        )
        return trapezoid(values.reshape(len(rows), len(axis)), axis, axis=1)

    starts = range(0, len(axis), grid.stripe)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            row_integrals = list(pool.map(stripe, starts))
    else:
        row_integrals = [stripe(s) for s in starts]
    return float(trapezoid(np.concatenate(row_integrals), axis))


def elbo_grad_fd(
    c_m: Command,
    c_g: Command,
    theta: ThetaValuation,
    grid: QuadratureGrid = QuadratureGrid(),
    h: float = 1e-4,
    universe: Optional[Universe] = None,
    budget: int = DEFAULT_BUDGET,
    jobs: int = 1,
) -> np.ndarray:
    """Central-difference gradient of the quadrature ELBO."""
    base = {k: float(value_of(v)) for k, v in theta.items()}
    grad = np.zeros(len(base))
    for i, key in enumerate(base):
        up = dict(base, **{key: base[key] + h})
        down = dict(base, **{key: base[key] - h})
        hi = elbo_quadrature(c_m, c_g, up, grid, universe, budget, jobs)
        lo = elbo_quadrature(c_m, c_g, down, grid, universe, budget, jobs)
        grad[i] = (hi - lo) / (2 * h)
        logger.debug("elbo gradient %s: %.6g", key, grad[i])
    return grad
