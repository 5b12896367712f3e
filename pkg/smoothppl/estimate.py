"""
Gradient estimators for the ELBO and the gradient-ascent driver.

The selective estimator reparameterises the names a plan selects and uses
score-function terms for the rest. The score-function estimator (SCE) and
the pathwise estimator (PGE) are its special cases for the empty and the
full plan.
"""

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from .density import DensityRun, run_density, theta_duals
from .dual import gradient, value_of
from .errors import DivergedError, DoubleSampleError, ZeroDensityError
from .interp import DEFAULT_BUDGET, NameValuation, ThetaValuation, sample_lanes
from .reparam import ReparamPlan, default_plan, empty_plan, rv, transform
from .syntax import DEFAULT_NAME_BOUND, Command, Name, Universe
from .utils import make_rng

logger = logging.getLogger(__name__)

INTERCHANGE_ASSUMPTION = (
    "assumes the gradient and the expectation over the guide commute "
    "(differentiation under the integral sign); this is not checked"
)
DEFAULT_CHUNK = 4096


@dataclass
class GradEstimate:
    """
    A gradient estimate.

    Attributes:
        params (tuple): Parameter names, in gradient order
        grad (np.ndarray): Estimated gradient
        stderr (Optional[np.ndarray]): Standard error per coordinate (Monte Carlo only)
        samples (int): Number of samples averaged
        seed (Optional[int]): Seed of the draws, when known
    """

    params: Sequence[str]
    grad: np.ndarray
    stderr: Optional[np.ndarray] = None
    samples: int = 1
    seed: Optional[int] = None

    def __post_init__(self):
        self.grad = np.asarray(self.grad, dtype=float)
        if not np.all(np.isfinite(self.grad)):
            raise ZeroDensityError("estimate", "non-finite gradient")

    def as_dict(self) -> dict:
        out = {
            "params": list(self.params),
            "grad": [float(g) for g in self.grad],
            "samples": self.samples,
            "seed": self.seed,
        }
        if self.stderr is not None:
            out["stderr"] = [float(s) for s in self.stderr]
        return out

    def z_scores(self, reference: Sequence[float]) -> np.ndarray:
        """|estimate − reference| in standard errors."""
        if self.stderr is None:
            raise ValueError("z-scores need a Monte Carlo estimate")
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(self.grad - np.asarray(reference, dtype=float)) / self.stderr


def _lane_gradient(x, k: int, lanes: int) -> np.ndarray:
    g = gradient(x, k)
    if g.ndim == 1:
        g = g[:, None]
    return np.broadcast_to(g, (k, lanes))


class Estimator:
    """
    The selective estimator for one (model, guide, plan) triple.

    Args:
        model (Command): Model program c_m
        guide (Command): Guide program c_g
        plan (ReparamPlan): Reparameterisation plan π
        params (Sequence[str]): Parameter names θ, in gradient order
        universe (Optional[Universe]): Variable universe (default: from the programs)
        budget (int): Step budget per execution
    """

    def __init__(
        self,
        model: Command,
        guide: Command,
        plan: ReparamPlan,
        params: Sequence[str],
        universe: Optional[Universe] = None,
        budget: int = DEFAULT_BUDGET,
        name_bound: int = DEFAULT_NAME_BOUND,
    ):
        self.model = model
        self.guide = guide
        self.plan = plan
        self.params = tuple(params)
        self.universe = universe or Universe.of(
            model, guide, params=self.params, name_bound=name_bound
        )
        self.budget = budget
        self.transformed = transform(guide, plan)
        self.reparameterised = rv(plan, self.universe, guide)
        self.scored = tuple(n for n in self.universe.names if n not in self.reparameterised)
        logger.debug(
            "estimator: %s, %d reparameterised names", plan.describe(), len(self.reparameterised)
        )

    def _theta(self, theta: ThetaValuation) -> Dict[str, float]:
        missing = [k for k in self.params if k not in theta]
        if missing:
            raise ValueError(f"missing parameter values: {', '.join(missing)}")
        return {k: float(value_of(theta[k])) for k in self.params}

    def draw(self, theta: ThetaValuation, rng: np.random.Generator, lanes: int) -> Dict[Name, np.ndarray]:
        """
        Draw σ̂n from the transformed guide on ``lanes`` lanes.

        Raises:
            DivergedError: If some lane exceeds the budget
            DoubleSampleError: If some lane draws a name twice
        """
        run = sample_lanes(self.transformed, self._theta(theta), rng, lanes, self.universe, self.budget)
        if not run.run.ok.all():
            raise DivergedError(self.budget)
        if run.run.double.any():
            raise DoubleSampleError(run.run.double_names[0])
        return run.names

    def _require_positive(self, which: str, run: DensityRun) -> None:
        if not run.ok.all():
            raise ZeroDensityError(which, "diverged or sampled a name twice")
        with np.errstate(divide="ignore"):
            total = np.asarray(value_of(run.log_density()))
        if not np.all(np.isfinite(total)):
            raise ZeroDensityError(which)

    def grad_lanes(self, theta: ThetaValuation, names: NameValuation) -> np.ndarray:
        """
        Per-lane estimates at the draws ``names``.

        Returns:
            np.ndarray: Shape ``(len(params), lanes)``

        Raises:
            ZeroDensityError: If a density vanishes at some lane
        """
        theta = self._theta(theta)
        lanes = len(next(iter(names.values()))) if names else 1
        names = {n: np.broadcast_to(np.asarray(v, dtype=float), (lanes,)) for n, v in names.items()}
        duals = theta_duals(theta)
        k = len(self.params)

        moved = run_density(self.transformed, duals, names, self.universe, self.budget)
        if not moved.ok.all():
            raise ZeroDensityError("transformed guide", "diverged or sampled a name twice")
        values = moved.values()

        model = run_density(self.model, duals, values, self.universe, self.budget)
        guide = run_density(self.guide, duals, values, self.universe, self.budget)
        self._require_positive("model", model)
        self._require_positive("guide", guide)

        log_m = model.log_density()
        log_g = guide.log_density()
        ratio = np.asarray(value_of(log_m)) - np.asarray(value_of(log_g))
        score = _lane_gradient(guide.log_partial(self.scored), k, lanes)
        pathwise = _lane_gradient(guide.log_partial(self.reparameterised), k, lanes)
        model_grad = _lane_gradient(log_m, k, lanes)
        return score * ratio - pathwise + model_grad

    def estimate(self, theta: ThetaValuation, names: Mapping[Name, float]) -> GradEstimate:
        """Single-sample estimate at a given σ̂n."""
        grads = self.grad_lanes(theta, {n: np.array([float(v)]) for n, v in names.items()})
        return GradEstimate(self.params, grads[:, 0])

    def monte_carlo(
        self,
        theta: ThetaValuation,
        samples: int,
        seed: int,
        chunk: int = DEFAULT_CHUNK,
        jobs: int = 1,
    ) -> GradEstimate:
        """
        Average of ``samples`` estimates with its standard error.

        Chunks draw from their own sub-streams and are concatenated in order,
        so the result does not depend on ``jobs``.
        """
        if samples < 1:
            raise ValueError("samples must be at least 1")
        sizes = [min(chunk, samples - start) for start in range(0, samples, chunk)]

        def run_chunk(index: int) -> np.ndarray:
            rng = make_rng(seed, "mc", str(index))
            return self.grad_lanes(theta, self.draw(theta, rng, sizes[index]))

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                parts = list(pool.map(run_chunk, range(len(sizes))))
        else:
            parts = [run_chunk(i) for i in range(len(sizes))]
        grads = np.concatenate(parts, axis=1)
        mean = grads.mean(axis=1)
        stderr = grads.std(axis=1, ddof=1) / math.sqrt(samples) if samples > 1 else np.full_like(mean, np.inf)
        return GradEstimate(self.params, mean, stderr, samples, seed)


def spge_grad(
    c_m: Command,
    c_g: Command,
    plan: ReparamPlan,
    theta: ThetaValuation,
    names: Mapping[Name, float],
    **kwargs,
) -> GradEstimate:
    """Selective estimator at one draw σ̂n of the transformed guide."""
    return Estimator(c_m, c_g, plan, tuple(theta), **kwargs).estimate(theta, names)


def sce_grad(c_m: Command, c_g: Command, theta: ThetaValuation, names: Mapping[Name, float], **kwargs) -> GradEstimate:
    return spge_grad(c_m, c_g, empty_plan(), theta, names, **kwargs)


def pge_grad(
    c_m: Command,
    c_g: Command,
    theta: ThetaValuation,
    names: Mapping[Name, float],
    plan: Optional[ReparamPlan] = None,
    **kwargs,
) -> GradEstimate:
    """Pathwise estimator: the selective estimator with every string selected."""
    return spge_grad(c_m, c_g, plan or default_plan(), theta, names, **kwargs)


def mc_gradient(
    c_m: Command,
    c_g: Command,
    plan: ReparamPlan,
    theta: ThetaValuation,
    samples: int,
    seed: int = 0,
    chunk: int = DEFAULT_CHUNK,
    jobs: int = 1,
    **kwargs,
) -> GradEstimate:
    return Estimator(c_m, c_g, plan, tuple(theta), **kwargs).monte_carlo(theta, samples, seed, chunk, jobs)


# ---------------------------------------------------------------------------
# Stochastic variational inference
# ---------------------------------------------------------------------------


@dataclass
class SviConfig:
    """
    Settings of the gradient-ascent loop.

    Attributes:
        eta (float): Learning rate
        steps (int): Number of ascent steps
        samples (int): Estimates averaged per step
        seed (int): Master seed
    """

    eta: float = 0.05
    steps: int = 2000
    samples: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")


@dataclass
class SviResult:
    """
    Trajectory of an SVI run.

    Attributes:
        params (tuple): Parameter names
        trajectory (np.ndarray): θ before the first step and after every step
        grad_norms (np.ndarray): Euclidean norm of each step's averaged estimate
        seed (int): Master seed
    """

    params: Sequence[str]
    trajectory: np.ndarray
    grad_norms: np.ndarray
    seed: int
    config: SviConfig = field(default_factory=SviConfig)

    @property
    def final(self) -> np.ndarray:
        return self.trajectory[-1]

    def tail_mean(self, fraction: float = 0.5) -> np.ndarray:
        """Mean of the last ``fraction`` of the iterates."""
        if not 0 < fraction <= 1:
            raise ValueError("fraction must be in (0, 1]")
        count = max(1, int(round(fraction * (len(self.trajectory) - 1))))
        return self.trajectory[-count:].mean(axis=0)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["step", *self.params, "grad_norm", "seed"])
        for step, row in enumerate(self.trajectory):
            norm = "" if step == 0 else repr(float(self.grad_norms[step - 1]))
            writer.writerow([step, *(repr(float(x)) for x in row), norm, self.seed])
        return buffer.getvalue()

    def as_dict(self) -> dict:
        return {
            "params": list(self.params),
            "final": [float(x) for x in self.final],
            "tail_mean": [float(x) for x in self.tail_mean()],
            "steps": len(self.grad_norms),
            "seed": self.seed,
        }


def svi(
    c_m: Command,
    c_g: Command,
    plan: ReparamPlan,
    theta0: ThetaValuation,
    cfg: SviConfig = SviConfig(),
    progress=None,
    **kwargs,
) -> SviResult:
    """
    Gradient ascent θ ← θ + η·ĝ(θ) with ĝ the selective estimator averaged over
    ``cfg.samples`` draws.

    Args:
        progress (Optional[Callable]): Called as ``progress(step, theta, grad_norm)``
    """
    estimator = Estimator(c_m, c_g, plan, tuple(theta0), **kwargs)
    theta = np.array([float(value_of(theta0[k])) for k in estimator.params])
    trajectory: List[np.ndarray] = [theta.copy()]
    norms: List[float] = []
    for step in range(cfg.steps):
        current = dict(zip(estimator.params, theta))
        rng = make_rng(cfg.seed, "svi", str(step))
        grads = estimator.grad_lanes(current, estimator.draw(current, rng, cfg.samples))
        g = grads.mean(axis=1)
        theta = theta + cfg.eta * g
        trajectory.append(theta.copy())
        norms.append(float(np.linalg.norm(g)))
        if progress is not None:
            progress(step + 1, theta, norms[-1])
    logger.debug("svi finished after %d steps at %s", cfg.steps, theta)
    return SviResult(estimator.params, np.array(trajectory), np.array(norms), cfg.seed, cfg)
