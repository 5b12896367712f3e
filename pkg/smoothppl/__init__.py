"""
smoothppl - smoothness analysis and selective reparameterisation for a small
probabilistic programming language.

This package interprets programs with named sample and observe commands,
computes which inputs each program is smooth in, and uses that to decide
which random variables a gradient estimator may reparameterise.

Features:
- Parser and pretty-printer for the surface language
- Vectorised interpreter with density, value and forward-mode gradients
- Sound smoothness analysis (differentiability or local Lipschitzness)
- Selection of the variables to reparameterise, with post-hoc verification
- Selective gradient estimator with score and pathwise parts, and SVI
- Quadrature oracle and a randomised invariant suite
"""

__version__ = "0.1.0"
__author__ = "smoothppl contributors"
__license__ = "MIT"

from .analysis import AbstractState, analyze, smooth_name_param_set
from .config import RunConfig
from .errors import (
    DivergedError,
    DoubleSampleError,
    InvariantViolation,
    PlanError,
    ProgramSyntaxError,
    SmoothPPLError,
    TooManyNamesError,
    ZeroDensityError,
)
from .estimate import Estimator, GradEstimate, SviConfig, svi
from .logging_config import RunLogger, setup_logging
from .operators import SmoothnessProperty
from .reparam import ReparamPlan, default_plan, empty_plan, restrict, transform
from .select import Infeasible, Selection, select_variables
from .syntax import Program, Universe, example_program, load_program, parse_program, pretty

__all__ = [
    "AbstractState",
    "analyze",
    "smooth_name_param_set",
    "RunConfig",
    "DivergedError",
    "DoubleSampleError",
    "InvariantViolation",
    "PlanError",
    "ProgramSyntaxError",
    "SmoothPPLError",
    "TooManyNamesError",
    "ZeroDensityError",
    "Estimator",
    "GradEstimate",
    "SviConfig",
    "svi",
    "RunLogger",
    "setup_logging",
    "SmoothnessProperty",
    "ReparamPlan",
    "default_plan",
    "empty_plan",
    "restrict",
    "transform",
    "Infeasible",
    "Selection",
    "select_variables",
    "Program",
    "Universe",
    "example_program",
    "load_program",
    "parse_program",
    "pretty",
]
