"""
Command-line interface for the smoothppl package.
"""

import argparse
import sys
from typing import List, Optional, Sequence

from . import __version__
from .analysis import analysis_report, analyze, smooth_name_param_set
from .checks import SuiteConfig, run_suite, suite_report
from .config import LOG_LEVELS, RunConfig
from .density import elbo_grad_fd, sampled_names
from .errors import (
    InvariantViolation,
    PlanError,
    ProgramSyntaxError,
    SmoothPPLError,
    TooManyNamesError,
)
from .estimate import INTERCHANGE_ASSUMPTION, Estimator, svi
from .logging_config import RunLogger, setup_logging
from .operators import SmoothnessProperty
from .reparam import ReparamPlan, plan_to_json, resolve_plan
from .select import select_variables
from .syntax import Program, Universe, load_program
from .utils import format_vector, get_system_info, parse_theta, to_json, write_output

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVARIANT = 2
EXIT_INFEASIBLE = 3


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)

    run_group = common.add_argument_group("Run Configuration")
    run_group.add_argument("--prop", choices=["diff", "lip"], help="Smoothness property (default: diff)")
    run_group.add_argument("--seed", type=int, help="Master seed (default: 0)")
    run_group.add_argument("--budget", type=int, help="Step budget per execution (default: 1000000)")
    run_group.add_argument("--name-bound", type=int, help="Indices per name string (default: 16)")
    run_group.add_argument("--jobs", type=int, help="Worker threads (default: 1)")
    run_group.add_argument("--output", "-o", type=str, help="Write the artifact to a file instead of stdout")

    config_group = common.add_argument_group("Configuration")
    config_group.add_argument("--config", type=str, help="Load configuration from JSON file")
    config_group.add_argument(
        "--save-config", type=str, help="Save current configuration to JSON file and exit"
    )

    logging_group = common.add_argument_group("Logging")
    logging_group.add_argument("--log-file", type=str, help="Path to log file (default: stderr only)")
    logging_group.add_argument("--log-level", choices=list(LOG_LEVELS), help="Logging level (default: INFO)")
    logging_group.add_argument("--no-colors", action="store_true", help="Disable colored output")
    logging_group.add_argument("--quiet", action="store_true", help="Disable all logging output")
    return common


def _add_plan_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--plan",
        type=str,
        default="select",
        help="Plan file, 'full', 'empty', or 'select' to run the selection first (default: select)",
    )


def create_parser():
    """
    Create and configure argument parser.

    Returns:
        argparse.ArgumentParser: Configured argument parser
    """
    common = _common_options()
    parser = argparse.ArgumentParser(
        description=(
            "smoothppl - smoothness analysis and selective reparameterisation "
            "for a small probabilistic programming language"
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s analyze model.ppl                          # Smoothness report for a program
  %(prog)s analyze model.ppl --prop lip               # Local Lipschitzness instead
  %(prog)s select model.ppl guide.ppl -o plan.json    # Choose variables to reparameterise
  %(prog)s estimate model.ppl guide.ppl --plan plan.json --theta 1,2 --oracle
  %(prog)s train model.ppl guide.ppl --plan plan.json --seed 7 -o trace.csv
  %(prog)s check model.ppl guide.ppl                  # Run the invariant suite

Configuration priority: CLI arguments > config file > environment variables > defaults
Exit codes: 0 ok, 1 error, 2 invariant violation, 3 infeasible selection
        """,
    )

    parser.add_argument("--version", action="version", version=f"smoothppl {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("analyze", parents=[common], help="Analyse one program")
    p.add_argument("program", help="Program file")
    p.add_argument("--params", type=str, help="Comma-separated parameters (default: #params header)")
    p.add_argument("--no-refine", action="store_true", help="Skip the interval pre-analysis")

    p = sub.add_parser("select", parents=[common], help="Select the variables to reparameterise")
    p.add_argument("model", help="Model program file")
    p.add_argument("guide", help="Guide program file")
    p.add_argument("--base-plan", type=str, default="full", help="Plan to restrict (default: full)")

    p = sub.add_parser("estimate", parents=[common], help="Monte Carlo gradient estimate")
    p.add_argument("model", help="Model program file")
    p.add_argument("guide", help="Guide program file")
    p.add_argument("--theta", type=str, required=True, help="Parameter values, e.g. 1,2 or theta1=1,theta2=2")
    p.add_argument("--samples", dest="mc_samples", type=int, help="Monte Carlo samples (default: 100000)")
    p.add_argument("--oracle", action="store_true", default=None, help="Compare with the quadrature gradient")
    _add_plan_options(p)

    p = sub.add_parser("train", parents=[common], help="Run stochastic variational inference")
    p.add_argument("model", help="Model program file")
    p.add_argument("guide", help="Guide program file")
    p.add_argument("--theta0", type=str, help="Initial parameters (default: all zero)")
    p.add_argument("--eta", type=float, help="Learning rate (default: 0.05)")
    p.add_argument("--steps", type=int, help="Ascent steps (default: 2000)")
    p.add_argument("--samples", type=int, help="Estimates per step (default: 16)")
    _add_plan_options(p)

    p = sub.add_parser("check", parents=[common], help="Run the invariant suite")
    p.add_argument("programs", nargs="*", help="Programs to check in addition to the fuzz corpus")
    p.add_argument("--programs-count", dest="check_programs", type=int, help="Fuzz programs (default: 200)")
    p.add_argument("--states", dest="check_states", type=int, help="Random states per program (default: 20)")

    return parser


class _Infeasible(SmoothPPLError):
    """Raised when a command needs a plan and the selection finds none."""


def _params(*programs: Program) -> List[str]:
    return list(dict.fromkeys(p for program in programs for p in program.params))


def _universe(config: RunConfig, *programs: Program) -> Universe:
    return Universe.of(
        *(p.command for p in programs), params=_params(*programs), name_bound=config.name_bound
    )


def _plan(spec: str, model: Program, guide: Program, config: RunConfig, log: RunLogger) -> ReparamPlan:
    if spec != "select":
        return resolve_plan(spec)
    result = _select(model, guide, config, resolve_plan("full"))
    log.log_selection(result)
    if not result.feasible:
        raise _Infeasible(result.reason)
    return result.plan


def _select(model: Program, guide: Program, config: RunConfig, base: ReparamPlan):
    return select_variables(
        model.command,
        guide.command,
        _params(model, guide),
        base,
        SmoothnessProperty.parse(config.prop),
        _universe(config, model, guide),
        budget=config.budget,
        falsifier_trials=config.falsifier_trials,
        seed=config.seed,
    )


def cmd_analyze(args, config: RunConfig, log: RunLogger) -> int:
    program = load_program(args.program)
    params = [p.strip() for p in args.params.split(",") if p.strip()] if args.params else list(program.params)
    prop = SmoothnessProperty.parse(config.prop)
    universe = Universe.of(program.command, params=params, name_bound=config.name_bound)
    state = analyze(program.command, prop, params, universe, refine=not args.no_refine)
    smooth = smooth_name_param_set(program.command, params, prop, state)
    report = analysis_report(state, prop, smooth)
    report["params"] = params
    log.log_analysis(args.program, prop.value, report["smooth_names"])
    write_output(to_json(report), args.output)
    return EXIT_OK


def cmd_select(args, config: RunConfig, log: RunLogger) -> int:
    model, guide = load_program(args.model), load_program(args.guide)
    result = _select(model, guide, config, resolve_plan(args.base_plan))
    log.log_selection(result)
    write_output(to_json(result.as_dict()), args.output)
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_estimate(args, config: RunConfig, log: RunLogger) -> int:
    model, guide = load_program(args.model), load_program(args.guide)
    params = _params(model, guide)
    theta = parse_theta(args.theta, params)
    plan = _plan(args.plan, model, guide, config, log)
    universe = _universe(config, model, guide)
    samples = config.mc_samples
    estimator = Estimator(model.command, guide.command, plan, params, universe, config.budget)
    estimate = estimator.monte_carlo(theta, samples, config.seed, jobs=config.jobs)
    log.info(f"Estimated gradient {format_vector(estimate.grad)} from {samples} samples")

    report = {
        "assumption": INTERCHANGE_ASSUMPTION,
        "plan": plan_to_json(plan),
        "theta": theta,
        "estimate": estimate.as_dict(),
    }
    if config.oracle:
        try:
            oracle = elbo_grad_fd(
                model.command,
                guide.command,
                theta,
                config.quadrature_grid(),
                universe=universe,
                budget=config.budget,
                jobs=config.jobs,
            )
        except TooManyNamesError as e:
            log.warning(f"Oracle skipped: {e}")
        else:
            z = estimate.z_scores(oracle)
            report["oracle"] = {
                "grad": [float(g) for g in oracle],
                "z_scores": [float(x) for x in z],
                "max_z": float(max(z)) if len(z) else 0.0,
                "names": [str(n) for n in sampled_names((model.command, guide.command), universe)],
            }
            log.info(f"Oracle gradient {format_vector(oracle)}, largest deviation {max(z):.2f} SE")
    write_output(to_json(report), args.output)
    return EXIT_OK


def cmd_train(args, config: RunConfig, log: RunLogger) -> int:
    model, guide = load_program(args.model), load_program(args.guide)
    params = _params(model, guide)
    theta0 = parse_theta(args.theta0, params) if args.theta0 else {k: 0.0 for k in params}
    plan = _plan(args.plan, model, guide, config, log)
    result = svi(
        model.command,
        guide.command,
        plan,
        theta0,
        config.svi_config(),
        progress=log.log_svi_progress,
        universe=_universe(config, model, guide),
        budget=config.budget,
    )
    log.info(f"Final theta {format_vector(result.final)}, tail mean {format_vector(result.tail_mean())}")
    log.info(f"Note: this run {INTERCHANGE_ASSUMPTION}")
    write_output(result.to_csv(), args.output)
    return EXIT_OK


def cmd_check(args, config: RunConfig, log: RunLogger) -> int:
    programs = [load_program(path) for path in args.programs]
    suite = SuiteConfig(programs=config.check_programs, states=config.check_states, seed=config.seed)
    results = run_suite([p.command for p in programs], _params(*programs), suite, progress=log.info)
    report = suite_report(results)
    for name, check in sorted(results.items()):
        status = "ok" if check.passed else "VIOLATED"
        log.info(f"{name}: {check.cases} cases, {check.violations} violations [{status}]")
    write_output(to_json(report), args.output)
    return EXIT_OK if report["passed"] else EXIT_INVARIANT


COMMANDS = {
    "analyze": cmd_analyze,
    "select": cmd_select,
    "estimate": cmd_estimate,
    "train": cmd_train,
    "check": cmd_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main CLI entry point for smoothppl.

    Returns:
        int: Process exit code
    """
    parser = create_parser()
    args = parser.parse_args(argv)

    # Load configuration
    if args.config:
        config = RunConfig.load_from_file(args.config)
    else:
        config = RunConfig.from_env()

    config.update_from_args(args)

    if args.save_config:
        config.save_to_file(args.save_config)
        print(f"Configuration saved to: {args.save_config}", file=sys.stderr)
        return EXIT_OK

    if not config.validate():
        return EXIT_ERROR

    enable_logging = not args.quiet
    logger_instance = setup_logging(
        enable_logging=enable_logging,
        log_file=config.log_file,
        log_level=config.log_level if not args.quiet else "CRITICAL",
        enable_colors=not args.no_colors,
    )
    run_logger = RunLogger(logger_instance)

    if enable_logging:
        run_logger.log_startup(
            args.command,
            {
                "Property": config.prop,
                "Seed": config.seed,
                "Budget": config.budget,
                "Name Bound": config.name_bound,
                "Jobs": config.jobs,
                "Log File": config.log_file or "Console only",
                "Version": __version__,
                "Python": get_system_info()["python_version"],
            },
        )

    try:
        return COMMANDS[args.command](args, config, run_logger)
    except ProgramSyntaxError as e:
        run_logger.error(f"Syntax error: {e}")
        return EXIT_ERROR
    except InvariantViolation as e:
        run_logger.log_error("Invariant violated", e)
        return EXIT_INVARIANT
    except _Infeasible as e:
        run_logger.error(f"Selection infeasible: {e}")
        return EXIT_INFEASIBLE
    except (PlanError, ValueError, OSError) as e:
        run_logger.error(f"Error: {e}")
        return EXIT_ERROR
    except SmoothPPLError as e:
        run_logger.log_error("Run failed", e)
        return EXIT_ERROR
    except KeyboardInterrupt:
        run_logger.warning("Interrupted by user")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
