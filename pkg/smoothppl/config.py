"""
Configuration management for the smoothppl package.
"""

import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from .estimate import SviConfig
from .interp import DEFAULT_BUDGET
from .density import QuadratureGrid

ENV_PREFIX = "SMOOTHPPL_"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class RunConfig:
    """
    Settings shared by every subcommand.

    Attributes:
        prop (str): Smoothness property, "diff" or "lip"
        seed (int): Master seed for all random streams
        eta (float): SVI learning rate
        steps (int): SVI steps
        samples (int): Estimates per SVI step
        mc_samples (int): Monte Carlo samples for estimate
        budget (int): Step budget per execution
        name_bound (int): Indices per name string
        jobs (int): Worker threads for Monte Carlo and quadrature
        oracle (bool): Compare estimates with the quadrature oracle
        quad_lo (float): Lower bound of the quadrature grid
        quad_hi (float): Upper bound of the quadrature grid
        quad_points (int): Quadrature points per axis
        falsifier_trials (int): Random states for the double-sampling falsifier
        check_programs (int): Fuzz programs in the check suite
        check_states (int): Random states per fuzz program
        log_file (Optional[str]): Path to log file (None = stderr only)
        log_level (str): Logging level
    """

    prop: str = "diff"
    seed: int = 0
    eta: float = 0.05
    steps: int = 2000
    samples: int = 16
    mc_samples: int = 100_000
    budget: int = DEFAULT_BUDGET
    name_bound: int = 16
    jobs: int = 1
    oracle: bool = False
    quad_lo: float = -10.0
    quad_hi: float = 10.0
    quad_points: int = 2001
    falsifier_trials: int = 20
    check_programs: int = 200
    check_states: int = 20
    log_file: Optional[str] = None
    log_level: str = "INFO"

    @classmethod
    def load_from_file(cls, config_path: str) -> "RunConfig":
        """
        Load configuration from a JSON file.

        Args:
            config_path (str): Path to the configuration file

        Returns:
            RunConfig: Loaded configuration
        """
        config_file = Path(config_path)
        if not config_file.exists():
            return cls()

        try:
            with open(config_file, "r", encoding="utf-8") as f:
                config_data = json.load(f)
            return cls(**config_data)
        except (json.JSONDecodeError, TypeError) as e:
            print(f"Warning: Error loading config from {config_path}: {e}")
            print("Using default configuration.")
            return cls()

    def save_to_file(self, config_path: str):
        """
        Save configuration to a JSON file.

        Args:
            config_path (str): Path to save the configuration file
        """
        config_file = Path(config_path)
        config_file.parent.mkdir(parents=True, exist_ok=True)

        with open(config_file, "w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=4)

    @classmethod
    def from_env(cls) -> "RunConfig":
        """
        Create configuration from SMOOTHPPL_* environment variables.

        Returns:
            RunConfig: Configuration with values from environment
        """
        values = {}
        for f in fields(cls):
            raw = os.getenv(ENV_PREFIX + f.name.upper())
            if raw is None:
                continue
            if f.type in (bool, "bool"):
                values[f.name] = raw.lower() in ("1", "true", "yes")
            elif f.type in (int, "int"):
                values[f.name] = int(raw)
            elif f.type in (float, "float"):
                values[f.name] = float(raw)
            else:
                values[f.name] = raw
        return cls(**values)

    def update_from_args(self, args):
        """
        Update configuration from command line arguments.

        Only arguments that were given (not None) override the current values.

        Args:
            args: Parsed command line arguments
        """
        for f in fields(self):
            if hasattr(args, f.name) and getattr(args, f.name) is not None:
                setattr(self, f.name, getattr(args, f.name))

    def validate(self) -> bool:
        """
        Validate the configuration.

        Returns:
            bool: True if configuration is valid
        """
        if self.prop not in ("diff", "lip"):
            print(f"Error: Invalid smoothness property: {self.prop}")
            return False

        if self.eta < 0:
            print(f"Error: Learning rate must be non-negative: {self.eta}")
            return False

        if self.steps < 0:
            print(f"Error: Invalid number of steps: {self.steps}")
            return False

        if self.samples < 1:
            print(f"Error: Need at least one sample: {self.samples}")
            return False

        if self.mc_samples < 1:
            print(f"Error: Need at least one Monte Carlo sample: {self.mc_samples}")
            return False

        if self.budget < 1:
            print(f"Error: Step budget must be positive: {self.budget}")
            return False

        if self.name_bound < 1:
            print(f"Error: Name bound must be positive: {self.name_bound}")
            return False

        if self.jobs < 1:
            print(f"Error: Invalid number of jobs: {self.jobs}")
            return False

        if self.quad_points < 3 or self.quad_lo >= self.quad_hi:
            print(
                f"Error: Invalid quadrature grid: [{self.quad_lo}, {self.quad_hi}] "
                f"with {self.quad_points} points"
            )
            return False

        if self.log_level.upper() not in LOG_LEVELS:
            print(f"Error: Invalid log level: {self.log_level}")
            return False

        return True

    def svi_config(self) -> SviConfig:
        return SviConfig(eta=self.eta, steps=self.steps, samples=self.samples, seed=self.seed)

    def quadrature_grid(self) -> QuadratureGrid:
        return QuadratureGrid(lo=self.quad_lo, hi=self.quad_hi, points=self.quad_points)
