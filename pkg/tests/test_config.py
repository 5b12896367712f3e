"""
Tests for the RunConfig class.
"""

import argparse
import json
import shutil
import tempfile
from pathlib import Path

import pytest

from smoothppl.config import RunConfig


class TestRunConfig:
    """Test cases for RunConfig."""

    @pytest.fixture
    def temp_dir(self):
        """Create a temporary directory for testing."""
        temp = tempfile.mkdtemp()
        yield temp
        shutil.rmtree(temp)

    def test_defaults(self):
        config = RunConfig()
        assert config.prop == "diff"
        assert config.seed == 0
        assert config.name_bound == 16
        assert config.budget == 1_000_000
        assert config.validate()

    def test_save_and_load(self, temp_dir):
        """Test that a saved configuration loads back unchanged."""
        path = Path(temp_dir) / "nested" / "config.json"
        config = RunConfig(prop="lip", seed=7, jobs=2, log_file="run.log")
        config.save_to_file(str(path))
        assert json.loads(path.read_text(encoding="utf-8"))["seed"] == 7
        assert RunConfig.load_from_file(str(path)) == config

    def test_missing_file_gives_defaults(self, temp_dir):
        assert RunConfig.load_from_file(str(Path(temp_dir) / "missing.json")) == RunConfig()

    def test_invalid_file_gives_defaults(self, temp_dir):
        path = Path(temp_dir) / "broken.json"
        path.write_text('{"seed": 3, "colour": "blue"}', encoding="utf-8")
        assert RunConfig.load_from_file(str(path)) == RunConfig()
        path.write_text("{not json", encoding="utf-8")
        assert RunConfig.load_from_file(str(path)) == RunConfig()

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv("SMOOTHPPL_PROP", "lip")
        monkeypatch.setenv("SMOOTHPPL_SEED", "11")
        monkeypatch.setenv("SMOOTHPPL_ETA", "0.2")
        monkeypatch.setenv("SMOOTHPPL_MC_SAMPLES", "5000")
        monkeypatch.setenv("SMOOTHPPL_ORACLE", "yes")
        monkeypatch.setenv("SMOOTHPPL_LOG_FILE", "out.log")
        config = RunConfig.from_env()
        assert config.prop == "lip"
        assert config.seed == 11
        assert config.eta == 0.2
        assert config.mc_samples == 5000
        assert config.oracle is True
        assert config.log_file == "out.log"

    def test_update_from_args(self):
        """Test that only given arguments override the configuration."""
        config = RunConfig(seed=3, jobs=4)
        config.update_from_args(argparse.Namespace(seed=9, jobs=None, unrelated="x"))
        assert config.seed == 9
        assert config.jobs == 4

    @pytest.mark.parametrize(
        "changes",
        [
            {"prop": "smooth"},
            {"eta": -1.0},
            {"steps": -1},
            {"samples": 0},
            {"mc_samples": 0},
            {"budget": 0},
            {"name_bound": 0},
            {"jobs": 0},
            {"quad_points": 2},
            {"quad_lo": 1.0, "quad_hi": 1.0},
            {"log_level": "LOUD"},
        ],
    )
    def test_validate_rejects(self, changes):
        assert not RunConfig(**changes).validate()

    def test_derived_settings(self):
        config = RunConfig(eta=0.1, steps=5, samples=3, seed=2, quad_lo=-4.0, quad_hi=4.0, quad_points=81)
        svi = config.svi_config()
        assert (svi.eta, svi.steps, svi.samples, svi.seed) == (0.1, 5, 3, 2)
        grid = config.quadrature_grid()
        assert grid.axis[0] == -4.0 and grid.axis[-1] == 4.0 and len(grid.axis) == 81
