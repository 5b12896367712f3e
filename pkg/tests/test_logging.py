"""
Tests for the logging configuration.
"""

import logging

import numpy as np
import pytest

from smoothppl.logging_config import ColoredFormatter, RunLogger, setup_logging
from smoothppl.operators import SmoothnessProperty
from smoothppl.reparam import default_plan, restrict
from smoothppl.select import Infeasible, Selection


@pytest.fixture
def package_logger():
    yield logging.getLogger("smoothppl")
    logger = logging.getLogger("smoothppl")
    logger.handlers.clear()
    logger.propagate = True
    logger.disabled = False
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def captured(package_logger, caplog):
    logger = setup_logging(log_level="DEBUG", enable_colors=False)
    logger.addHandler(caplog.handler)
    return caplog


class TestSetupLogging:
    """Test cases for setup_logging."""

    def test_disabled(self, package_logger):
        logger = setup_logging(enable_logging=False)
        assert logger.disabled
        assert logger.handlers == []

    def test_level_and_handlers(self, package_logger):
        logger = setup_logging(log_level="warning")
        assert logger.level == logging.WARNING
        assert len(logger.handlers) == 1
        assert not logger.propagate

    def test_log_file(self, package_logger, tmp_path):
        path = tmp_path / "logs" / "run.log"
        logger = setup_logging(log_file=str(path), enable_colors=False)
        assert len(logger.handlers) == 2
        logging.getLogger("smoothppl.analysis").info("fixpoint reached")
        for handler in logger.handlers:
            handler.flush()
        text = path.read_text(encoding="utf-8")
        assert "smoothppl.analysis - INFO" in text
        assert "fixpoint reached" in text

    def test_repeated_setup_replaces_handlers(self, package_logger):
        setup_logging()
        logger = setup_logging()
        assert len(logger.handlers) == 1


class TestColoredFormatter:
    """Test cases for ColoredFormatter."""

    def test_adds_color_without_touching_record(self):
        formatter = ColoredFormatter("%(levelname)s: %(message)s")
        record = logging.LogRecord("smoothppl", logging.WARNING, __file__, 1, "careful", None, None)
        text = formatter.format(record)
        assert text == "\033[33mWARNING\033[0m: careful"
        assert record.levelname == "WARNING"


class TestRunLogger:
    """Test cases for RunLogger."""

    def test_startup(self, captured):
        RunLogger(logging.getLogger("smoothppl")).log_startup("select", {"Seed": 4})
        messages = [r.getMessage() for r in captured.records]
        assert "SMOOTHPPL SELECT" in messages
        assert "Seed: 4" in messages

    def test_svi_progress_is_rate_limited(self, captured):
        log = RunLogger(logging.getLogger("smoothppl"), every=10)
        for step in range(1, 31):
            log.log_svi_progress(step, np.array([0.5, 1.0]), 0.25)
        messages = [r.getMessage() for r in captured.records]
        assert messages == [
            f"Step {s}: theta=(0.5000, 1.0000) |grad|=0.2500" for s in (10, 20, 30)
        ]

    def test_selection_messages(self, captured):
        log = RunLogger(logging.getLogger("smoothppl"))
        prop = SmoothnessProperty.DIFFERENTIABILITY
        log.log_selection(Selection(restrict(default_plan(), ["z1"]), 3, prop, unsound_under_full=["z2"]))
        log.log_selection(Infeasible("no luck", 2, prop))
        records = captured.records
        assert "reparameterise z1 (3 analysis calls" in records[0].getMessage()
        assert records[1].getMessage().endswith("z2")
        assert records[2].levelno == logging.WARNING
        assert "no luck" in records[2].getMessage()

    def test_log_error(self, captured):
        log = RunLogger(logging.getLogger("smoothppl"))
        log.log_error("Run failed", ValueError("boom"))
        log.log_error("plain")
        assert [r.getMessage() for r in captured.records] == ["Run failed: boom", "plain"]
        assert all(r.levelno == logging.ERROR for r in captured.records)
