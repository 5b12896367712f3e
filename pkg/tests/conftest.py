"""
Shared fixtures: the programs shipped with the package.
"""

from pathlib import Path

import pytest

import smoothppl
from smoothppl.syntax import example_program

PROGRAMS_DIR = Path(smoothppl.__file__).parent / "programs"


@pytest.fixture
def programs_dir():
    """Directory holding the bundled .ppl files."""
    return PROGRAMS_DIR


@pytest.fixture
def sign_model():
    return example_program("sign_model")


@pytest.fixture
def sign_guide():
    return example_program("sign_guide")


@pytest.fixture
def gauss_model():
    return example_program("gauss_model")


@pytest.fixture
def gauss_guide():
    return example_program("gauss_guide")


@pytest.fixture
def relu_guide():
    return example_program("relu_guide")
