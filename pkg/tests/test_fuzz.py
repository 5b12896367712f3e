"""
Tests for the random program generator.
"""

from smoothppl.checks import random_full_state
from smoothppl.fuzz import FuzzConfig, generate_corpus, generate_program
from smoothppl.interp import exec_lanes
from smoothppl.syntax import Observe, Universe, While, canonical, subcommands
from smoothppl.utils import make_rng


class TestGenerator:
    """Test cases for generate_program and generate_corpus."""

    def test_same_seed_same_program(self):
        assert canonical(generate_program(5, 2)) == canonical(generate_program(5, 2))

    def test_corpus_entries_are_indexed_programs(self):
        corpus = generate_corpus(4, seed=5)
        assert [canonical(c) for c in corpus] == [canonical(generate_program(5, i)) for i in range(4)]

    def test_different_seeds_differ(self):
        first = {canonical(c) for c in generate_corpus(10, seed=1)}
        second = {canonical(c) for c in generate_corpus(10, seed=2)}
        assert first != second

    def test_generated_programs_terminate(self):
        """Test that counted loops keep every program within a small budget."""
        for index, c in enumerate(generate_corpus(30, seed=8)):
            universe = Universe.of(c, name_bound=2)
            state = random_full_state(universe, make_rng(8, str(index)), 4)
            run = exec_lanes(c, state, 4, budget=10_000)
            assert run.ok.all(), f"program #{index} did not terminate"

    def test_config_switches(self):
        config = FuzzConfig(loops=False, observe=False)
        for c in generate_corpus(30, seed=4, config=config):
            assert not any(isinstance(node, (While, Observe)) for node in subcommands(c))

    def test_restricted_vocabulary(self):
        config = FuzzConfig(pvars=("u",), strings=("s",))
        for c in generate_corpus(10, seed=6, config=config):
            universe = Universe.of(c)
            assert set(universe.strings) <= {"s"}
            assert {p for p in universe.pvars if not p.startswith("i")} <= {"u"}
