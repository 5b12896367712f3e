"""
Tests for the density and sampling semantics.
"""

import math

import numpy as np
import pytest
from scipy.stats import norm

from smoothppl.errors import DivergedError, DoubleSampleError
from smoothppl.interp import (
    Diverged,
    Ok,
    State,
    check_no_double_sampling,
    eval_expr,
    exec,
    exec_lanes,
    exec_sampling,
    initial_state,
    sample_lanes,
)
from smoothppl.syntax import LIKE, Cnt, Name, Pr, PVar, RName, Universe, Val, parse_program
from smoothppl.utils import make_rng

LOOPED_CONSTANT_NAME = """
i := 0;
while i < 2 {
    x := sam(name("a", 0), N(0, 1), λy. y);
    i := i + 1
}
"""

LOOPED_INDEXED_NAME = """
i := 0;
while i < 3 {
    x := sam(name("a", i), N(0, 1), λy. y);
    i := i + 1
}
"""


def start_state(c, **values):
    universe = Universe.of(c, name_bound=1)
    state = State(universe)
    state[LIKE] = 1.0
    for key, value in values.items():
        state[PVar(key)] = value
    return state


class TestExpressions:
    """Test cases for eval_expr and the operator defaults."""

    @pytest.mark.parametrize(
        "text,expected",
        [
            ("1 / 0", 0.0),
            ("log(0 - 1)", -745.0),
            ("sqrt(0 - 4)", 1.0),
            ("exp(1000)", math.exp(709.0)),
            ("relu(0 - 2)", 0.0),
            ("step(0)", 0.0),
            ("step(0.5)", 1.0),
            ("floor(2.7)", 2.0),
            ("xy_ratio(0, 0)", 0.0),
            ("xy_ratio(1, 1)", 0.5),
            ("normal_pdf(0, 0, 0 - 1)", 1.0 / math.sqrt(2.0 * math.pi)),
            ("uniform_pdf(0.5, 1, 0)", 1.0),
        ],
    )
    def test_defaults(self, text, expected):
        e = parse_program(f"z := {text}").expr
        assert eval_expr(e, None) == pytest.approx(expected)

    def test_unbound_variable_needs_state(self):
        with pytest.raises(ValueError):
            eval_expr(parse_program("z := x").expr, None)


class TestExec:
    """Test cases for exec and exec_lanes."""

    def test_assign_and_branch(self):
        c = parse_program("x := 2; if x < 3 { y := x * x } else { y := 0 }")
        result = exec(c, start_state(c))
        assert isinstance(result, Ok)
        assert result.state[PVar("y")] == pytest.approx(4.0)

    def test_step_count(self):
        c = parse_program("x := 1; y := 2")
        result = exec(c, start_state(c))
        assert result.steps == 2

    def test_input_state_is_not_modified(self):
        c = parse_program("x := 5")
        state = start_state(c, x=1.0)
        exec(c, state)
        assert state[PVar("x")] == 1.0

    def test_divergence(self):
        c = parse_program("while true { skip }")
        assert exec(c, start_state(c), budget=100) == Diverged(100)

    def test_budget_must_be_positive(self):
        c = parse_program("skip")
        with pytest.raises(ValueError):
            exec(c, start_state(c), budget=0)

    def test_observe_scales_likelihood(self):
        c = parse_program("obs(N(0, 1), 1); obs(N(0, 4), 2)")
        result = exec(c, start_state(c))
        assert result.state[LIKE] == pytest.approx(norm.pdf(1.0) * norm.pdf(2.0, 0.0, 2.0))

    def test_sample_in_density_mode(self):
        """Test that sampling keeps the preset name value and updates val, pr and cnt."""
        c = parse_program('x := sam(name("a", 0), N(1, 4), λy. y * 2)')
        state = start_state(c)
        a = Name("a", 0)
        state[RName(a)] = 0.5
        result = exec(c, state)
        assert result.state[PVar("x")] == pytest.approx(1.0)
        assert result.state[Val(a)] == pytest.approx(1.0)
        assert result.state[Pr(a)] == pytest.approx(norm.pdf(0.5, 1.0, 2.0))
        assert result.state[Cnt(a)] == 1.0
        assert result.state[RName(a)] == 0.5

    def test_lanes_follow_their_own_branch(self):
        c = parse_program("if x < 0 { y := 0 - x } else { y := x * 10 }")
        state = start_state(c, x=np.array([-2.0, 3.0]))
        run = exec_lanes(c, state, 2)
        assert run.ok.all()
        np.testing.assert_allclose(run.state[PVar("y")], [2.0, 30.0])

    def test_only_diverging_lanes_fail(self):
        c = parse_program("while x < 1 { skip }")
        state = start_state(c, x=np.array([0.0, 2.0]))
        run = exec_lanes(c, state, 2, budget=50)
        np.testing.assert_array_equal(run.ok, [False, True])


class TestSampling:
    """Test cases for the sampling semantics."""

    def test_draws_every_name(self, sign_guide):
        universe = Universe.of(sign_guide.command, params=sign_guide.params, name_bound=2)
        names = exec_sampling(sign_guide.command, {"θ1": 0.0, "θ2": 0.0}, make_rng(0, "t"), universe)
        assert set(names) == set(universe.names)
        assert all(np.isfinite(v) for v in names.values())

    def test_same_seed_same_draws(self, sign_guide):
        theta = {"θ1": 1.0, "θ2": 2.0}
        a = exec_sampling(sign_guide.command, theta, make_rng(3, "draw"))
        b = exec_sampling(sign_guide.command, theta, make_rng(3, "draw"))
        assert a == b

    def test_guide_mean(self, sign_guide):
        """Test that the first draw of the guide is centred on θ1."""
        universe = Universe.of(sign_guide.command, params=sign_guide.params, name_bound=1)
        lanes = 100_000
        draws = sample_lanes(
            sign_guide.command, {"θ1": 3.0, "θ2": 0.0}, make_rng(1, "mean"), lanes, universe
        )
        mean = draws.names[Name("z1", 0)].mean()
        assert abs(mean - 3.0) < 4.0 / math.sqrt(lanes)
        assert draws.ok.all()

    def test_double_sampling_raises(self):
        c = parse_program(LOOPED_CONSTANT_NAME)
        with pytest.raises(DoubleSampleError):
            exec_sampling(c, {}, make_rng(0, "double"))

    def test_indexed_names_are_distinct(self):
        c = parse_program(LOOPED_INDEXED_NAME)
        universe = Universe.of(c, name_bound=4)
        run = sample_lanes(c, {}, make_rng(0, "indexed"), 8, universe)
        assert run.ok.all()
        for i in range(3):
            np.testing.assert_array_equal(run.run.state[Cnt(Name("a", i))], np.ones(8))
        assert run.run.state[Cnt(Name("a", 3))] == 0.0

    def test_divergence_raises(self):
        c = parse_program("while true { skip }")
        with pytest.raises(DivergedError):
            exec_sampling(c, {}, make_rng(0, "loop"), budget=20)


class TestDoubleSamplingFalsifier:
    """Test cases for check_no_double_sampling."""

    def test_straight_line_program_passes(self, sign_model):
        assert check_no_double_sampling(sign_model.command, 20, make_rng(0, "f"))

    def test_loop_with_constant_name_fails(self):
        c = parse_program(LOOPED_CONSTANT_NAME)
        assert not check_no_double_sampling(c, 5, make_rng(0, "f"))

    def test_loop_with_indexed_name_passes(self):
        c = parse_program(LOOPED_INDEXED_NAME)
        assert check_no_double_sampling(c, 5, make_rng(0, "f"), Universe.of(c, name_bound=4))


class TestInitialState:
    """Test cases for initial_state."""

    def test_start_values(self, sign_guide):
        universe = Universe.of(sign_guide.command, params=sign_guide.params, name_bound=1)
        z1 = Name("z1", 0)
        state = initial_state(universe, {"θ1": 0.5}, {z1: 1.0})
        assert state[LIKE] == 1.0
        assert state[PVar("θ1")] == 0.5
        assert state[PVar("x1")] == 0.0
        assert state[Val(z1)] == 1.0
        assert state[Pr(z1)] == pytest.approx(norm.pdf(1.0))
        assert state[Pr(Name("z2", 0))] == pytest.approx(norm.pdf(0.0))
        assert state[Cnt(z1)] == 0.0
