"""
Tests for the interval domain and the interval pre-analysis.
"""

import math

import pytest

from smoothppl.analysis import interval_of, pre_analyze
from smoothppl.intervals import Arithmetic, Interval, join_envs, widen_envs
from smoothppl.syntax import parse_program

INF = math.inf


class TestInterval:
    """Test cases for Interval and its transfer functions."""

    def test_malformed_interval_is_top(self):
        assert Interval(2.0, 1.0).is_top
        assert Interval(math.nan, 1.0).is_top

    def test_join_and_order(self):
        a, b = Interval(0.0, 1.0), Interval(2.0, 3.0)
        assert (a | b) == Interval(0.0, 3.0)
        assert a <= (a | b)
        assert not (a | b) <= a

    def test_widen_moves_changed_bounds_to_infinity(self):
        old = Interval(0.0, 3.0)
        assert old.widen(Interval(0.0, 4.0)) == Interval(0.0, INF)
        assert old.widen(Interval(-1.0, 3.0)) == Interval(-INF, 3.0)
        assert old.widen(Interval(1.0, 2.0)) == old

    def test_multiplication_corners(self):
        assert Arithmetic.mul(Interval(-2.0, 3.0), Interval(1.0, 4.0)) == Interval(-8.0, 12.0)

    def test_zero_times_infinity_is_zero(self):
        assert Arithmetic.mul(Interval(0.0, 0.0), Interval.top()) == Interval.point(0.0)

    def test_division_needs_nonzero_denominator(self):
        assert Arithmetic.div(Interval(1.0, 2.0), Interval(-1.0, 1.0)).is_top
        assert Arithmetic.div(Interval(1.0, 2.0), Interval(2.0, 4.0)) == Interval(0.25, 1.0)

    def test_log_defaults(self):
        assert Arithmetic.log(Interval(-3.0, -1.0)) == Interval.point(-745.0)
        out = Arithmetic.log(Interval(1.0, math.e))
        assert out.lo == 0.0 and out.hi == pytest.approx(1.0)
        assert Arithmetic.log(Interval(-1.0, 1.0)).lo == -745.0

    def test_sqrt_defaults(self):
        assert Arithmetic.sqrt(Interval(-2.0, 0.0)) == Interval.point(1.0)
        assert Arithmetic.sqrt(Interval(4.0, 9.0)) == Interval(2.0, 3.0)

    def test_step_and_relu(self):
        assert Arithmetic.step(Interval(0.5, 2.0)) == Interval.point(1.0)
        assert Arithmetic.step(Interval(-1.0, 0.0)) == Interval.point(0.0)
        assert Arithmetic.relu(Interval(-1.0, 2.0)) == Interval(0.0, 2.0)

    def test_exp_is_bounded_below(self):
        out = Arithmetic.exp(Interval.top())
        assert out.lo == 0.0 and out.hi > 1e300
        assert not out.positive()

    def test_predicates(self):
        assert Interval(1.0, 2.0).positive()
        assert Interval(-2.0, -1.0).excludes_zero()
        assert not Interval(-1.0, 1.0).excludes_zero()

    def test_env_join_and_widen(self):
        a = {"x": Interval(0.0, 1.0), "y": Interval.point(2.0)}
        b = {"x": Interval(1.0, 2.0)}
        assert join_envs(a, b) == {"x": Interval(0.0, 2.0)}
        assert widen_envs(a, {"x": Interval(0.0, 5.0), "y": Interval.point(2.0)}) == {
            "x": Interval(0.0, INF),
            "y": Interval.point(2.0),
        }


class TestPreAnalysis:
    """Test cases for pre_analyze."""

    def test_expression_interval(self):
        e = parse_program("z := exp(x) + 1").expr
        assert interval_of(e, {}).lo == 1.0
        assert interval_of(e, {}).positive()
        assert interval_of(e, {"x": Interval.point(0.0)}) == Interval.point(2.0)

    def test_program_variables_start_at_zero(self):
        result = pre_analyze(parse_program("y := x + 1"))
        assert result.exit["y"] == Interval.point(1.0)

    def test_parameters_are_unconstrained(self):
        result = pre_analyze(parse_program("y := x + 1"), params=["x"])
        assert result.exit["y"].is_top

    def test_points_are_recorded_before_each_command(self):
        result = pre_analyze(parse_program("y := exp(x) + 1; z := log(y)"), params=["x"])
        assert result.at((1,))["y"].lo == 1.0
        assert result.at((0,))["x"].is_top

    def test_branches_join(self):
        c = parse_program("if x < 0 { s := -1 } else { s := 1 }")
        result = pre_analyze(c, params=["x"])
        assert result.exit["s"] == Interval(-1.0, 1.0)

    def test_loop_widens(self):
        c = parse_program("i := 0; while i < 3 { i := i + 1 }")
        result = pre_analyze(c)
        assert result.exit["i"] == Interval(0.0, INF)

    def test_top_mode(self):
        result = pre_analyze(parse_program("y := x + 1"), mode="top")
        assert result.exit["y"].is_top

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            pre_analyze(parse_program("skip"), mode="bogus")
