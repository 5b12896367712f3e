"""
Tests for the parser, pretty-printer and variable universe.
"""

import math

import pytest

from smoothppl.errors import ProgramSyntaxError
from smoothppl.syntax import (
    LIKE,
    Assign,
    Binder,
    BinderRef,
    Const,
    Dist,
    If,
    Lambda,
    Less,
    Name,
    NameExpr,
    Observe,
    Op,
    PVar,
    RName,
    Sample,
    Seq,
    Skip,
    Universe,
    VarRef,
    canonical,
    example_program,
    fv,
    has_observe,
    parse_program,
    parse_source,
    pretty,
    pretty_program,
    seq,
)

BUNDLED = [
    "sign_model",
    "sign_guide",
    "branch_example",
    "step_composition",
    "ratio_composition",
    "relu_guide",
    "gauss_model",
    "gauss_guide",
]


class TestParser:
    """Test cases for parse_program and parse_source."""

    def test_params_header(self, sign_guide):
        """Test that the #params header declares the parameters in order."""
        assert sign_guide.params == ("θ1", "θ2")
        assert isinstance(sign_guide.command, Seq)
        assert isinstance(sign_guide.command.first, Sample)

    def test_program_without_header_has_no_params(self, sign_model):
        assert sign_model.params == ()
        assert has_observe(sign_model.command)

    def test_sample_shorthand_name(self):
        """Test that a bare string stands for index 0."""
        c = parse_program('x := sam("a", N(0, 1), λy. y)')
        assert c.name == NameExpr("a", Const(0.0))
        assert c.lam.body == BinderRef(c.lam.binder)

    def test_lambda_spellings(self):
        """Test the backslash and keyword spellings of lambda."""
        a = parse_program("x := sam(a, N(0, 1), \\y. y + 1)")
        b = parse_program("x := sam(a, N(0, 1), lambda y. y + 1)")
        assert canonical(a) == canonical(b)

    def test_greater_than_desugars(self):
        c = parse_program("if x > 0 { skip }")
        assert c == If(Less(Const(0.0), VarRef(PVar("x"))), Skip(), Skip())

    def test_precedence(self):
        c = parse_program("x := 1 + 2 * y")
        assert c == Assign("x", Op("+", (Const(1.0), Op("*", (Const(2.0), VarRef(PVar("y")))))))

    def test_comments_are_ignored(self):
        c = parse_program("// leading comment\nx := 1 // trailing\n")
        assert c == Assign("x", Const(1.0))

    def test_parse_source_collects_params(self):
        program = parse_source("#params: a, b\n#params: b, c\nx := a")
        assert program.params == ("a", "b", "c")

    def test_error_position(self):
        """Test that syntax errors carry line and column."""
        with pytest.raises(ProgramSyntaxError) as info:
            parse_program("x := ;")
        assert (info.value.line, info.value.col) == (1, 6)

    def test_error_position_second_line(self):
        with pytest.raises(ProgramSyntaxError) as info:
            parse_program("x := 1;\ny := (2")
        assert info.value.line == 2
        assert info.value.col == 8
        assert "')'" in info.value.expected

    @pytest.mark.parametrize(
        "text",
        [
            "x := foo(1)",
            "x := exp(1, 2)",
            'x := rv("a", -1)',
            "x := sam(a, N(0, 1), 3)",
            "x := sam(a, N(0), λy. y)",
            "if x { skip }",
            "x := 1 x := 2",
            "x := 1 @ 2",
        ],
    )
    def test_rejects_invalid_programs(self, text):
        with pytest.raises(ProgramSyntaxError):
            parse_program(text)


class TestPrettyPrinter:
    """Test cases for pretty."""

    @pytest.mark.parametrize("name", BUNDLED)
    def test_bundled_programs_reparse(self, name):
        """Test that printing and parsing give back the same AST."""
        program = example_program(name)
        again = parse_source(pretty_program(program))
        assert canonical(again.command) == canonical(program.command)
        assert again.params == program.params

    def test_guide_text(self, sign_guide):
        text = pretty(sign_guide.command)
        assert 'x1 := sam(name("z1", 0), N(θ1, 1), λy. y);' in text
        assert 'x2 := sam(name("z2", 0), N(θ2, 1), λy. y)' in text

    def test_binder_renamed_away_from_program_variables(self):
        binder = Binder.fresh("y")
        body = Op("+", (BinderRef(binder), VarRef(PVar("y"))))
        c = Sample("x", NameExpr("a", Const(0.0)), Dist("normal", (Const(0.0), Const(1.0))), Lambda(binder, body))
        text = pretty(c)
        assert "λy1. y1 + y" in text
        assert canonical(parse_program(text)) == canonical(c)

    def test_nested_sequence_keeps_grouping(self):
        c = Seq(Seq(Assign("a", Const(1.0)), Assign("b", Const(2.0))), Assign("c", Const(3.0)))
        assert parse_program(pretty(c)) == c

    @pytest.mark.parametrize("value", [1e-300, 1.5e300, -0.1, 2.0**60, 123456789012345678.0])
    def test_extreme_constants_reparse(self, value):
        c = Seq(Assign("a", Const(value)), Observe(Dist("normal", (Const(0.0), Const(1.0))), value))
        assert parse_program(pretty(c)) == c

    @pytest.mark.parametrize("value", [math.inf, -math.inf, math.nan])
    def test_non_finite_constants_are_rejected(self, value):
        with pytest.raises(ValueError):
            Const(value)
        with pytest.raises(ValueError):
            Observe(Dist("normal", (Const(0.0), Const(1.0))), value)

    @pytest.mark.parametrize("text", ["x := 1e999", "x := -1e999", "obs(N(0, 1), 1e999)"])
    def test_overflowing_literals_are_syntax_errors(self, text):
        with pytest.raises(ProgramSyntaxError, match="out of range"):
            parse_program(text)


class TestTraversals:
    """Test cases for AST helpers."""

    def test_seq_of_nothing_is_skip(self):
        assert seq() == Skip()

    def test_free_variables_exclude_binders(self):
        binder = Binder.fresh()
        e = Op("+", (BinderRef(binder), VarRef(PVar("x"))))
        assert fv(e) == frozenset({PVar("x")})

    def test_canonical_identifies_alpha_equivalent_programs(self):
        a = parse_program("x := sam(a, N(0, 1), λy. y * 2)")
        b = parse_program("x := sam(a, N(0, 1), λz. z * 2)")
        assert a != b
        assert canonical(a) == canonical(b)


class TestUniverse:
    """Test cases for Universe."""

    def test_interning_order(self, sign_model):
        universe = Universe.of(sign_model.command, name_bound=2)
        assert universe.pvars == ("x1", "x2")
        assert universe.strings == ("z1", "z2")
        assert universe.size == 1 + 2 + 2 * 2 * 4
        assert universe.variables[0] == LIKE
        assert universe.variables[3] == RName(Name("z1", 0))

    def test_params_are_included(self, sign_guide):
        universe = Universe.of(sign_guide.command, params=sign_guide.params)
        assert "θ1" in universe.pvars and "θ2" in universe.pvars

    @pytest.mark.parametrize(
        "raw,index",
        [(-3.5, 0), (0.0, 0), (1.7, 1), (99.0, 3), (math.nan, 0), (math.inf, 3)],
    )
    def test_clamp_name(self, raw, index):
        universe = Universe(("x",), ("a",), name_bound=4)
        assert universe.clamp_name("a", raw) == Name("a", index)

    def test_bits_round_trip(self, sign_model):
        universe = Universe.of(sign_model.command, name_bound=1)
        chosen = [PVar("x2"), RName(Name("z1", 0))]
        assert set(universe.unbits(universe.bits(chosen))) == set(chosen)
        assert universe.unbits(universe.full) == list(universe.variables)

    def test_unknown_variable(self):
        universe = Universe(("x",), ())
        with pytest.raises(KeyError):
            universe.index(PVar("nope"))

    def test_name_bound_must_be_positive(self):
        with pytest.raises(ValueError):
            Universe(("x",), ("a",), name_bound=0)
