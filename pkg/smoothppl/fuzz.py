"""
Seeded random program generator.

Generated programs always terminate: every loop is a counted loop over a
fresh counter variable that the body never assigns.
"""

import itertools
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .operators import OPERATORS
from .syntax import (
    And,
    Assign,
    BinderRef,
    Binder,
    BoolExpr,
    BTrue,
    Command,
    Const,
    Dist,
    Expr,
    If,
    Lambda,
    Less,
    Name,
    NameExpr,
    Not,
    Observe,
    Op,
    PVar,
    RName,
    Sample,
    Skip,
    VarRef,
    While,
    seq,
)
from .utils import make_rng

_LEAF_OPS = ("+", "-", "*", "/", "exp", "log", "sqrt", "relu", "floor", "step", "xy_ratio")


@dataclass(frozen=True)
class FuzzConfig:
    """
    Shape of generated programs.

    Attributes:
        pvars (tuple): Program variables the generator may use
        strings (tuple): Name strings
        max_depth (int): Nesting depth of commands
        max_block (int): Commands per block
        max_expr_depth (int): Nesting depth of expressions
        loops (bool): Whether to generate counted loops
        observe (bool): Whether to generate observe commands
        loop_bound (int): Maximum iterations of a counted loop
        index_bound (int): Constant name indices are drawn from [0, index_bound)
    """

    pvars: Tuple[str, ...] = ("x", "y", "z")
    strings: Tuple[str, ...] = ("a", "b")
    max_depth: int = 2
    max_block: int = 4
    max_expr_depth: int = 2
    loops: bool = True
    observe: bool = True
    loop_bound: int = 3
    index_bound: int = 2


class ProgramGenerator:
    """Draws random commands from a seeded generator."""

    def __init__(self, rng: np.random.Generator, config: FuzzConfig = FuzzConfig()):
        self.rng = rng
        self.config = config
        self._counters = itertools.count()

    def choice(self, options):
        return options[int(self.rng.integers(len(options)))]

    def chance(self, p: float) -> bool:
        return bool(self.rng.random() < p)

    def constant(self) -> Const:
        return Const(float(np.round(self.rng.normal(0.0, 2.0), 2)))

    def leaf(self, binder: Optional[Binder] = None) -> Expr:
        roll = self.rng.random()
        if binder is not None and roll < 0.35:
            return BinderRef(binder)
        if roll < 0.55:
            return VarRef(PVar(self.choice(self.config.pvars)))
        if roll < 0.65:
            name = Name(self.choice(self.config.strings), int(self.rng.integers(self.config.index_bound)))
            return VarRef(RName(name))
        return self.constant()

    def expr(self, depth: Optional[int] = None, binder: Optional[Binder] = None) -> Expr:
        depth = self.config.max_expr_depth if depth is None else depth
        if depth <= 0 or self.chance(0.4):
            return self.leaf(binder)
        op = OPERATORS[self.choice(_LEAF_OPS)]
        return Op(op.name, tuple(self.expr(depth - 1, binder) for _ in range(op.arity)))

    def bool_expr(self) -> BoolExpr:
        roll = self.rng.random()
        if roll < 0.1:
            return BTrue()
        base = Less(self.expr(1), self.expr(1))
        if roll < 0.2:
            return Not(base)
        if roll < 0.3:
            return And(base, Less(self.expr(1), self.expr(1)))
        return base

    def dist(self) -> Dist:
        if self.chance(0.85):
            return Dist("normal", (self.expr(1), self.expr(1)))
        return Dist("uniform", (self.expr(1), self.expr(1)))

    def name_expr(self, counter: Optional[str]) -> NameExpr:
        string = self.choice(self.config.strings)
        if counter is not None and self.chance(0.6):
            return NameExpr(string, VarRef(PVar(counter)))
        if self.chance(0.2):
            return NameExpr(string, self.expr(1))
        return NameExpr(string, Const(float(self.rng.integers(self.config.index_bound))))

    def sample(self, counter: Optional[str]) -> Sample:
        binder = Binder.fresh()
        body = BinderRef(binder) if self.chance(0.5) else self.expr(2, binder)
        return Sample(self.choice(self.config.pvars), self.name_expr(counter), self.dist(), Lambda(binder, body))

    def atomic(self, counter: Optional[str]) -> Command:
        roll = self.rng.random()
        if roll < 0.45:
            return Assign(self.choice(self.config.pvars), self.expr())
        if roll < 0.8:
            return self.sample(counter)
        if roll < 0.9 and self.config.observe:
            return Observe(self.dist(), float(np.round(self.rng.normal(), 2)))
        return Skip()

    def command(self, depth: Optional[int] = None, counter: Optional[str] = None) -> Command:
        depth = self.config.max_depth if depth is None else depth
        count = int(self.rng.integers(1, self.config.max_block + 1))
        block: List[Command] = []
        for _ in range(count):
            roll = self.rng.random()
            if depth > 0 and roll < 0.2:
                block.append(If(self.bool_expr(), self.command(depth - 1, counter), self.command(depth - 1, counter)))
            elif depth > 0 and roll < 0.3 and self.config.loops:
                block.append(self.loop(depth - 1))
            else:
                block.append(self.atomic(counter))
        return seq(*block)

    def loop(self, depth: int) -> Command:
        counter = f"i{next(self._counters)}"
        bound = float(self.rng.integers(1, self.config.loop_bound + 1))
        body = self.command(depth, counter)
        step = Assign(counter, Op("+", (VarRef(PVar(counter)), Const(1.0))))
        return seq(
            Assign(counter, Const(0.0)),
            While(Less(VarRef(PVar(counter)), Const(bound)), seq(body, step)),
        )


def generate_program(seed: int, index: int = 0, config: FuzzConfig = FuzzConfig()) -> Command:
    """The ``index``-th program of the corpus for ``seed``."""
    return ProgramGenerator(make_rng(seed, "fuzz", str(index)), config).command()


def generate_corpus(count: int, seed: int = 0, config: FuzzConfig = FuzzConfig()) -> List[Command]:
    return [generate_program(seed, i, config) for i in range(count)]
