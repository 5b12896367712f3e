"""
Abstract syntax, parser and pretty-printer for the probabilistic language.

Grammar (surface)::

    command ::= stmt (';' stmt)* [';']
    stmt    ::= skip | x := e | x := sam(n, d, λy. e) | obs(d, r)
              | if b { command } [else { command }] | while b { command }
              | { command }
    n       ::= name("α", e) | "α" | α
    d       ::= N(e, e) | U(e, e)
    b       ::= true | false | e < e | e > e | e <= e | e >= e
              | b && b | !b | (b)
    e       ::= r | x | op(e, ...) | e + e | e - e | e * e | e / e | -e | (e)
              | like | rv("α", i) | pr("α", i) | val("α", i) | cnt("α", i)

Comments start with ``//``. A leading ``#params: a, b`` line declares the
parameter variables θ.
"""

import itertools
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

from .errors import ProgramSyntaxError
from .operators import DIST_KEYWORDS, DISTRIBUTIONS, INFIX, OPERATORS

DEFAULT_NAME_BOUND = 16


# ---------------------------------------------------------------------------
# Variables
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Name:
    """A random-variable name (α, i)."""

    string: str
    index: int

    def __str__(self) -> str:
        return f"{self.string}[{self.index}]"


@dataclass(frozen=True)
class PVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class RName:
    name: Name

    def __str__(self) -> str:
        return str(self.name)


@dataclass(frozen=True)
class Like:
    def __str__(self) -> str:
        return "like"


@dataclass(frozen=True)
class Pr:
    name: Name

    def __str__(self) -> str:
        return f"pr({self.name})"


@dataclass(frozen=True)
class Val:
    name: Name

    def __str__(self) -> str:
        return f"val({self.name})"


@dataclass(frozen=True)
class Cnt:
    name: Name

    def __str__(self) -> str:
        return f"cnt({self.name})"


Var = Union[PVar, RName, Like, Pr, Val, Cnt]
LIKE = Like()
_NAME_VARS = {"rv": RName, "pr": Pr, "val": Val, "cnt": Cnt}


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

_binder_ids = itertools.count()


@dataclass(frozen=True)
class Binder:
    """A lambda binder; identity is the id, the hint is only for printing."""

    id: int
    hint: str = field(default="y", compare=False)

    @classmethod
    def fresh(cls, hint: str = "y") -> "Binder":
        return cls(next(_binder_ids), hint)


@dataclass(frozen=True)
class Const:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"constants must be finite, got {self.value!r}")


@dataclass(frozen=True)
class VarRef:
    var: Var


@dataclass(frozen=True)
class BinderRef:
    binder: Binder


@dataclass(frozen=True)
class Op:
    op: str
    args: Tuple["Expr", ...]


Expr = Union[Const, VarRef, BinderRef, Op]


@dataclass(frozen=True)
class BTrue:
    pass


@dataclass(frozen=True)
class Less:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class And:
    left: "BoolExpr"
    right: "BoolExpr"


@dataclass(frozen=True)
class Not:
    operand: "BoolExpr"


BoolExpr = Union[BTrue, Less, And, Not]


@dataclass(frozen=True)
class NameExpr:
    string: str
    index: Expr


@dataclass(frozen=True)
class Dist:
    kind: str
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class Lambda:
    binder: Binder
    body: Expr


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr


@dataclass(frozen=True)
class Seq:
    first: "Command"
    second: "Command"


@dataclass(frozen=True)
class If:
    cond: BoolExpr
    then: "Command"
    orelse: "Command"


@dataclass(frozen=True)
class While:
    cond: BoolExpr
    body: "Command"


@dataclass(frozen=True)
class Sample:
    target: str
    name: NameExpr
    dist: Dist
    lam: Lambda


@dataclass(frozen=True)
class Observe:
    dist: Dist
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"observed values must be finite, got {self.value!r}")


Command = Union[Skip, Assign, Seq, If, While, Sample, Observe]


def const(value: float) -> Const:
    return Const(float(value))


def var(name: str) -> VarRef:
    return VarRef(PVar(name))


def seq(*commands: Command) -> Command:
    """Right-nested sequence of the given commands."""
    if not commands:
        return Skip()
    result = commands[-1]
    for c in reversed(commands[:-1]):
        result = Seq(c, result)
    return result


def identity_lambda() -> Lambda:
    binder = Binder.fresh()
    return Lambda(binder, BinderRef(binder))


@dataclass(frozen=True)
class Program:
    """
    A parsed program file.

    Attributes:
        command (Command): Program body
        params (tuple): Declared parameter variables θ, in header order
        source (Optional[str]): Where the program was loaded from
    """

    command: Command
    params: Tuple[str, ...] = ()
    source: Optional[str] = field(default=None, compare=False)


# ---------------------------------------------------------------------------
# Traversals
# ---------------------------------------------------------------------------


def subcommands(c: Command) -> Iterator[Command]:
    """Pre-order traversal of all commands in ``c``."""
    stack = [c]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Seq):
            stack.extend((node.second, node.first))
        elif isinstance(node, If):
            stack.extend((node.orelse, node.then))
        elif isinstance(node, While):
            stack.append(node.body)


def _bool_exprs(b: BoolExpr) -> Iterator[Expr]:
    if isinstance(b, Less):
        yield b.left
        yield b.right
    elif isinstance(b, And):
        yield from _bool_exprs(b.left)
        yield from _bool_exprs(b.right)
    elif isinstance(b, Not):
        yield from _bool_exprs(b.operand)


def expressions(c: Command) -> Iterator[Expr]:
    """Every top-level expression occurring in ``c``, lambda bodies included."""
    for node in subcommands(c):
        if isinstance(node, Assign):
            yield node.expr
        elif isinstance(node, (If, While)):
            yield from _bool_exprs(node.cond)
        elif isinstance(node, Sample):
            yield node.name.index
            yield from node.dist.args
            yield node.lam.body
        elif isinstance(node, Observe):
            yield from node.dist.args


def fv(e: Union[Expr, BoolExpr, NameExpr, Dist]) -> FrozenSet[Var]:
    """Free variables of an expression; lambda binders are not variables."""
    out: set = set()
    _collect_fv(e, out)
    return frozenset(out)


def _collect_fv(e, out: set) -> None:
    if isinstance(e, VarRef):
        out.add(e.var)
    elif isinstance(e, Op):
        for a in e.args:
            _collect_fv(a, out)
    elif isinstance(e, (Less, And)):
        _collect_fv(e.left, out)
        _collect_fv(e.right, out)
    elif isinstance(e, Not):
        _collect_fv(e.operand, out)
    elif isinstance(e, NameExpr):
        _collect_fv(e.index, out)
    elif isinstance(e, Dist):
        for a in e.args:
            _collect_fv(a, out)


def subst_lambda(e: Expr, y: Binder, replacement: Expr) -> Expr:
    """Replace every occurrence of binder ``y`` in ``e``."""
    if isinstance(e, BinderRef):
        return replacement if e.binder == y else e
    if isinstance(e, Op):
        return Op(e.op, tuple(subst_lambda(a, y, replacement) for a in e.args))
    return e


def apply_lambda(lam: Lambda, argument: Expr) -> Expr:
    return subst_lambda(lam.body, lam.binder, argument)


def has_observe(c: Command) -> bool:
    return any(isinstance(node, Observe) for node in subcommands(c))


def is_constant(e: Expr) -> bool:
    return not fv(e) and not any(isinstance(x, BinderRef) for x in _walk_expr(e))


def _walk_expr(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Op):
        for a in e.args:
            yield from _walk_expr(a)


def canonical(c: Command) -> Command:
    """Renumber binders in order of appearance so alpha-equivalent ASTs compare equal."""
    counter = itertools.count()

    def rename(node: Command) -> Command:
        if isinstance(node, Seq):
            return Seq(rename(node.first), rename(node.second))
        if isinstance(node, If):
            return If(node.cond, rename(node.then), rename(node.orelse))
        if isinstance(node, While):
            return While(node.cond, rename(node.body))
        if isinstance(node, Sample):
            binder = Binder(next(counter), node.lam.binder.hint)
            body = subst_lambda(node.lam.body, node.lam.binder, BinderRef(binder))
            return Sample(node.target, node.name, node.dist, Lambda(binder, body))
        return node

    return rename(c)


# ---------------------------------------------------------------------------
# Variable universe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Universe:
    """
    The finite set of variables a state is defined on.

    Variables are interned in a fixed order: ``like``, the program variables
    (sorted), then for every name string (sorted) and index the four
    variables (α,i), pr, val and cnt.

    Attributes:
        pvars (tuple): Program variable names
        strings (tuple): Name strings
        name_bound (int): Number of indices per name string
    """

    pvars: Tuple[str, ...]
    strings: Tuple[str, ...]
    name_bound: int = DEFAULT_NAME_BOUND

    def __post_init__(self):
        if self.name_bound < 1:
            raise ValueError(f"name bound must be positive, got {self.name_bound}")

    @classmethod
    def of(
        cls,
        *commands: Command,
        params: Sequence[str] = (),
        name_bound: int = DEFAULT_NAME_BOUND,
    ) -> "Universe":
        """Smallest universe covering the given programs and parameters."""
        pvars = set(params)
        strings = set()
        for c in commands:
            for node in subcommands(c):
                if isinstance(node, (Assign, Sample)):
                    pvars.add(node.target)
                if isinstance(node, Sample):
                    strings.add(node.name.string)
            for e in expressions(c):
                for v in fv(e):
                    if isinstance(v, PVar):
                        pvars.add(v.name)
                    elif not isinstance(v, Like):
                        strings.add(v.name.string)
        return cls(tuple(sorted(pvars)), tuple(sorted(strings)), name_bound)

    @cached_property
    def variables(self) -> Tuple[Var, ...]:
        out: List[Var] = [LIKE]
        out.extend(PVar(x) for x in self.pvars)
        for name in self.names:
            out.extend((RName(name), Pr(name), Val(name), Cnt(name)))
        return tuple(out)

    @cached_property
    def names(self) -> Tuple[Name, ...]:
        return tuple(Name(s, i) for s in self.strings for i in range(self.name_bound))

    @cached_property
    def _index(self) -> Dict[Var, int]:
        return {v: i for i, v in enumerate(self.variables)}

    @property
    def size(self) -> int:
        return len(self.variables)

    def index(self, v: Var) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise KeyError(f"variable {v} is not in the universe") from None

    def __contains__(self, v: Var) -> bool:
        return v in self._index

    def names_of(self, string: str) -> Tuple[Name, ...]:
        return tuple(Name(string, i) for i in range(self.name_bound))

    def clamp_name(self, string: str, raw: float) -> Name:
        """create_name: clamp ``floor(raw)`` into [0, N)."""
        if math.isnan(raw):
            raw = 0.0
        clamped = min(max(raw, 0.0), float(self.name_bound - 1))
        return Name(string, int(math.floor(clamped)))

    def bits(self, variables) -> int:
        mask = 0
        for v in variables:
            mask |= 1 << self._index[v]
        return mask

    def unbits(self, mask: int) -> List[Var]:
        out = []
        while mask:
            low = mask & -mask
            out.append(self.variables[low.bit_length() - 1])
            mask ^= low
        return out

    @cached_property
    def full(self) -> int:
        return (1 << self.size) - 1


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*|\#[^\n]*)
  | (?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<string>"[^"\n]*")
  | (?P<lam>λ|\\)
  | (?P<ident>[^\W\d]\w*)
  | (?P<sym>:=|<=|>=|&&|[-+*/<>(){},;.!×∧¬])
    """,
    re.VERBOSE,
)

_SYMBOL_ALIASES = {"×": "*", "∧": "&&", "¬": "!"}

KEYWORDS = frozenset(
    {"skip", "if", "else", "while", "sam", "obs", "name", "true", "false", "like",
     "lambda"}
    | set(DIST_KEYWORDS)
    | set(_NAME_VARS)
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ProgramSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "sym":
            tokens.append(Token("sym", _SYMBOL_ALIASES.get(m.group(), m.group()), line, col))
        elif kind == "lam":
            tokens.append(Token("sym", "λ", line, col))
        elif kind == "ident" and m.group() == "lambda":
            tokens.append(Token("sym", "λ", line, col))
        elif kind in ("number", "string", "ident"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    """Recursive-descent parser over a token list."""

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.binder: Optional[Tuple[str, Binder]] = None

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, *expected: str) -> ProgramSyntaxError:
        t = self.tok
        found = t.text if t.kind != "eof" else "end of input"
        return ProgramSyntaxError(f"{message}, found {found!r}", t.line, t.col, expected)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "ident") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error("unexpected token", repr(text))
        t = self.tok
        self.pos += 1
        return t

    def expect_kind(self, kind: str) -> Token:
        if self.tok.kind != kind:
            raise self.error("unexpected token", kind)
        t = self.tok
        self.pos += 1
        return t

    def identifier(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            raise self.error("expected a variable", "identifier")
        self.pos += 1
        return t.text

    # -- commands ----------------------------------------------------------

    def program(self) -> Command:
        c = self.command()
        if self.tok.kind != "eof":
            raise self.error("unexpected trailing input", "';'", "end of input")
        return c

    def command(self) -> Command:
        stmts = [self.statement()]
        while self.accept(";"):
            if self.tok.kind == "eof" or self.at("}"):
                break
            stmts.append(self.statement())
        return seq(*stmts)

    def block(self) -> Command:
        self.expect("{")
        c = self.command()
        self.expect("}")
        return c

    def statement(self) -> Command:
        if self.accept("skip"):
            return Skip()
        if self.at("{"):
            return self.block()
        if self.accept("if"):
            cond = self.bool_expr()
            then = self.block()
            orelse = self.block() if self.accept("else") else Skip()
            return If(cond, then, orelse)
        if self.accept("while"):
            cond = self.bool_expr()
            return While(cond, self.block())
        if self.accept("obs"):
            self.expect("(")
            d = self.dist()
            self.expect(",")
            value = self.signed_number()
            self.expect(")")
            return Observe(d, value)
        if self.tok.kind == "ident" and self.tok.text not in KEYWORDS:
            target = self.identifier()
            self.expect(":=")
            if self.accept("sam"):
                return self.sample(target)
            return Assign(target, self.expr())
        raise self.error(
            "expected a command", "skip", "if", "while", "obs", "assignment", "'{'"
        )

    def sample(self, target: str) -> Sample:
        self.expect("(")
        n = self.name_expr()
        self.expect(",")
        d = self.dist()
        self.expect(",")
        lam = self.lambda_expr()
        self.expect(")")
        return Sample(target, n, d, lam)

    def name_expr(self) -> NameExpr:
        t = self.tok
        if self.accept("name"):
            self.expect("(")
            string = self.string()
            self.expect(",")
            index = self.expr()
            self.expect(")")
            return NameExpr(string, index)
        if t.kind == "string":
            return NameExpr(self.string(), Const(0.0))
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.pos += 1
            return NameExpr(t.text, Const(0.0))
        raise self.error("expected a name expression", "name(...)", "string")

    def string(self) -> str:
        return self.expect_kind("string").text[1:-1]

    def dist(self) -> Dist:
        t = self.tok
        if t.kind != "ident" or t.text not in DIST_KEYWORDS:
            raise self.error("expected a distribution", *sorted(DIST_KEYWORDS))
        desc = DIST_KEYWORDS[t.text]
        self.pos += 1
        args = self.call_args()
        if len(args) != desc.arity:
            raise ProgramSyntaxError(
                f"{t.text} takes {desc.arity} arguments, got {len(args)}", t.line, t.col
            )
        return Dist(desc.kind, tuple(args))

    def lambda_expr(self) -> Lambda:
        if not self.accept("λ"):
            raise self.error("expected a lambda", "λy. e")
        hint = self.identifier()
        self.expect(".")
        binder = Binder.fresh(hint)
        saved, self.binder = self.binder, (hint, binder)
        try:
            body = self.expr()
        finally:
            self.binder = saved
        return Lambda(binder, body)

    def number(self) -> float:
        t = self.expect_kind("number")
        value = float(t.text)
        if not math.isfinite(value):
            raise ProgramSyntaxError(f"number {t.text!r} is out of range", t.line, t.col, ("finite number",))
        return value

    def signed_number(self) -> float:
        sign = -1.0 if self.accept("-") else 1.0
        return sign * self.number()

    # -- boolean expressions ----------------------------------------------

    def bool_expr(self) -> BoolExpr:
        b = self.bool_unary()
        while self.accept("&&"):
            b = And(b, self.bool_unary())
        return b

    def bool_unary(self) -> BoolExpr:
        if self.accept("!"):
            return Not(self.bool_unary())
        if self.accept("true"):
            return BTrue()
        if self.accept("false"):
            return Not(BTrue())
        if self.at("("):
            start = self.pos
            try:
                self.pos += 1
                b = self.bool_expr()
                self.expect(")")
                return b
            except ProgramSyntaxError:
                self.pos = start
        left = self.expr()
        t = self.tok
        if self.accept("<"):
            return Less(left, self.expr())
        if self.accept(">"):
            return Less(self.expr(), left)
        if self.accept("<="):
            return Not(Less(self.expr(), left))
        if self.accept(">="):
            return Not(Less(left, self.expr()))
        raise ProgramSyntaxError(
            f"expected a comparison, found {t.text or 'end of input'!r}",
            t.line,
            t.col,
            ("'<'", "'>'", "'<='", "'>='"),
        )

    # -- real expressions ---------------------------------------------------

    def expr(self) -> Expr:
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.pos += 1
            e = Op(op, (e, self.term()))
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.at("*") or self.at("/"):
            op = self.tok.text
            self.pos += 1
            e = Op(op, (e, self.unary()))
        return e

    def unary(self) -> Expr:
        if self.accept("-"):
            if self.tok.kind == "number":
                return Const(-self.number())
            return Op("-", (Const(0.0), self.unary()))
        return self.atom()

    def call_args(self) -> List[Expr]:
        self.expect("(")
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        self.expect(")")
        return args

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "number":
            return Const(self.number())
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind != "ident":
            raise self.error("expected an expression", "number", "variable", "'('")
        if self.accept("like"):
            return VarRef(LIKE)
        if t.text in _NAME_VARS:
            self.pos += 1
            self.expect("(")
            string = self.string()
            self.expect(",")
            index = self.signed_number()
            self.expect(")")
            if index != int(index) or index < 0:
                raise ProgramSyntaxError("name index must be a natural number", t.line, t.col)
            return VarRef(_NAME_VARS[t.text](Name(string, int(index))))
        if t.text in OPERATORS and self.tokens[self.pos + 1].text == "(":
            self.pos += 1
            args = self.call_args()
            arity = OPERATORS[t.text].arity
            if len(args) != arity:
                raise ProgramSyntaxError(
                    f"{t.text} takes {arity} arguments, got {len(args)}", t.line, t.col
                )
            return Op(t.text, tuple(args))
        name = self.identifier()
        if self.tokens[self.pos].text == "(" and self.tokens[self.pos].kind == "sym":
            raise ProgramSyntaxError(f"unknown operator {name!r}", t.line, t.col)
        if self.binder is not None and self.binder[0] == name:
            return BinderRef(self.binder[1])
        return VarRef(PVar(name))


def parse_program(text: str) -> Command:
    """
    Parse program text into a command.

    Args:
        text (str): Program in the surface grammar

    Returns:
        Command: The parsed AST

    Raises:
        ProgramSyntaxError: On invalid input, with line and column
    """
    return _Parser(text).program()


_PARAMS_RE = re.compile(r"^\s*#\s*params\s*:(.*)$", re.MULTILINE)


def parse_source(text: str, source: Optional[str] = None) -> Program:
    """Parse a program file, honouring the ``#params:`` header."""
    params: List[str] = []
    for m in _PARAMS_RE.finditer(text):
        params.extend(p.strip() for p in m.group(1).split(",") if p.strip())
    return Program(parse_program(text), tuple(dict.fromkeys(params)), source)


def load_program(path: Union[str, Path]) -> Program:
    path = Path(path)
    return parse_source(path.read_text(encoding="utf-8"), str(path))


def example_program(name: str) -> Program:
    """Load one of the programs shipped with the package."""
    ref = resources.files("smoothppl") / "programs" / f"{name}.ppl"
    return parse_source(ref.read_text(encoding="utf-8"), f"<{name}>")


# ---------------------------------------------------------------------------
# Pretty-printer
# ---------------------------------------------------------------------------


def format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _pexpr(e: Expr, binder_names: Dict[Binder, str]) -> Tuple[str, int]:
    if isinstance(e, Const):
        return format_number(e.value), 3
    if isinstance(e, BinderRef):
        return binder_names.get(e.binder, e.binder.hint), 3
    if isinstance(e, VarRef):
        v = e.var
        if isinstance(v, PVar):
            return v.name, 3
        if isinstance(v, Like):
            return "like", 3
        kw = next(k for k, cls in _NAME_VARS.items() if isinstance(v, cls))
        return f'{kw}("{v.name.string}", {v.name.index})', 3
    prec = INFIX.get(e.op)
    if prec is not None and len(e.args) == 2:
        left, lp = _pexpr(e.args[0], binder_names)
        right, rp = _pexpr(e.args[1], binder_names)
        if lp < prec:
            left = f"({left})"
        if rp <= prec:
            right = f"({right})"
        return f"{left} {e.op} {right}", prec
    args = ", ".join(_pexpr(a, binder_names)[0] for a in e.args)
    return f"{e.op}({args})", 3


def pretty_expr(e: Expr) -> str:
    return _pexpr(e, {})[0]


def _pbool(b: BoolExpr, names: Dict[Binder, str]) -> str:
    if isinstance(b, BTrue):
        return "true"
    if isinstance(b, Less):
        return f"{_pexpr(b.left, names)[0]} < {_pexpr(b.right, names)[0]}"
    if isinstance(b, And):
        right = _pbool(b.right, names)
        if isinstance(b.right, And):
            right = f"({right})"
        return f"{_pbool(b.left, names)} && {right}"
    inner = _pbool(b.operand, names)
    if isinstance(b.operand, (Less, And)):
        inner = f"({inner})"
    return f"!{inner}"


def _pdist(d: Dist, names: Dict[Binder, str]) -> str:
    keyword = DISTRIBUTIONS[d.kind].keyword
    return f"{keyword}({', '.join(_pexpr(a, names)[0] for a in d.args)})"


def _binder_name(lam: Lambda) -> str:
    taken = {v.name for v in fv(lam.body) if isinstance(v, PVar)}
    base = lam.binder.hint if lam.binder.hint not in KEYWORDS else "y"
    candidate, suffix = base, 0
    while candidate in taken or candidate in KEYWORDS or candidate in OPERATORS:
        suffix += 1
        candidate = f"{base}{suffix}"
    return candidate


def _pcommand(c: Command, indent: int) -> List[str]:
    pad = "  " * indent
    if isinstance(c, Skip):
        return [pad + "skip"]
    if isinstance(c, Assign):
        return [f"{pad}{c.target} := {pretty_expr(c.expr)}"]
    if isinstance(c, Sample):
        y = _binder_name(c.lam)
        names = {c.lam.binder: y}
        n = f'name("{c.name.string}", {pretty_expr(c.name.index)})'
        body = _pexpr(c.lam.body, names)[0]
        return [f"{pad}{c.target} := sam({n}, {_pdist(c.dist, names)}, λ{y}. {body})"]
    if isinstance(c, Observe):
        return [f"{pad}obs({_pdist(c.dist, {})}, {format_number(c.value)})"]
    if isinstance(c, Seq):
        if isinstance(c.first, Seq):
            first = [pad + "{"] + _pcommand(c.first, indent + 1) + [pad + "}"]
        else:
            first = _pcommand(c.first, indent)
        first[-1] += ";"
        return first + _pcommand(c.second, indent)
    if isinstance(c, If):
        return (
            [f"{pad}if {_pbool(c.cond, {})} {{"]
            + _pcommand(c.then, indent + 1)
            + [pad + "} else {"]
            + _pcommand(c.orelse, indent + 1)
            + [pad + "}"]
        )
    if isinstance(c, While):
        return (
            [f"{pad}while {_pbool(c.cond, {})} {{"]
            + _pcommand(c.body, indent + 1)
            + [pad + "}"]
        )
    raise TypeError(f"not a command: {c!r}")


def pretty(c: Command) -> str:
    """Render a command in the surface grammar."""
    return "\n".join(_pcommand(c, 0))


def pretty_program(program: Program) -> str:
    header = f"#params: {', '.join(program.params)}\n" if program.params else ""
    return header + pretty(program.command) + "\n"
