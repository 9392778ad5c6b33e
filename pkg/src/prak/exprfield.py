"""Scalar field expressions in the coordinates x0..x3.

A small arithmetic language: numbers, the variables ``x0``..``x3`` (plus
configurable aliases such as ``t`` and ``r``), the constant ``pi``, unary
minus, ``+ - * / ^`` and the functions ``sin cos tan cot exp ln sqrt``.
Trees are immutable; :func:`differentiate_expr` returns a new tree.

>>> e = parse_expression("x1^2 + 1")
>>> eval_expr(e, (0.0, 3.0, 0.0, 0.0))
10.0
>>> print(differentiate_expr(e, 1))
2*x1
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence, Union

__all__ = [
    "Token", "Num", "Var", "Const", "Neg", "BinOp", "Call", "Expr",
    "ExprError", "ExprSyntaxError", "UnknownIdentifierError",
    "UnknownFunctionError", "ExprDomainError",
    "ALIAS_SETS", "FUNCTIONS", "tokenize", "parse_expression", "to_string",
    "eval_expr", "differentiate_expr", "substitute", "num", "variables",
]

FUNCTIONS = ("sin", "cos", "tan", "cot", "exp", "ln", "sqrt")

ALIAS_SETS: dict[str, dict[str, int]] = {
    "cylindrical": {"t": 0, "r": 1, "phi": 2, "z": 3},
    "spherical": {"t": 0, "r": 1, "phi": 2, "theta": 3},
    "none": {},
}


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownIdentifierError(ExprSyntaxError):
    pass


class UnknownFunctionError(ExprSyntaxError):
    pass


class ExprDomainError(ExprError):
    """Raised when a subexpression is undefined at the evaluation point."""

    def __init__(self, message: str, subexpr: "Expr"):
        super().__init__(f"{message}: {to_string(subexpr)}")
        self.subexpr = subexpr


# --------------------------------------------------------------------------
# Tree nodes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Var:
    index: int

    def __post_init__(self):
        if self.index not in (0, 1, 2, 3):
            raise ValueError(f"variable index {self.index} outside 0..3")

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Const:
    name: str  # only "pi"

    @property
    def value(self) -> float:
        return math.pi

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Neg:
    arg: "Expr"

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op == "^" and not isinstance(self.right, Num):
            raise ValueError("exponent of '^' must be a number literal")

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"

    def __str__(self):
        return to_string(self)


Expr = Union[Num, Var, Const, Neg, BinOp, Call]


# --------------------------------------------------------------------------
# Lexer
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # number | identifier | operator | lparen | rparen | comma | end
    text: str
    position: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<identifier>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<operator>[-+*/^])
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
""", re.VERBOSE)


def tokenize(src: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(src)))
    return tokens


# --------------------------------------------------------------------------
# Parser (recursive descent)
#
#   expr    := term (('+'|'-') term)*
#   term    := unary (('*'|'/') unary)*
#   unary   := '-' unary | power
#   power   := primary ('^' exponent)?
#   exponent:= ['-'] NUMBER ('^' exponent)? | '(' exponent ')'
#   primary := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
# --------------------------------------------------------------------------

class _Parser:
    def __init__(self, src: str, aliases: Mapping[str, int]):
        self.tokens = tokenize(src)
        self.i = 0
        self.aliases = aliases

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.tok
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            got = tok.text or "end of input"
            raise ExprSyntaxError(f"expected {want!r}, got {got!r}", tok.position)
        return self.advance()

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise ExprSyntaxError("empty expression", 0)
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.position)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "operator" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "operator" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "operator" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.tok.kind == "operator" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, Num(self.exponent()))
        return base

    def exponent(self) -> float:
        tok = self.tok
        if tok.kind == "lparen":
            self.advance()
            value = self.exponent()
            self.expect("rparen")
        else:
            sign = 1.0
            if tok.kind == "operator" and tok.text == "-":
                self.advance()
                sign = -1.0
            if self.tok.kind != "number":
                raise ExprSyntaxError("exponent must be a number literal",
                                      self.tok.position)
            value = sign * float(self.advance().text)
        if self.tok.kind == "operator" and self.tok.text == "^":
            pos = self.advance().position
            try:
                value = math.pow(value, self.exponent())
            except (ValueError, OverflowError):
                raise ExprSyntaxError("invalid constant exponent", pos) from None
        return value

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "lparen":
            self.advance()
            node = self.expr()
            self.expect("rparen")
            return node
        if tok.kind == "identifier":
            self.advance()
            if self.tok.kind == "lparen":
                if tok.text not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {tok.text!r}",
                                               tok.position)
                self.advance()
                arg = self.expr()
                self.expect("rparen")
                return Call(tok.text, arg)
            return self.identifier(tok)
        got = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {got!r}", tok.position)

    def identifier(self, tok: Token) -> Expr:
        name = tok.text
        if name == "pi":
            return Const("pi")
        m = re.fullmatch(r"x([0-3])", name)
        if m:
            return Var(int(m.group(1)))
        if name in self.aliases:
            return Var(self.aliases[name])
        if name in FUNCTIONS:
            raise ExprSyntaxError(f"function {name!r} needs an argument", tok.position)
        raise UnknownIdentifierError(f"unknown identifier {name!r}", tok.position)


def parse_expression(src: str, aliases: Mapping[str, int] | str = "cylindrical") -> Expr:
    """Parse ``src`` into an expression tree.

    ``aliases`` is either a mapping from extra names to coordinate indices or
    the name of one of :data:`ALIAS_SETS`.
    """
    if isinstance(aliases, str):
        try:
            aliases = ALIAS_SETS[aliases]
        except KeyError:
            raise ValueError(f"unknown alias set {aliases!r}; "
                             f"choose from {sorted(ALIAS_SETS)}") from None
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(src, aliases).parse()


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_string(e: Expr) -> str:
    """Print ``e`` in the grammar :func:`parse_expression` reads."""
    if isinstance(e, Num):
        if e.value < 0:
            # only reachable in exponent position or for hand-built trees
            return "(" + _fmt_number(e.value) + ")"
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if _prec(e.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return "-" + inner
    if e.op == "^":
        base = to_string(e.left)
        if _prec(e.left) < _PREC["atom"]:
            base = f"({base})"
        return f"{base}^{_fmt_number(e.right.value)}"
    p = _PREC[e.op]
    left = to_string(e.left)
    if _prec(e.left) < p:
        left = f"({left})"
    right = to_string(e.right)
    # left-associative: a same-precedence right operand needs parentheses
    if _prec(e.right) <= p:
        right = f"({right})"
    if p == 1:
        return f"{left} {e.op} {right}"
    return f"{left}{e.op}{right}"


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------

def _cot(v: float) -> float:
    s = math.sin(v)
    if s == 0.0 or abs(s) < 1e-15 * max(1.0, abs(v)):
        raise ZeroDivisionError
    return math.cos(v) / s


_FUNC_IMPL = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "cot": _cot,
    "exp": math.exp, "ln": math.log, "sqrt": math.sqrt,
}


def eval_expr(e: Expr, x: Sequence[float]) -> float:
    """Evaluate ``e`` at the point ``x`` (four coordinates)."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(x[e.index])
    if isinstance(e, Const):
        return math.pi
    if isinstance(e, Neg):
        return -eval_expr(e.arg, x)
    if isinstance(e, Call):
        v = eval_expr(e.arg, x)
        if e.func == "ln" and v <= 0.0:
            raise ExprDomainError("ln of non-positive value", e)
        if e.func == "sqrt" and v < 0.0:
            raise ExprDomainError("sqrt of negative value", e)
        try:
            return _FUNC_IMPL[e.func](v)
        except ZeroDivisionError:
            raise ExprDomainError("cot at a multiple of pi", e) from None
        except (OverflowError, ValueError):
            raise ExprDomainError(f"{e.func} undefined or overflowed", e) from None
    a = eval_expr(e.left, x)
    if e.op == "^":
        try:
            return math.pow(a, e.right.value)
        except (ValueError, ZeroDivisionError):
            raise ExprDomainError("power undefined", e) from None
        except OverflowError:
            raise ExprDomainError("power overflowed", e) from None
    b = eval_expr(e.right, x)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if b == 0.0:
        raise ExprDomainError("division by zero", e)
    return a / b


# --------------------------------------------------------------------------
# Construction helpers with light simplification
# --------------------------------------------------------------------------

ZERO = Num(0.0)
ONE = Num(1.0)


def num(v: float) -> Expr:
    """Number node; negative values become ``Neg(Num(|v|))`` so the tree prints and reparses identically."""
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"non-finite literal {v}")
    return Neg(Num(-v)) if v < 0 else Num(v)


def _const_value(e: Expr) -> float | None:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg) and isinstance(e.arg, Num):
        return -e.arg.value
    return None


def neg(a: Expr) -> Expr:
    if isinstance(a, Neg):
        return a.arg
    if a == ZERO:
        return ZERO
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    ca, cb = _const_value(a), _const_value(b)
    if ca == 0.0:
        return b
    if cb == 0.0:
        return a
    if ca is not None and cb is not None:
        return num(ca + cb)
    if isinstance(b, Neg):
        return BinOp("-", a, b.arg)
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    ca, cb = _const_value(a), _const_value(b)
    if cb == 0.0:
        return a
    if ca == 0.0:
        return neg(b)
    if ca is not None and cb is not None:
        return num(ca - cb)
    if isinstance(b, Neg):
        return BinOp("+", a, b.arg)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    ca, cb = _const_value(a), _const_value(b)
    if ca == 0.0 or cb == 0.0:
        return ZERO
    if ca == 1.0:
        return b
    if cb == 1.0:
        return a
    if ca == -1.0:
        return neg(b)
    if cb == -1.0:
        return neg(a)
    if ca is not None and cb is not None:
        return num(ca * cb)
    if isinstance(a, Neg):
        return neg(mul(a.arg, b))
    if isinstance(b, Neg):
        return neg(mul(a, b.arg))
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    ca, cb = _const_value(a), _const_value(b)
    if ca == 0.0:
        return ZERO
    if cb == 1.0:
        return a
    if isinstance(a, Neg):
        return neg(div(a.arg, b))
    return BinOp("/", a, b)


def power(a: Expr, n: float) -> Expr:
    if n == 0.0:
        return ONE
    if n == 1.0:
        return a
    return BinOp("^", a, Num(float(n)))


def call(func: str, a: Expr) -> Expr:
    if func not in FUNCTIONS:
        raise ValueError(f"unknown function {func!r}")
    return Call(func, a)


# --------------------------------------------------------------------------
# Differentiation and substitution
# --------------------------------------------------------------------------

def differentiate_expr(e: Expr, axis: int) -> Expr:
    """Exact symbolic partial derivative of ``e`` along coordinate ``axis``."""
    if axis not in (0, 1, 2, 3):
        raise ValueError(f"axis {axis} outside 0..3")
    if isinstance(e, (Num, Const)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == axis else ZERO
    if isinstance(e, Neg):
        return neg(differentiate_expr(e.arg, axis))
    if isinstance(e, Call):
        da = differentiate_expr(e.arg, axis)
        if da == ZERO:
            return ZERO
        a = e.arg
        if e.func == "sin":
            return mul(Call("cos", a), da)
        if e.func == "cos":
            return neg(mul(Call("sin", a), da))
        if e.func == "tan":
            return div(da, power(Call("cos", a), 2))
        if e.func == "cot":
            return neg(div(da, power(Call("sin", a), 2)))
        if e.func == "exp":
            return mul(e, da)
        if e.func == "ln":
            return div(da, a)
        # sqrt
        return div(da, mul(Num(2.0), e))
    a, b = e.left, e.right
    da = differentiate_expr(a, axis)
    if e.op == "^":
        n = b.value
        if da == ZERO:
            return ZERO
        return mul(mul(num(n), power(a, n - 1.0)), da)
    db = differentiate_expr(b, axis)
    if e.op == "+":
        return add(da, db)
    if e.op == "-":
        return sub(da, db)
    if e.op == "*":
        return add(mul(da, b), mul(a, db))
    # quotient rule
    if db == ZERO:
        return div(da, b)
    return div(sub(mul(da, b), mul(a, db)), power(b, 2))


def substitute(e: Expr, mapping: Mapping[int, Expr]) -> Expr:
    """Replace each ``Var(i)`` with ``mapping[i]`` (variables not in the map are kept)."""
    if isinstance(e, Var):
        return mapping.get(e.index, e)
    if isinstance(e, (Num, Const)):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, mapping))
    if e.op == "^":
        return BinOp("^", substitute(e.left, mapping), e.right)
    return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, (Neg, Call)):
        yield from walk(e.arg)
    elif isinstance(e, BinOp):
        yield from walk(e.left)
        yield from walk(e.right)


def variables(e: Expr) -> set[int]:
    return {n.index for n in walk(e) if isinstance(n, Var)}


def as_expr(value: Expr | str | float, aliases: Mapping[str, int] | str = "cylindrical") -> Expr:
    """Coerce a string, number or tree into an expression tree."""
    if isinstance(value, (Num, Var, Const, Neg, BinOp, Call)):
        return value
    if isinstance(value, str):
        return parse_expression(value, aliases)
    return num(float(value))
