"""Arithmetic expressions over x, v, t for user-defined fields.

Grammar, loosest to tightest binding::

    expr    := expr ('+' | '-') expr        left-assoc
             | expr ('*' | '/') expr        left-assoc
             | '-' expr                     binds tighter than * /
             | expr '^' expr                right-assoc, tightest
             | NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

``-x^2`` is ``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.  Implicit
multiplication is not supported.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import EvalError, ExpressionSyntaxError, UnknownIdentifier

VARIABLES = ("x", "v", "t")
FUNCTIONS = ("sin", "cos", "sqrt", "abs")

_BINARY = {"+": (1, "left"), "-": (1, "left"), "*": (2, "left"), "/": (2, "left"), "^": (4, "right")}
_UNARY_PREC = 3

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class _Tok:
    kind: str  # num | name | op | end
    text: str
    pos: int


def tokenize(text):
    toks = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos,
                                        ("number", "identifier", "operator"))
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), start))
        pos = m.end()
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        if self.tok.text != text:
            raise ExpressionSyntaxError(f"unexpected {self._describe()}", self.tok.pos, (repr(text),))
        return self.advance()

    def _describe(self):
        return "end of input" if self.tok.kind == "end" else repr(self.tok.text)

    def parse(self):
        node = self.expression(0)
        if self.tok.kind != "end":
            raise ExpressionSyntaxError(f"unexpected {self._describe()}", self.tok.pos, ("operator", "end"))
        return node

    def expression(self, min_prec):
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in _BINARY:
            prec, assoc = _BINARY[self.tok.text]
            if prec < min_prec:
                break
            op = self.advance().text
            right = self.expression(prec + 1 if assoc == "left" else prec)
            left = BinOp(op, left, right)
        return left

    def unary(self):
        if self.tok.text == "-" and self.tok.kind == "op":
            self.advance()
            return Neg(self.expression(_UNARY_PREC))
        if self.tok.text == "+" and self.tok.kind == "op":
            self.advance()
            return self.expression(_UNARY_PREC)
        return self.atom()

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expression(0)
                self.expect(")")
                return Call(tok.text, arg)
            if tok.text in VARIABLES:
                if self.tok.text == "(":
                    raise ExpressionSyntaxError(f"{tok.text!r} is not a function", self.tok.pos,
                                                ("operator", "end"))
                return Var(tok.text)
            raise UnknownIdentifier(f"unknown identifier {tok.text!r}", tok.pos, VARIABLES + FUNCTIONS)
        if tok.text == "(":
            self.advance()
            node = self.expression(0)
            self.expect(")")
            return node
        raise ExpressionSyntaxError(f"unexpected {self._describe()}", tok.pos,
                                    ("number", "identifier", "'('", "'-'"))


def parse_expression(text) -> Expr:
    return _Parser(text).parse()


# -- evaluation ---------------------------------------------------------------

def _div(a, b):
    if np.any(np.asarray(b) == 0):
        raise EvalError("division by zero")
    return a / b


def _pow(a, b):
    a_arr, b_arr = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    bad = (a_arr < 0) & (b_arr != np.round(b_arr))
    if np.any(bad):
        raise EvalError("fractional power of a negative number")
    if np.any((a_arr == 0) & (b_arr < 0)):
        raise EvalError("division by zero")
    return np.power(a_arr, b_arr)


def _sqrt(a):
    if np.any(np.asarray(a) < 0):
        raise EvalError("square root of a negative number")
    return np.sqrt(a)


_FUNCS = {"sin": np.sin, "cos": np.cos, "sqrt": _sqrt, "abs": np.abs}
_OPS = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": _div, "^": _pow}


def compile_expression(node: Expr) -> Callable:
    """Closure ``f(x, v, t)`` evaluating the tree; works on floats and arrays."""
    if isinstance(node, Num):
        value = node.value
        return lambda x, v, t: value
    if isinstance(node, Var):
        return {"x": lambda x, v, t: x, "v": lambda x, v, t: v, "t": lambda x, v, t: t}[node.name]
    if isinstance(node, Neg):
        inner = compile_expression(node.operand)
        return lambda x, v, t: -inner(x, v, t)
    if isinstance(node, Call):
        fn, inner = _FUNCS[node.func], compile_expression(node.arg)
        return lambda x, v, t: fn(inner(x, v, t))
    if isinstance(node, BinOp):
        op, lhs, rhs = _OPS[node.op], compile_expression(node.left), compile_expression(node.right)
        return lambda x, v, t: op(lhs(x, v, t), rhs(x, v, t))
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Expr, x=0.0, v=0.0, t=0.0):
    return compile_expression(node)(x, v, t)


class ExpressionField:
    """Vector field backed by a parsed expression."""

    def __init__(self, text):
        self.text = text
        self.tree = parse_expression(text)
        self._fn = compile_expression(self.tree)

    def __call__(self, x, v, t):
        value = self._fn(x, v, t)
        if np.ndim(value) == 0 and np.ndim(x) > 0:
            value = np.full(np.shape(x), float(value))
        return value

    def __repr__(self):
        return f"ExpressionField({self.text!r})"


# -- printing -----------------------------------------------------------------

def _prec(node):
    if isinstance(node, BinOp):
        return _BINARY[node.op][0]
    if isinstance(node, Neg):
        return _UNARY_PREC
    return 10


def to_text(node: Expr) -> str:
    """Render with the minimum parentheses needed to reparse the same tree."""
    if isinstance(node, Num):
        value = float(node.value)
        return str(int(value)) if value.is_integer() and abs(value) < 1e15 else repr(value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        if _prec(node.operand) < _UNARY_PREC:
            inner = f"({inner})"
        return f"-{inner}" if not inner.startswith("-") else f"-({inner})"
    prec, assoc = _BINARY[node.op]
    left, right = to_text(node.left), to_text(node.right)
    lp, rp = _prec(node.left), _prec(node.right)
    if lp < prec or (lp == prec and assoc == "right") or (node.op == "^" and isinstance(node.left, Neg)):
        left = f"({left})"
    if rp < prec or (rp == prec and assoc == "left"):
        if not (node.op == "^" and isinstance(node.right, Neg)):
            right = f"({right})"
    sep = "" if node.op == "^" else " "
    return f"{left}{sep}{node.op}{sep}{right}"
