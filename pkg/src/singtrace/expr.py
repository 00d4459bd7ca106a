"""Small arithmetic expression language used by model, measure and symbol files.

Grammar (precedence from low to high)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names are the free variable (``s``, ``n``, ``t`` or ``x``), the constants
``pi``, ``e`` and ``i`` (imaginary unit, only meaningful for circle symbols)
and the functions ``log``, ``exp``, ``sin``, ``cos``, ``sqrt`` and ``abs``.

Parsed trees can be differentiated symbolically and compiled to vectorised
callables for either numpy (floats) or mpmath (huge arguments).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np

from .errors import ExpressionError

FUNCTIONS = ("log", "exp", "sin", "cos", "sqrt", "abs")
VARIABLES = ("s", "n", "t", "x")
CONSTANTS = {"pi": math.pi, "e": math.e}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))"
)


# --------------------------------------------------------------------------- AST


class Node:
    __slots__ = ()

    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __pow__(self, other):
        return power(self, _wrap(other))

    def __neg__(self):
        return neg(self)


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    name: str = "x"


@dataclass(frozen=True)
class Imag(Node):
    pass


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class Bin(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call(Node):
    fn: str
    arg: Node


def _wrap(v) -> Node:
    if isinstance(v, Node):
        return v
    return Num(float(v))


def _is_num(node: Node, value: float | None = None) -> bool:
    return isinstance(node, Num) and (value is None or node.value == value)


def add(a: Node, b: Node) -> Node:
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return Bin("+", a, b)


def sub(a: Node, b: Node) -> Node:
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    return Bin("-", a, b)


def mul(a: Node, b: Node) -> Node:
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return Bin("*", a, b)


def div(a: Node, b: Node) -> Node:
    if _is_num(b, 1.0):
        return a
    if _is_num(a, 0.0):
        return Num(0.0)
    if _is_num(a) and _is_num(b) and b.value != 0.0:
        return Num(a.value / b.value)
    return Bin("/", a, b)


def power(a: Node, b: Node) -> Node:
    if _is_num(b, 1.0):
        return a
    if _is_num(b, 0.0):
        return Num(1.0)
    return Bin("^", a, b)


def neg(a: Node) -> Node:
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def call(fn: str, a: Node) -> Node:
    return Call(fn, a)


# ------------------------------------------------------------------------ parser


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = self._tokenize(text)
        self.pos = 0

    @staticmethod
    def _tokenize(text: str) -> list[tuple[str, str]]:
        out = []
        i = 0
        stripped = text.rstrip()
        while i < len(stripped):
            m = _TOKEN.match(stripped, i)
            if m is None or m.end() == i:
                raise ExpressionError(f"unexpected character {stripped[i:].lstrip()[:1]!r} in {text!r}")
            kind = m.lastgroup
            tok = m.group(kind)
            if tok == "**":
                tok = "^"
            out.append((kind, tok))
            i = m.end()
        return out

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self, expected=None):
        kind, tok = self.peek()
        if kind is None:
            raise ExpressionError(f"unexpected end of expression {self.text!r}")
        if expected is not None and tok != expected:
            raise ExpressionError(f"expected {expected!r} but found {tok!r} in {self.text!r}")
        self.pos += 1
        return kind, tok

    def parse(self) -> Node:
        if not self.tokens:
            raise ExpressionError("empty expression")
        node = self.expr()
        if self.pos != len(self.tokens):
            raise ExpressionError(f"trailing input {self.peek()[1]!r} in {self.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            _, op = self.take()
            rhs = self.term()
            node = Bin(op, node, rhs)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op = self.take()
            rhs = self.unary()
            node = Bin(op, node, rhs)
        return node

    def unary(self) -> Node:
        tok = self.peek()[1]
        if tok == "-":
            self.take()
            return Neg(self.unary())
        if tok == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, tok = self.take()
        if kind == "num":
            return Num(float(tok))
        if kind == "name":
            if tok in FUNCTIONS:
                self.take("(")
                arg = self.expr()
                self.take(")")
                return Call(tok, arg)
            if tok in VARIABLES:
                return Var(tok)
            if tok in CONSTANTS:
                return Num(CONSTANTS[tok])
            if tok == "i":
                return Imag()
            raise ExpressionError(f"unknown name {tok!r} in {self.text!r}")
        if tok == "(":
            node = self.expr()
            self.take(")")
            return node
        raise ExpressionError(f"unexpected token {tok!r} in {self.text!r}")


@lru_cache(maxsize=256)
def parse(text: str) -> Node:
    """Parse ``text`` into an expression tree."""
    if not isinstance(text, str):
        raise ExpressionError(f"expression must be a string, got {type(text).__name__}")
    return _Parser(text).parse()


def variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return variables(node.arg)
    if isinstance(node, Call):
        return variables(node.arg)
    if isinstance(node, Bin):
        return variables(node.left) | variables(node.right)
    return set()


def is_complex(node: Node) -> bool:
    if isinstance(node, Imag):
        return True
    if isinstance(node, (Neg, Call)):
        return is_complex(node.arg)
    if isinstance(node, Bin):
        return is_complex(node.left) or is_complex(node.right)
    return False


def is_constant(node: Node) -> bool:
    return not variables(node)


def to_string(node: Node) -> str:
    """Render an expression tree back to the grammar (fully parenthesised)."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Imag):
        return "i"
    if isinstance(node, Neg):
        return f"(-{to_string(node.arg)})"
    if isinstance(node, Call):
        return f"{node.fn}({to_string(node.arg)})"
    return f"({to_string(node.left)} {node.op} {to_string(node.right)})"


def substitute(node: Node, name: str, repl: Node) -> Node:
    """Replace every occurrence of variable ``name`` by ``repl``."""
    if isinstance(node, Var):
        return repl if node.name == name else node
    if isinstance(node, Neg):
        return neg(substitute(node.arg, name, repl))
    if isinstance(node, Call):
        return Call(node.fn, substitute(node.arg, name, repl))
    if isinstance(node, Bin):
        return Bin(node.op, substitute(node.left, name, repl), substitute(node.right, name, repl))
    return node


# -------------------------------------------------------------- differentiation


def diff(node: Node, var: str) -> Node:
    """Symbolic derivative with light algebraic simplification."""
    if isinstance(node, (Num, Imag)):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0 if node.name == var else 0.0)
    if isinstance(node, Neg):
        return neg(diff(node.arg, var))
    if isinstance(node, Call):
        u = node.arg
        du = diff(u, var)
        if _is_num(du, 0.0):
            return Num(0.0)
        fn = node.fn
        if fn == "log":
            outer = div(Num(1.0), u)
        elif fn == "exp":
            outer = node
        elif fn == "sin":
            outer = Call("cos", u)
        elif fn == "cos":
            outer = neg(Call("sin", u))
        elif fn == "sqrt":
            outer = div(Num(0.5), node)
        else:
            raise ExpressionError(f"{fn} is not differentiable symbolically")
        return mul(outer, du)
    a, b = node.left, node.right
    da, db = diff(a, var), diff(b, var)
    if node.op == "+":
        return add(da, db)
    if node.op == "-":
        return sub(da, db)
    if node.op == "*":
        return add(mul(da, b), mul(a, db))
    if node.op == "/":
        return div(sub(mul(da, b), mul(a, db)), power(b, Num(2.0)))
    # power
    if is_constant(b):
        if _is_num(da, 0.0):
            return Num(0.0)
        return mul(mul(b, power(a, sub(b, Num(1.0)))), da)
    # general a^b = exp(b log a)
    return mul(node, add(mul(db, Call("log", a)), div(mul(b, da), a)))


# -------------------------------------------------------------------- compilers

_NP_FUNCS = {
    "log": "np.log",
    "exp": "np.exp",
    "sin": "np.sin",
    "cos": "np.cos",
    "sqrt": "np.sqrt",
    "abs": "np.abs",
}
_MP_FUNCS = {
    "log": "mp.log",
    "exp": "mp.exp",
    "sin": "mp.sin",
    "cos": "mp.cos",
    "sqrt": "mp.sqrt",
    "abs": "abs",
}


def _source(node: Node, var: str, backend: str) -> str:
    funcs = _NP_FUNCS if backend == "numpy" else _MP_FUNCS
    if isinstance(node, Num):
        if backend == "mpmath":
            return f"mp.mpf({node.value!r})"
        return repr(node.value)
    if isinstance(node, Var):
        return "_x"
    if isinstance(node, Imag):
        return "1j" if backend == "numpy" else "mp.mpc(0, 1)"
    if isinstance(node, Neg):
        return f"(-{_source(node.arg, var, backend)})"
    if isinstance(node, Call):
        return f"{funcs[node.fn]}({_source(node.arg, var, backend)})"
    op = "**" if node.op == "^" else node.op
    return f"({_source(node.left, var, backend)} {op} {_source(node.right, var, backend)})"


def compile_expr(node: Node, backend: str = "numpy") -> Callable:
    """Compile a tree into ``f(x)``.

    The numpy backend is vectorised over arrays; the mpmath backend takes a
    single ``mpf`` and is used when arguments overflow doubles.
    """
    if backend not in ("numpy", "mpmath"):
        raise ValueError(f"unknown backend {backend!r}")
    src = _source(node, "_x", backend)
    if backend == "numpy" and is_constant(node):
        src = f"({src}) + np.zeros_like(_x)"
    code = compile(f"lambda _x: {src}", "<singtrace-expr>", "eval")
    return eval(code, {"np": np, "mp": mpmath, "__builtins__": {"abs": abs}})

class Expression:
    """A parsed expression in one free variable with cached derivatives."""

    def __init__(self, source: str | Node, var: str | None = None):
        node = parse(source) if isinstance(source, str) else source
        self.text = source if isinstance(source, str) else to_string(source)
        self.node = node
        names = variables(node)
        if len(names) > 1:
            raise ExpressionError(f"expression {self.text!r} uses several variables {sorted(names)}")
        self.var = var or (names.pop() if names else "x")
        self._np = compile_expr(node, "numpy")
        self._mp = None
        self._derivs: dict[int, Expression] = {0: self}

    def __repr__(self):
        return f"Expression({self.text!r})"

    def __call__(self, x):
        with np.errstate(all="ignore"):
            arr = np.asarray(x, dtype=complex if np.iscomplexobj(x) else float)
            out = self._np(arr)
            return out[()] if np.ndim(out) == 0 else out

    def mp(self, x):
        """Evaluate with mpmath (argument may be an ``mpf`` far outside double range)."""
        if self._mp is None:
            self._mp = compile_expr(self.node, "mpmath")
        return self._mp(mpmath.mpf(x) if not isinstance(x, (mpmath.mpf, mpmath.mpc)) else x)

    def derivative(self, order: int = 1) -> "Expression":
        if order not in self._derivs:
            prev = self.derivative(order - 1)
            self._derivs[order] = Expression(diff(prev.node, self.var), var=self.var)
        return self._derivs[order]

    @property
    def is_complex(self) -> bool:
        return is_complex(self.node)
