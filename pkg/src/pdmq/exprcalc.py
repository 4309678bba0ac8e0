"""Expressions in one spatial variable ``x`` and named parameters.

Parsing, printing, evaluation (scalar and numpy-vectorized), exact
differentiation with respect to ``x`` and light simplification.  Every
other module builds its symbolic objects (mass, potential, Killing
component, operator coefficients) on top of this.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus (``-x^2`` is ``-(x^2)``) and is
right-associative.  ``x`` is the variable, ``pi`` is a named constant,
whitelisted function names are functions and every other identifier is
a parameter.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Param", "Func", "Neg", "BinOp",
    "ExprError", "ParseError", "DomainError", "UnboundParameterError",
    "FUNCTIONS", "parse_expr", "eval_expr", "diff_expr", "simplify",
    "format_expr", "substitute", "as_expr", "evaluate", "TabulatedFunction",
]

Bindings = Mapping[str, float]

FUNCTIONS = (
    "sqrt", "exp", "log", "sin", "cos", "tan", "sinh", "cosh", "tanh",
    "arcsin", "arctan", "arcsinh", "arctanh", "abs", "sign",
)

_NAMED_CONSTANTS = {"pi": math.pi}


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class DomainError(ExprError, ArithmeticError):
    """Evaluation left the real domain of the expression."""


class UnboundParameterError(ExprError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# precedence levels used by the printer
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


class Expr:
    """Immutable expression node.  Arithmetic operators build new nodes."""

    __slots__ = ()

    def __add__(self, other):
        return BinOp("+", self, as_expr(other))

    def __radd__(self, other):
        return BinOp("+", as_expr(other), self)

    def __sub__(self, other):
        return BinOp("-", self, as_expr(other))

    def __rsub__(self, other):
        return BinOp("-", as_expr(other), self)

    def __mul__(self, other):
        return BinOp("*", self, as_expr(other))

    def __rmul__(self, other):
        return BinOp("*", as_expr(other), self)

    def __truediv__(self, other):
        return BinOp("/", self, as_expr(other))

    def __rtruediv__(self, other):
        return BinOp("/", as_expr(other), self)

    def __pow__(self, other):
        return BinOp("^", self, as_expr(other))

    def __neg__(self):
        return Neg(self)

    def __str__(self):
        return format_expr(self)

    # convenience wrappers around the module functions
    def diff(self) -> "Expr":
        return diff_expr(self)

    def simplify(self) -> "Expr":
        return simplify(self)

    def params(self) -> frozenset[str]:
        return _params(self)

    def depends_on_x(self) -> bool:
        return _depends_on_x(self)

    def __call__(self, x, bindings: Bindings | None = None):
        return evaluate(self, x, bindings)


@dataclass(frozen=True, eq=True, repr=True)
class Const(Expr):
    value: float
    name: str | None = None


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Param(Expr):
    name: str


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op == "^" and _depends_on_x(self.right):
            raise ExprError("exponent must not depend on x")


X = Var()
ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Const(float(value))
    if isinstance(value, str):
        return parse_expr(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def _params(e: Expr) -> frozenset[str]:
    if isinstance(e, Param):
        return frozenset([e.name])
    if isinstance(e, (Func, Neg)):
        return _params(e.arg)
    if isinstance(e, BinOp):
        return _params(e.left) | _params(e.right)
    return frozenset()


def _depends_on_x(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, (Func, Neg)):
        return _depends_on_x(e.arg)
    if isinstance(e, BinOp):
        return _depends_on_x(e.left) or _depends_on_x(e.right)
    return False


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value:
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            pos = self.take()[2]
            exponent = self.unary()
            if _depends_on_x(exponent):
                raise ParseError("exponent must not depend on x", pos)
            return BinOp("^", base, exponent)
        return base

    def primary(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "ident":
            if self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Func(text, arg)
            if text in FUNCTIONS:
                raise ParseError(f"function {text!r} needs an argument", pos)
            if text == "x":
                return X
            if text in _NAMED_CONSTANTS:
                return Const(_NAMED_CONSTANTS[text], text)
            return Param(text)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected token {text!r}", pos)


def parse_expr(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises :class:`ParseError` carrying the character offset of the
    offending token, including for empty input and unknown functions.
    """
    if not text or not text.strip():
        raise ParseError("empty input", 0)
    parser = _Parser(text)
    node = parser.expr()
    kind, tok, pos = parser.peek()
    if kind != "end":
        raise ParseError(f"unexpected token {tok!r}", pos)
    return node


# ---------------------------------------------------------------------------
# printing

def _fmt_number(v: float) -> str:
    if math.isfinite(v) and v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    if isinstance(e, Const) and e.name is None and (e.value < 0 or math.copysign(1, e.value) < 0):
        return _PREC["neg"]
    return _PREC["atom"]


def format_expr(e: Expr) -> str:
    """Render ``e`` in the input grammar with minimal parentheses."""
    if isinstance(e, Const):
        if e.name is not None:
            return e.name
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({format_expr(e.arg)})"
    if isinstance(e, Neg):
        inner = format_expr(e.arg)
        if _prec(e.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left, right = format_expr(e.left), format_expr(e.right)
        if e.op == "^":
            # left operand of ^ must be atomic; exponent is parsed as unary
            if _prec(e.left) <= p:
                left = f"({left})"
            if _prec(e.right) < _PREC["neg"]:
                right = f"({right})"
            return f"{left}^{right}"
        if _prec(e.left) < p:
            left = f"({left})"
        lp = _prec(e.right)
        if lp < p or (lp == p and e.op in ("-", "/")) or (lp == p and isinstance(e.right, BinOp)):
            right = f"({right})"
        sep = " " if e.op in "+-" else ""
        return f"{left}{sep}{e.op}{sep}{right}"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# evaluation

def _sign(v):
    return math.copysign(1.0, v) if v != 0 else 0.0


_MATH = {
    "sqrt": "math.sqrt", "exp": "math.exp", "log": "math.log",
    "sin": "math.sin", "cos": "math.cos", "tan": "math.tan",
    "sinh": "math.sinh", "cosh": "math.cosh", "tanh": "math.tanh",
    "arcsin": "math.asin", "arctan": "math.atan", "arcsinh": "math.asinh",
    "arctanh": "math.atanh", "abs": "abs", "sign": "_sign",
}


def _source(e: Expr, lib: str, names: dict) -> str:
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Param):
        key = f"p_{e.name}"
        names[key] = e.name
        return key
    if isinstance(e, Neg):
        return f"(-{_source(e.arg, lib, names)})"
    if isinstance(e, Func):
        arg = _source(e.arg, lib, names)
        if lib == "math":
            return f"{_MATH[e.name]}({arg})"
        return f"np.{'absolute' if e.name == 'abs' else e.name}({arg})"
    if isinstance(e, BinOp):
        left, right = _source(e.left, lib, names), _source(e.right, lib, names)
        if e.op == "^":
            return f"{'math.pow' if lib == 'math' else 'np.power'}({left}, {right})"
        return f"({left} {e.op} {right})"
    raise TypeError(f"not an expression: {e!r}")


def _bind(names: dict, bindings: Bindings | None) -> dict:
    env = {}
    for key, name in names.items():
        try:
            env[key] = float(bindings[name])  # type: ignore[index]
        except (KeyError, TypeError):
            raise UnboundParameterError(f"parameter {name!r} is not bound") from None
    return env


def compile_scalar(e: Expr, bindings: Bindings | None = None) -> Callable[[float], float]:
    """Compile ``e`` into a fast scalar function of ``x`` using :mod:`math`.

    Domain faults surface as :class:`DomainError`.
    """
    names: dict = {}
    src = _source(e, "math", names)
    env = {"math": math, "_sign": _sign, **_bind(names, bindings)}
    raw = eval(f"lambda x: {src}", env)  # noqa: S307 - source is generated from the AST

    def f(x: float) -> float:
        try:
            return raw(float(x))
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"{format_expr(e)} undefined at x={x!r}: {exc}") from None

    f.raw = raw  # unchecked version for hot loops that handle errors themselves
    return f


def compile_array(e: Expr, bindings: Bindings | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Compile ``e`` into a numpy-vectorized function of ``x``."""
    names: dict = {}
    src = _source(e, "np", names)
    env = {"np": np, **_bind(names, bindings)}
    raw = eval(f"lambda x: {src}", env)  # noqa: S307

    def f(x):
        x = np.asarray(x, dtype=float)
        try:
            with np.errstate(divide="raise", invalid="raise", over="raise", under="ignore"):
                out = raw(x)
        except FloatingPointError as exc:
            raise DomainError(f"{format_expr(e)}: {exc}") from None
        out = np.asarray(out, dtype=float)
        if out.shape != x.shape:
            out = np.broadcast_to(out, x.shape).copy()
        return out

    return f


def evaluate(e, x, bindings: Bindings | None = None):
    """Evaluate an expression (or tabulated function) on a scalar or array."""
    if isinstance(e, TabulatedFunction):
        return e(x)
    if np.ndim(x) == 0:
        return compile_scalar(e, bindings)(float(x))
    return compile_array(e, bindings)(x)


def eval_expr(e: Expr, x: float, b: Bindings | None = None) -> float:
    """Evaluate ``e`` at the point ``x`` in IEEE double precision."""
    return compile_scalar(e, b)(float(x))


# ---------------------------------------------------------------------------
# differentiation

def diff_expr(e: Expr) -> Expr:
    """Exact derivative of ``e`` with respect to ``x``; parameters are constants."""
    return simplify(_diff(e))


def _diff(e: Expr) -> Expr:
    if isinstance(e, (Const, Param)):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return Neg(_diff(e.arg))
    if isinstance(e, BinOp):
        u, v = e.left, e.right
        if e.op in ("+", "-"):
            return BinOp(e.op, _diff(u), _diff(v))
        if e.op == "*":
            return _diff(u) * v + u * _diff(v)
        if e.op == "/":
            return (_diff(u) * v - u * _diff(v)) / v ** 2
        if e.op == "^":
            return v * u ** simplify(v - 1) * _diff(u)
    if isinstance(e, Func):
        u = e.arg
        du = _diff(u)
        rule = {
            "sqrt": lambda: du / (2 * Func("sqrt", u)),
            "exp": lambda: Func("exp", u) * du,
            "log": lambda: du / u,
            "sin": lambda: Func("cos", u) * du,
            "cos": lambda: -(Func("sin", u) * du),
            "tan": lambda: du / Func("cos", u) ** 2,
            "sinh": lambda: Func("cosh", u) * du,
            "cosh": lambda: Func("sinh", u) * du,
            "tanh": lambda: du / Func("cosh", u) ** 2,
            "arcsin": lambda: du / Func("sqrt", 1 - u ** 2),
            "arctan": lambda: du / (1 + u ** 2),
            "arcsinh": lambda: du / Func("sqrt", 1 + u ** 2),
            "arctanh": lambda: du / (1 - u ** 2),
            # discontinuous at u = 0; sign(0) = 0 there
            "abs": lambda: Func("sign", u) * du,
            "sign": lambda: ZERO,
        }[e.name]
        return rule()
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# simplification

def _is_const(e: Expr, value: float | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def _fold(fn, *args) -> Const | None:
    try:
        v = fn(*args)
    except (ValueError, ZeroDivisionError, OverflowError):
        return None
    if isinstance(v, complex) or not math.isfinite(v):
        return None
    return Const(float(v))


_FOLD_BIN = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "^": math.pow,
}


def _negated(e: Expr) -> Expr | None:
    """``u`` when ``e`` is ``-u`` or a product/quotient led by a negation."""
    if isinstance(e, Neg):
        return e.arg
    if isinstance(e, BinOp) and e.op in "*/" and isinstance(e.left, Neg):
        return BinOp(e.op, e.left.arg, e.right)
    if isinstance(e, BinOp) and e.op in "*/" and isinstance(e.left, Const) \
            and e.left.name is None and e.left.value < 0:
        return BinOp(e.op, Const(-e.left.value), e.right)
    return None


def _power_parts(e: Expr) -> tuple[Expr, float]:
    if isinstance(e, BinOp) and e.op == "^" and isinstance(e.right, Const):
        return e.left, e.right.value
    return e, 1.0


def _merge_powers(left: Expr, right: Expr, sign: float) -> Expr | None:
    """``u^p * u^q -> u^(p+q)`` (``sign=-1`` for a quotient) on equal bases."""
    if isinstance(left, Const) or isinstance(right, Const):
        return None
    base_l, p = _power_parts(left)
    base_r, q = _power_parts(right)
    if base_l != base_r:
        return None
    return simplify(BinOp("^", base_l, Const(p + sign * q)))


def simplify(e: Expr) -> Expr:
    """Constant folding plus the identity/annihilator rules.

    Only rewrites that preserve the value wherever the input is defined
    are applied (``0*e -> 0`` may extend the domain).
    """
    if isinstance(e, Const) and e.name is not None:
        return e
    if isinstance(e, (Const, Var, Param)):
        return e
    if isinstance(e, Neg):
        a = simplify(e.arg)
        if isinstance(a, Const):
            return Const(-a.value)
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if isinstance(e, Func):
        a = simplify(e.arg)
        if isinstance(a, Const):
            folded = _fold(compile_scalar(Func(e.name, Const(a.value))).raw, 0.0)
            if folded is not None:
                return folded
        return Func(e.name, a)
    if isinstance(e, BinOp):
        left, right = simplify(e.left), simplify(e.right)
        op = e.op
        if isinstance(left, Const) and isinstance(right, Const):
            folded = _fold(_FOLD_BIN[op], left.value, right.value)
            if folded is not None:
                return folded
        if op == "+":
            if left == right:
                return simplify(BinOp("*", Const(2.0), left))
            if _is_const(left, 0.0):
                return right
            if _is_const(right, 0.0):
                return left
            negated = _negated(right)
            if negated is not None:
                return simplify(BinOp("-", left, negated))
        elif op == "-":
            if _is_const(right, 0.0):
                return left
            if _is_const(left, 0.0):
                return simplify(Neg(right))
            negated = _negated(right)
            if negated is not None:
                return simplify(BinOp("+", left, negated))
        elif op == "*":
            if _is_const(left, 0.0) or _is_const(right, 0.0):
                return ZERO
            if _is_const(left, 1.0):
                return right
            if _is_const(right, 1.0):
                return left
            if _is_const(left, -1.0):
                return simplify(Neg(right))
            if _is_const(right, -1.0):
                return simplify(Neg(left))
            if isinstance(left, Neg) and isinstance(right, Neg):
                return simplify(BinOp("*", left.arg, right.arg))
            # pull constants to the front of products: c1*(c2*u) -> (c1*c2)*u
            if isinstance(left, Const) and isinstance(right, BinOp) and right.op == "*" \
                    and isinstance(right.left, Const):
                return simplify(BinOp("*", Const(left.value * right.left.value), right.right))
            if isinstance(right, Const) and not isinstance(left, Const):
                return simplify(BinOp("*", right, left))
            merged = _merge_powers(left, right, 1.0)
            if merged is not None:
                return merged
            if isinstance(left, BinOp) and left.op == "*":
                merged = _merge_powers(left.right, right, 1.0)
                if merged is not None:
                    return simplify(BinOp("*", left.left, merged))
        elif op == "/":
            if _is_const(left, 0.0):
                return ZERO
            if _is_const(right, 1.0):
                return left
            merged = _merge_powers(left, right, -1.0)
            if merged is not None:
                return merged
        elif op == "^":
            if _is_const(right, 1.0):
                return left
            if _is_const(right, 0.0):
                return ONE
            if _is_const(left, 1.0):
                return ONE
            # (1/u)^p -> u^(-p)
            if isinstance(right, Const) and isinstance(left, BinOp) and left.op == "/" \
                    and _is_const(left.left, 1.0):
                return simplify(BinOp("^", left.right, Const(-right.value)))
        return BinOp(op, left, right)
    raise TypeError(f"not an expression: {e!r}")


def substitute(e: Expr, bindings: Bindings) -> Expr:
    """Replace bound parameters by constants (unbound ones are kept)."""
    if isinstance(e, Param):
        return Const(float(bindings[e.name])) if e.name in bindings else e
    if isinstance(e, Func):
        return Func(e.name, substitute(e.arg, bindings))
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, bindings))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, bindings), substitute(e.right, bindings))
    return e


# ---------------------------------------------------------------------------
# numeric functions given as tables

class TabulatedFunction:
    """Dense table with cubic-spline interpolation.

    Stands in for an expression wherever only evaluation is needed (the
    transformed potential of the constant-mass problem is one).
    """

    def __init__(self, nodes, values, label: str = "table"):
        from scipy.interpolate import CubicSpline

        self.nodes = np.asarray(nodes, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.label = label
        self._spline = CubicSpline(self.nodes, self.values)

    @property
    def bounds(self) -> tuple[float, float]:
        return float(self.nodes[0]), float(self.nodes[-1])

    def __call__(self, x, bindings=None):
        x = np.asarray(x, dtype=float)
        lo, hi = self.bounds
        span = hi - lo
        if np.any(x < lo - 1e-12 * span) or np.any(x > hi + 1e-12 * span):
            raise DomainError(f"{self.label}: evaluation outside [{lo}, {hi}]")
        out = self._spline(np.clip(x, lo, hi))
        return float(out) if out.ndim == 0 else out

    def params(self) -> frozenset[str]:
        return frozenset()

    def depends_on_x(self) -> bool:
        return True

    def __str__(self):
        return f"<{self.label}: {len(self.nodes)} nodes on [{self.nodes[0]:.6g}, {self.nodes[-1]:.6g}]>"
