"""Arithmetic expressions of one variable with exact symbolic derivatives.

Supports real literals, the variable ``x``, the constant ``pi``, the binary
operators ``+ - * / ^`` and unary minus, and the functions ``sin``, ``cos``
and ``exp``.  ``^`` is right-associative and binds tighter than unary minus.
Expressions are immutable after parsing; evaluation is pure and accepts
scalars or numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expression",
    "ExpressionError",
    "EvaluationError",
    "DifferentiationError",
    "parse_expr",
    "eval_expr",
    "differentiate",
    "to_string",
]


class ExpressionError(ValueError):
    """Malformed expression text; carries the offending position."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class EvaluationError(ArithmeticError):
    """Raised on division by zero or a non-finite evaluation result."""


class DifferentiationError(ValueError):
    """Raised for derivative patterns outside the supported grammar."""


class Expression:
    """Base class for AST nodes."""


@dataclass(frozen=True)
class Num(Expression):
    value: float


@dataclass(frozen=True)
class Var(Expression):
    pass


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression


@dataclass(frozen=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Call(Expression):
    func: str
    arg: Expression


_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[+\-*/^()]))"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            if source[pos:].strip() == "":
                break
            raise ExpressionError(f"unexpected character {source[pos]!r}", pos)
        if m.lastgroup is not None:
            tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str, int]], source: str):
        self.tokens = tokens
        self.source = source
        self.i = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise ExpressionError("unexpected end of input", len(self.source))
        self.i += 1
        return tok

    def expect_op(self, symbol: str) -> None:
        tok = self.peek()
        if tok is None or tok[0] != "op" or tok[1] != symbol:
            pos = tok[2] if tok else len(self.source)
            raise ExpressionError(f"expected {symbol!r}", pos)
        self.i += 1

    def parse(self) -> Expression:
        e = self.sum_expr()
        tok = self.peek()
        if tok is not None:
            raise ExpressionError(f"unexpected {tok[1]!r}", tok[2])
        return e

    def sum_expr(self) -> Expression:
        e = self.product()
        while (tok := self.peek()) and tok[0] == "op" and tok[1] in "+-":
            self.i += 1
            rhs = self.product()
            e = BinOp(tok[1], e, rhs)
        return e

    def product(self) -> Expression:
        e = self.unary()
        while (tok := self.peek()) and tok[0] == "op" and tok[1] in "*/":
            self.i += 1
            rhs = self.unary()
            e = BinOp(tok[1], e, rhs)
        return e

    def unary(self) -> Expression:
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "-":
            self.i += 1
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "^":
            self.i += 1
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        kind, text, pos = self.next()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text == "x":
                return Var()
            if text == "pi":
                return Num(math.pi)
            if text in _FUNCTIONS:
                self.expect_op("(")
                arg = self.sum_expr()
                self.expect_op(")")
                return Call(text, arg)
            raise ExpressionError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            e = self.sum_expr()
            self.expect_op(")")
            return e
        raise ExpressionError(f"unexpected {text!r}", pos)


def parse_expr(source: str) -> Expression:
    """Parse expression text into an immutable AST.

    Raises ExpressionError (with position) on malformed input or unknown
    identifiers.
    """
    if not isinstance(source, str) or source.strip() == "":
        raise ExpressionError("empty expression")
    return _Parser(_tokenize(source), source).parse()


def _eval(e: Expression, x):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x
    if isinstance(e, Neg):
        return -_eval(e.arg, x)
    if isinstance(e, Call):
        with np.errstate(over="ignore"):
            return _FUNCTIONS[e.func](_eval(e.arg, x))
    if isinstance(e, BinOp):
        l = _eval(e.left, x)
        r = _eval(e.right, x)
        if e.op == "+":
            return l + r
        if e.op == "-":
            return l - r
        if e.op == "*":
            return l * r
        if e.op == "/":
            if np.any(np.asarray(r) == 0.0):
                raise EvaluationError("division by zero")
            return l / r
        if e.op == "^":
            with np.errstate(invalid="ignore", over="ignore"):
                return np.power(l, r)
    raise TypeError(f"not an expression node: {e!r}")


def eval_expr(e: Expression, x):
    """Evaluate an expression at ``x`` (scalar or ndarray of any shape).

    Raises EvaluationError on division by zero or non-finite results.
    """
    scalar = np.ndim(x) == 0
    xv = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xv)):
        raise EvaluationError("evaluation point must be finite")
    out = _eval(e, xv if not scalar else float(xv))
    if not np.all(np.isfinite(out)):
        raise EvaluationError("expression evaluated to a non-finite value")
    if scalar:
        return float(out)
    return np.ascontiguousarray(np.broadcast_to(np.asarray(out, dtype=float), xv.shape))


def is_constant(e: Expression) -> bool:
    """True when the expression contains no occurrence of the variable."""
    if isinstance(e, (Num,)):
        return True
    if isinstance(e, Var):
        return False
    if isinstance(e, Neg):
        return is_constant(e.arg)
    if isinstance(e, Call):
        return is_constant(e.arg)
    if isinstance(e, BinOp):
        return is_constant(e.left) and is_constant(e.right)
    raise TypeError(f"not an expression node: {e!r}")


def _const_value(e: Expression) -> float:
    return float(eval_expr(e, 0.0))


def _num(v: float) -> Num:
    return Num(float(v))


def _is_num(e: Expression, v: float | None = None) -> bool:
    return isinstance(e, Num) and (v is None or e.value == v)


def _add(a: Expression, b: Expression) -> Expression:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a: Expression, b: Expression) -> Expression:
    if _is_num(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value - b.value)
    if _is_num(a, 0.0):
        return Neg(b)
    return BinOp("-", a, b)


def _mul(a: Expression, b: Expression) -> Expression:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return _num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value * b.value)
    return BinOp("*", a, b)


def _div(a: Expression, b: Expression) -> Expression:
    if _is_num(a, 0.0):
        return _num(0.0)
    if _is_num(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        return _num(a.value / b.value)
    return BinOp("/", a, b)


def differentiate(e: Expression) -> Expression:
    """Exact symbolic derivative with light constant folding.

    Power expressions must carry a constant exponent; anything else is
    rejected with DifferentiationError.
    """
    if isinstance(e, Num):
        return _num(0.0)
    if isinstance(e, Var):
        return _num(1.0)
    if isinstance(e, Neg):
        return Neg(differentiate(e.arg))
    if isinstance(e, Call):
        inner = differentiate(e.arg)
        if e.func == "sin":
            outer: Expression = Call("cos", e.arg)
        elif e.func == "cos":
            outer = Neg(Call("sin", e.arg))
        else:  # exp
            outer = Call("exp", e.arg)
        return _mul(outer, inner)
    if isinstance(e, BinOp):
        if e.op == "+":
            return _add(differentiate(e.left), differentiate(e.right))
        if e.op == "-":
            return _sub(differentiate(e.left), differentiate(e.right))
        if e.op == "*":
            return _add(
                _mul(differentiate(e.left), e.right),
                _mul(e.left, differentiate(e.right)),
            )
        if e.op == "/":
            num = _sub(
                _mul(differentiate(e.left), e.right),
                _mul(e.left, differentiate(e.right)),
            )
            return _div(num, BinOp("^", e.right, _num(2.0)))
        if e.op == "^":
            if not is_constant(e.right):
                raise DifferentiationError(
                    "derivative of a power with non-constant exponent is unsupported"
                )
            c = _const_value(e.right)
            if c == 0.0:
                return _num(0.0)
            power = _mul(_num(c), BinOp("^", e.left, _num(c - 1.0)))
            return _mul(power, differentiate(e.left))
    raise TypeError(f"not an expression node: {e!r}")


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_PREC_NEG = 3
_PREC_ATOM = 5


def _prec(e: Expression) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Num) and e.value < 0:
        return _PREC_NEG  # prints with a leading minus, parenthesize like Neg
    return _PREC_ATOM


def to_string(e: Expression) -> str:
    """Render an AST as parseable text (round-trips through parse_expr)."""
    if isinstance(e, Num):
        if e.value == math.pi:
            return "pi"
        return repr(e.value)
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Call):
        return f"{e.func}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if _prec(e.arg) < _PREC_NEG:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left, right = to_string(e.left), to_string(e.right)
        if e.op == "^":
            if _prec(e.left) <= p:
                left = f"({left})"
            if _prec(e.right) < p:
                right = f"({right})"
        else:
            if _prec(e.left) < p:
                left = f"({left})"
            if _prec(e.right) <= p:
                right = f"({right})"
        return f"{left}{e.op}{right}"
    raise TypeError(f"not an expression node: {e!r}")
