"""Entire-function expressions: parsing, evaluation, log-space evaluation, derivatives.

Grammar (whitespace-insensitive)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" integer)?
    atom    := number | "i" | "z" | func "(" expr ")" | "(" expr ")"
    func    := "exp" | "sin" | "cos" | "beg"
    number  := digits ["." digits] ["i"]

``^`` binds tighter than unary minus, so ``-z^2`` is ``-(z^2)``.  ``beg`` is
the series g(z) = sum_{k>=1} (z/2^k)^(2^k).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .logcomplex import LogArray, LogComplex
from .series import series_value

# |Im w| above which sin/cos switch to the exponential form
TRIG_EXP_SWITCH = 20.0


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError):
    """Syntax error; ``offset`` is the 1-based byte position of the offending token."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset


class EvaluationError(ExprError):
    pass


class DivisionByZero(EvaluationError):
    pass


# --------------------------------------------------------------------------
# AST

class Expr:
    """Base node.  Nodes are frozen dataclasses and therefore immutable."""

    def __str__(self) -> str:  # pragma: no cover - overridden
        raise NotImplementedError


@dataclass(frozen=True)
class Var(Expr):
    def __str__(self):
        return "z"


@dataclass(frozen=True)
class Const(Expr):
    value: complex

    def __str__(self):
        v = complex(self.value)
        if v.imag == 0:
            return _fmt(v.real)
        if v.real == 0:
            return f"{_fmt(v.imag)}i"
        return f"({_fmt(v.real)}+{_fmt(v.imag)}i)"


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr

    def __str__(self):
        return f"({self.left} + {self.right})"


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr

    def __str__(self):
        return f"(-{self.operand})"


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr

    def __str__(self):
        return f"{self.left}*{self.right}"


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr

    def __str__(self):
        return f"{self.left}/({self.right})"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ExprError("exponent must be a non-negative integer")

    def __str__(self):
        return f"{self.base}^{self.exponent}"


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr

    def __str__(self):
        return f"exp({self.arg})"


@dataclass(frozen=True)
class Sin(Expr):
    arg: Expr

    def __str__(self):
        return f"sin({self.arg})"


@dataclass(frozen=True)
class Cos(Expr):
    arg: Expr

    def __str__(self):
        return f"cos({self.arg})"


@dataclass(frozen=True)
class BESeries(Expr):
    """g^(order)(arg) for g(z) = sum (z/2^k)^(2^k); order 1 is the termwise derivative."""

    arg: Expr
    order: int = 0

    def __str__(self):
        if self.order == 0:
            return f"beg({self.arg})"
        return f"beg[{self.order}]({self.arg})"


def _fmt(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() and abs(x) < 1e15 else repr(float(x))


# --------------------------------------------------------------------------
# parser

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)(i?)|([A-Za-z_]\w*)|(.))")
_FUNCS = {"exp": Exp, "sin": Sin, "cos": Cos, "beg": BESeries}


class _Parser:
    def __init__(self, source: str):
        self.src = source
        self.tokens = []  # (kind, value, offset)
        pos = 0
        while pos < len(source):
            m = _TOKEN.match(source, pos)
            if m.group(0).strip() == "":
                break
            start = len(source[: m.start(m.lastindex)].encode("utf-8")) + 1
            if m.group(1) is not None:
                self.tokens.append(("num", (m.group(1), m.group(2)), start))
            elif m.group(3) is not None:
                self.tokens.append(("name", m.group(3), start))
            else:
                self.tokens.append(("op", m.group(4), start))
            pos = m.end()
        self.end_offset = len(source.encode("utf-8")) + 1
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("end", None, self.end_offset)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, op: str):
        kind, val, off = self.take()
        if kind != "op" or val != op:
            what = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {op!r}, found {what}", off)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", off)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                right = self.term()
                left = Add(left, right) if val == "+" else Add(left, Neg(right))
            else:
                return left

    def term(self) -> Expr:
        left = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                right = self.unary()
                left = Mul(left, right) if val == "*" else Div(left, right)
            else:
                return left

    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val, off = self.take()
            if kind == "op" and val == "-":
                raise ParseError("negative exponent", off)
            if kind != "num":
                what = "end of input" if kind == "end" else repr(val)
                raise ParseError(f"expected integer exponent, found {what}", off)
            digits, imag = val
            if imag or not digits.isdigit():
                raise ParseError(f"non-integer exponent {digits + imag!r}", off)
            return Pow(base, int(digits))
        return base

    def atom(self) -> Expr:
        kind, val, off = self.take()
        if kind == "num":
            digits, imag = val
            x = float(digits)
            return Const(complex(0, x) if imag else complex(x))
        if kind == "name":
            if val == "z":
                return Var()
            if val == "i":
                return Const(1j)
            if val in _FUNCS:
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return _FUNCS[val](inner)
            raise ParseError(f"unknown identifier {val!r}", off)
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        what = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {what}", off)


def parse(source: str) -> Expr:
    """Parse an expression in the variable ``z``."""
    return _Parser(source).parse()


# --------------------------------------------------------------------------
# ordinary evaluation

def evaluate(expr: Expr, z):
    """Evaluate in plain complex floating point; overflow gives inf, 0 denominators raise."""
    zz = np.asarray(z, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        out = _eval(expr, zz)
    out = np.broadcast_to(out, zz.shape)
    if out.ndim == 0:
        return complex(out)
    return np.array(out)


def _eval(e: Expr, z):
    if isinstance(e, Var):
        return z
    if isinstance(e, Const):
        return np.complex128(e.value)
    if isinstance(e, Add):
        return _eval(e.left, z) + _eval(e.right, z)
    if isinstance(e, Neg):
        return -_eval(e.operand, z)
    if isinstance(e, Mul):
        return _eval(e.left, z) * _eval(e.right, z)
    if isinstance(e, Div):
        den = _eval(e.right, z)
        if np.any(den == 0):
            raise DivisionByZero(f"denominator {e.right} vanishes")
        return _eval(e.left, z) / den
    if isinstance(e, Pow):
        return _eval(e.base, z) ** e.exponent
    if isinstance(e, Exp):
        return np.exp(_eval(e.arg, z))
    if isinstance(e, Sin):
        return np.sin(_eval(e.arg, z))
    if isinstance(e, Cos):
        return np.cos(_eval(e.arg, z))
    if isinstance(e, BESeries):
        return series_value(_eval(e.arg, z), e.order)
    raise TypeError(f"unknown node {e!r}")


# --------------------------------------------------------------------------
# log-space evaluation

def eval_log(expr: Expr, z) -> LogComplex:
    """Evaluate ``log f(z)`` at a single point as a :class:`LogComplex`."""
    la = eval_log_array(expr, np.asarray(complex(z)).reshape(1), strict=True)
    return la.item(0)


def eval_log_array(expr: Expr, z, strict: bool = False) -> LogArray:
    """Vectorized log-space evaluation.

    With ``strict`` a vanishing denominator raises :class:`DivisionByZero`;
    otherwise the affected entries come back with a NaN log-modulus.
    """
    zz = np.asarray(z, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _elog(expr, zz, strict)


def _elog(e: Expr, z, strict: bool) -> LogArray:
    if isinstance(e, Var):
        return LogArray.from_complex(z)
    if isinstance(e, Const):
        return LogArray.constant(e.value, z.shape)
    if isinstance(e, Add):
        return _elog(e.left, z, strict).add(_elog(e.right, z, strict))
    if isinstance(e, Neg):
        return _elog(e.operand, z, strict).neg()
    if isinstance(e, Mul):
        return _elog(e.left, z, strict).mul(_elog(e.right, z, strict))
    if isinstance(e, Div):
        den = _elog(e.right, z, strict)
        if np.any(den.is_zero):
            if strict:
                raise DivisionByZero(f"denominator {e.right} vanishes")
        out = _elog(e.left, z, strict).div(den)
        return LogArray(np.where(den.is_zero, np.nan, out.log_mod), out.arg,
                        out.is_zero & ~den.is_zero)
    if isinstance(e, Pow):
        return _elog(e.base, z, strict).power(e.exponent)
    if isinstance(e, Exp):
        w = _elog(e.arg, z, strict).to_complex()
        return LogArray(w.real, w.imag, np.zeros(z.shape, bool))
    if isinstance(e, (Sin, Cos)):
        return _trig_log(_elog(e.arg, z, strict).to_complex(), isinstance(e, Sin))
    if isinstance(e, BESeries):
        return LogArray.from_complex(series_value(_elog(e.arg, z, strict).to_complex(), e.order))
    raise TypeError(f"unknown node {e!r}")


def _trig_log(w, is_sin: bool) -> LogArray:
    w = np.asarray(w, dtype=complex)
    direct = LogArray.from_complex(np.sin(w) if is_sin else np.cos(w))
    x, y = w.real, w.imag
    up = y > TRIG_EXP_SWITCH
    down = y < -TRIG_EXP_SWITCH
    if not (np.any(up) or np.any(down)):
        return direct
    sign = -1.0 if is_sin else 1.0
    # y >> 0: sin w = (i/2) e^{-iw} (1 - e^{2iw}),  cos w = (1/2) e^{-iw} (1 + e^{2iw})
    # y << 0: sin w = (-i/2) e^{iw} (1 - e^{-2iw}), cos w = (1/2) e^{iw} (1 + e^{-2iw})
    ay = np.abs(y)
    q = np.where(up, np.exp(2j * w * up), np.exp(-2j * w * down))
    corr = 1.0 + sign * q
    lm = ay - np.log(2.0) + np.log(np.abs(corr))
    if is_sin:
        arg = np.where(up, np.pi / 2 - x, x - np.pi / 2)
    else:
        arg = np.where(up, -x, x)
    arg = arg + np.angle(corr)
    big = up | down
    return LogArray(np.where(big, lm, direct.log_mod), np.where(big, arg, direct.arg),
                    np.where(big, False, direct.is_zero))


# --------------------------------------------------------------------------
# symbolic differentiation

ZERO = Const(0j)
ONE = Const(1 + 0j)


def _is_const(e: Expr, v: complex) -> bool:
    return isinstance(e, Const) and complex(e.value) == v


def _add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Add(a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if isinstance(b, Const):
        a, b = b, a
    if isinstance(a, Const) and isinstance(b, Mul) and isinstance(b.left, Const):
        return _mul(Const(a.value * b.left.value), b.right)
    return Mul(a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def derivative(e: Expr) -> Expr:
    """Symbolic d/dz."""
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Add):
        return _add(derivative(e.left), derivative(e.right))
    if isinstance(e, Neg):
        d = derivative(e.operand)
        return ZERO if _is_const(d, 0) else _neg(d)
    if isinstance(e, Mul):
        return _add(_mul(derivative(e.left), e.right), _mul(e.left, derivative(e.right)))
    if isinstance(e, Div):
        num = _add(_mul(derivative(e.left), e.right), _neg(_mul(e.left, derivative(e.right))))
        if _is_const(num, 0):
            return ZERO
        return Div(num, Pow(e.right, 2))
    if isinstance(e, Pow):
        n = e.exponent
        if n == 0:
            return ZERO
        inner = derivative(e.base)
        if n == 1:
            return inner
        lead = e.base if n == 2 else Pow(e.base, n - 1)
        return _mul(Const(complex(n)), _mul(lead, inner))
    if isinstance(e, Exp):
        return _mul(derivative(e.arg), e)
    if isinstance(e, Sin):
        return _mul(derivative(e.arg), Cos(e.arg))
    if isinstance(e, Cos):
        d = derivative(e.arg)
        return ZERO if _is_const(d, 0) else _neg(_mul(d, Sin(e.arg)))
    if isinstance(e, BESeries):
        return _mul(derivative(e.arg), BESeries(e.arg, e.order + 1))
    raise TypeError(f"unknown node {e!r}")


Node = Union[Var, Const, Add, Neg, Mul, Div, Pow, Exp, Sin, Cos, BESeries]
