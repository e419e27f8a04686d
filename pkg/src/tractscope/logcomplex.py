"""Overflow-safe complex values stored as (log-modulus, argument).

Scalar values use :class:`LogComplex`.  Whole grids go through
:class:`LogArray`, which holds the same three components as numpy arrays so
that field sampling stays vectorized.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# relative size of 1 + d below which a sum is treated as exact cancellation
CANCEL_TOL = 4.0 * np.finfo(float).eps


def wrap_angle(theta):
    """Reduce an angle (scalar or array) to (-pi, pi]."""
    w = np.remainder(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    if np.ndim(w) == 0:
        return float(w)
    return w


@dataclass(frozen=True)
class LogComplex:
    """A complex number ``exp(log_mod + i*arg)``, or zero when ``is_zero``.

    ``arg`` is kept unreduced when it comes out of a continuation; call
    :meth:`normalized` to reduce it explicitly.
    """

    log_mod: float
    arg: float
    is_zero: bool = False

    @classmethod
    def zero(cls) -> "LogComplex":
        return cls(0.0, 0.0, True)

    @classmethod
    def from_complex(cls, w: complex) -> "LogComplex":
        w = complex(w)
        if w == 0:
            return cls.zero()
        return cls(math.log(abs(w)), cmath.phase(w))

    def to_complex(self) -> complex:
        if self.is_zero:
            return 0j
        return cmath.rect(math.exp(self.log_mod), self.arg)

    def normalized(self) -> "LogComplex":
        if self.is_zero:
            return self
        return LogComplex(self.log_mod, wrap_angle(self.arg))

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        if self.is_zero or other.is_zero:
            return LogComplex.zero()
        return LogComplex(self.log_mod + other.log_mod, self.arg + other.arg)

    def __truediv__(self, other: "LogComplex") -> "LogComplex":
        if other.is_zero:
            raise ZeroDivisionError("division by a zero LogComplex")
        if self.is_zero:
            return self
        return LogComplex(self.log_mod - other.log_mod, self.arg - other.arg)

    def __neg__(self) -> "LogComplex":
        if self.is_zero:
            return self
        return LogComplex(self.log_mod, self.arg + math.pi)

    def __add__(self, other: "LogComplex") -> "LogComplex":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        big, small = (self, other) if self.log_mod >= other.log_mod else (other, self)
        s = 1.0 + cmath.exp(complex(small.log_mod - big.log_mod, small.arg - big.arg))
        if abs(s) <= CANCEL_TOL:
            return LogComplex.zero()
        return LogComplex(big.log_mod + math.log(abs(s)), big.arg + cmath.phase(s))


class LogArray(NamedTuple):
    """Vectorized LogComplex: parallel arrays of log-modulus, argument, zero flag."""

    log_mod: np.ndarray
    arg: np.ndarray
    is_zero: np.ndarray

    @classmethod
    def from_complex(cls, w) -> "LogArray":
        w = np.asarray(w, dtype=complex)
        zero = w == 0
        with np.errstate(divide="ignore"):
            lm = np.log(np.abs(w))
        return cls(np.where(zero, 0.0, lm), np.where(zero, 0.0, np.angle(w)), zero)

    @classmethod
    def constant(cls, w: complex, shape) -> "LogArray":
        lc = LogComplex.from_complex(w)
        return cls(np.full(shape, lc.log_mod), np.full(shape, lc.arg),
                   np.full(shape, lc.is_zero))

    def to_complex(self) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            w = np.exp(self.log_mod + 1j * self.arg)
        return np.where(self.is_zero, 0j, w)

    def item(self, index=()) -> LogComplex:
        return LogComplex(float(self.log_mod[index]), float(self.arg[index]),
                          bool(self.is_zero[index]))

    def mul(self, other: "LogArray") -> "LogArray":
        return LogArray(self.log_mod + other.log_mod, self.arg + other.arg,
                        self.is_zero | other.is_zero)

    def div(self, other: "LogArray") -> "LogArray":
        return LogArray(self.log_mod - other.log_mod, self.arg - other.arg,
                        self.is_zero)

    def neg(self) -> "LogArray":
        return LogArray(self.log_mod, self.arg + np.pi, self.is_zero)

    def power(self, n: int) -> "LogArray":
        if n == 0:
            shape = np.shape(self.log_mod)
            return LogArray(np.zeros(shape), np.zeros(shape), np.zeros(shape, bool))
        return LogArray(n * self.log_mod, n * self.arg, self.is_zero)

    def add(self, other: "LogArray") -> "LogArray":
        """Log-sum-exp with phase; exact cancellation sets the zero flag."""
        a_big = (self.log_mod >= other.log_mod) | other.is_zero
        a_big &= ~self.is_zero
        bl = np.where(a_big, self.log_mod, other.log_mod)
        ba = np.where(a_big, self.arg, other.arg)
        sl = np.where(a_big, other.log_mod, self.log_mod)
        sa = np.where(a_big, other.arg, self.arg)
        small_zero = np.where(a_big, other.is_zero, self.is_zero)
        with np.errstate(invalid="ignore", over="ignore"):
            d = np.exp((sl - bl) + 1j * (sa - ba))
        d = np.where(small_zero, 0j, d)
        s = 1.0 + d
        mag = np.abs(s)
        both_zero = self.is_zero & other.is_zero
        cancel = (mag <= CANCEL_TOL) & ~small_zero
        with np.errstate(divide="ignore", invalid="ignore"):
            lm = bl + np.log(mag)
        zero = both_zero | cancel
        return LogArray(np.where(zero, 0.0, lm), np.where(zero, 0.0, ba + np.angle(s)),
                        zero)
