"""The lacunary series g(z) = sum_{k>=1} (z/2^k)^(2^k) and its derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_ABS_Z = 700.0
DEFAULT_TOL = 1e-16


class SeriesRangeError(ValueError):
    """|z| is beyond the range where every partial term fits in a double."""


@dataclass(frozen=True)
class SeriesTruncation:
    K: int
    tail_bound: float


def tail_bound(r: float, K: int) -> float:
    """Bound 2*(r/2^(K+1))^(2^(K+1)) on sum_{k>K} (r/2^k)^(2^k), valid once 2^(K+1) >= 2r."""
    if r == 0.0:
        return 0.0
    n = 2 ** (K + 1)
    lb = math.log(2.0) + n * (math.log(r) - (K + 1) * math.log(2.0))
    return math.exp(lb) if lb < 700 else math.inf


def truncation(r: float, tol: float = DEFAULT_TOL) -> SeriesTruncation:
    """Smallest K with 2^(K+1) >= 2r and tail bound below ``tol``."""
    if r > MAX_ABS_Z:
        raise SeriesRangeError(f"|z| = {r:g} exceeds {MAX_ABS_Z:g}")
    K = 1
    while 2 ** (K + 1) < 2 * r or tail_bound(r, K) >= tol:
        K += 1
    return SeriesTruncation(K, tail_bound(r, K))


def _falling(n: int, m: int) -> int:
    out = 1
    for q in range(m):
        out *= n - q
    return out


def series_terms(z, K: int, order: int = 0):
    """Array of the first K terms of the ``order``-th derivative, stacked on axis 0."""
    z = np.asarray(z, dtype=complex)
    terms = []
    for k in range(1, K + 1):
        n = 2**k
        if n < order:
            terms.append(np.zeros_like(z))
            continue
        coef = _falling(n, order) / 2.0 ** (k * order)
        p = n - order
        w = z / 2.0**k
        if p == 0:
            terms.append(np.full_like(z, coef))
            continue
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            terms.append(coef * w**p)
    return np.stack(terms)


def series_value(z, order: int = 0, tol: float = DEFAULT_TOL):
    """Evaluate g^(order)(z) for scalar or array z."""
    z = np.asarray(z, dtype=complex)
    r = float(np.max(np.abs(z))) if z.size else 0.0
    K = truncation(r, tol).K + (1 if order else 0)
    total = series_terms(z, K, order).sum(axis=0)
    if total.ndim == 0:
        return complex(total)
    return total
