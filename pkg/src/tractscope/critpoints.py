"""Zero counting by the argument principle, zero location, and per-tract critical counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .expr import Const, Exp, Expr, Mul, Neg, derivative, eval_log_array
from .field import ScalarField

RESIDUAL_TOL = 0.05
MAX_INCREMENT = math.pi / 2
N_START = 64
N_MAX = 2**19
PERTURB_OFFSETS = (0.5, -0.5, 1.0)     # in units of the perturbation cell
MICRO_RADIUS = 1e-3
POSITION_TOL = 1e-12


class WindingError(ArithmeticError):
    pass


class BoundaryZeroError(WindingError):
    """A zero of the function sits on (or numerically at) the contour."""


class NonIntegerWinding(WindingError):
    def __init__(self, value: float):
        super().__init__(f"winding {value:.4f} is not within {RESIDUAL_TOL} of an integer")
        self.value = value


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def corners(self):
        return (complex(self.x0, self.y0), complex(self.x1, self.y0),
                complex(self.x1, self.y1), complex(self.x0, self.y1))

    def grow(self, d: float) -> "Rect":
        return Rect(self.x0 - d, self.x1 + d, self.y0 - d, self.y1 + d)

    def contains(self, z: complex) -> bool:
        return self.x0 < z.real < self.x1 and self.y0 < z.imag < self.y1

    @property
    def size(self) -> float:
        return max(self.x1 - self.x0, self.y1 - self.y0)


@dataclass
class ZeroCount:
    rectangle: Rect
    count: int
    refined_zeros: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)


# --------------------------------------------------------------------------
# argument continuation

def _edge_change(d: Expr, path: Callable[[np.ndarray], np.ndarray]) -> float:
    """Continuous change of arg d along path(s), s in [0, 1].

    The sample count doubles until every reduced increment is below pi/2 and
    one further doubling leaves the total unchanged.
    """
    n = N_START
    prev_total = None
    while n <= N_MAX:
        s = np.linspace(0.0, 1.0, n + 1)
        la = eval_log_array(d, path(s))
        if np.any(la.is_zero) or not np.all(np.isfinite(la.log_mod)):
            raise BoundaryZeroError("function vanishes or is not finite on the contour")
        inc = np.remainder(np.diff(la.arg) + math.pi, 2 * math.pi) - math.pi
        total = float(inc.sum())
        ok = float(np.max(np.abs(inc))) < MAX_INCREMENT
        if ok and prev_total is not None and abs(total - prev_total) < 1e-6:
            return total
        prev_total = total if ok else None
        n *= 2
    raise BoundaryZeroError("argument increments did not resolve; zero on or near the contour")


def _segment(a: complex, b: complex):
    return lambda s: a + (b - a) * s


def winding_along(d: Expr, vertices) -> float:
    """Winding number (as a float) of d along the closed polygon ``vertices``."""
    total = 0.0
    vs = list(vertices)
    for a, b in zip(vs, vs[1:] + vs[:1]):
        total += _edge_change(d, _segment(a, b))
    return total / (2 * math.pi)


def winding_on_circle(d: Expr, centre: complex, radius: float) -> float:
    path = lambda s: centre + radius * np.exp(2j * math.pi * s)
    return _edge_change(d, path) / (2 * math.pi)


def _rounded(w: float) -> int:
    k = int(round(w))
    if abs(w - k) >= RESIDUAL_TOL:
        raise NonIntegerWinding(w)
    return k


def _strip(e: Expr) -> Optional[Expr]:
    if isinstance(e, Exp):
        return None
    if isinstance(e, Const):
        return None if e.value != 0 else e
    if isinstance(e, Neg):
        return _strip(e.operand)
    if isinstance(e, Mul):
        a, b = _strip(e.left), _strip(e.right)
        if a is None:
            return b
        if b is None:
            return a
        return Mul(a, b)
    return e


def zero_equivalent(d: Expr) -> Expr:
    """d with its exp(.) and nonzero constant factors removed: same zeros, same multiplicities.

    Such factors never vanish and contribute no winding, but their phase can
    spin far too fast to sample.
    """
    s = _strip(d)
    return Const(1.0) if s is None else s


def count_zeros(d: Expr, rect: Rect, cell: Optional[float] = None) -> int:
    """Number of zeros of d inside ``rect``, with multiplicity.

    If d vanishes on the boundary the rectangle is moved outward or inward by
    a fixed sequence of offsets (half a cell first) and the count retried.
    """
    if cell is None:
        cell = rect.size / 512
    attempts = [rect] + [rect.grow(k * cell) for k in PERTURB_OFFSETS]
    last = None
    for r in attempts:
        try:
            return _rounded(winding_along(d, r.corners))
        except BoundaryZeroError as exc:
            last = exc
    raise BoundaryZeroError(f"zero on the boundary of {rect} after {len(PERTURB_OFFSETS)} retries") from last


def count_zeros_circle(d: Expr, centre: complex, radius: float) -> int:
    return _rounded(winding_on_circle(d, centre, radius))


# --------------------------------------------------------------------------
# location

def _newton_ratio(num: Expr, den: Expr, z: complex) -> complex:
    """num(z)/den(z) computed in log space, so huge exponential factors cancel."""
    zz = np.array([z])
    a = eval_log_array(num, zz)
    b = eval_log_array(den, zz)
    if a.is_zero[0]:
        return 0j
    if b.is_zero[0]:
        raise ZeroDivisionError
    lm = a.log_mod[0] - b.log_mod[0]
    return complex(math.exp(lm) * complex(math.cos(a.arg[0] - b.arg[0]),
                                          math.sin(a.arg[0] - b.arg[0]))) if lm < 700 else complex("inf")


def _newton(num: Expr, den: Expr, z: complex, iters: int = 60) -> Optional[complex]:
    for _ in range(iters):
        try:
            step = _newton_ratio(num, den, z)
        except ZeroDivisionError:
            return None
        if not np.isfinite(step):
            return None
        z = z - step
        if abs(step) <= POSITION_TOL * max(1.0, abs(z)):
            return z
    return z


def _schroeder(d: Expr, d1: Expr, d2: Expr, z: complex, iters: int = 60) -> Optional[complex]:
    """Newton on d/d', which has only simple zeros (multiplicity-robust)."""
    for _ in range(iters):
        zz = np.array([z])
        a = eval_log_array(d, zz).to_complex()[0]
        if a == 0:
            return z
        try:
            r = _newton_ratio(d, d1, z)           # d/d'
            q = _newton_ratio(d2, d1, z)          # d''/d'
        except ZeroDivisionError:
            return None
        denom = 1 - r * q
        if denom == 0 or not np.isfinite(denom) or not np.isfinite(r):
            return None
        step = r / denom
        z = z - step
        if abs(step) <= 1e-14 * max(1.0, abs(z)):
            return z
    return z


class _Derivs:
    def __init__(self, d: Expr):
        self.chain = [d]

    def __getitem__(self, k: int) -> Expr:
        while len(self.chain) <= k:
            self.chain.append(derivative(self.chain[-1]))
        return self.chain[k]


def _refine_cell(ds: _Derivs, rect: Rect, count: int):
    """Try to explain all ``count`` zeros in rect by one point; None if that fails."""
    z = _schroeder(ds[0], ds[1], ds[2], complex((rect.x0 + rect.x1) / 2, (rect.y0 + rect.y1) / 2))
    if z is None or not rect.grow(1e-9 * rect.size).contains(z):
        return None
    try:
        mult = count_zeros_circle(ds[0], z, MICRO_RADIUS)
    except WindingError:
        return None
    if mult != count:
        return None
    if mult > 1:
        # a zero of multiplicity m is a simple zero of the (m-1)-th derivative
        zp = _newton(ds[mult - 1], ds[mult], z)
        if zp is not None and abs(zp - z) < MICRO_RADIUS:
            z = zp
    else:
        zp = _newton(ds[0], ds[1], z)
        if zp is not None and abs(zp - z) < MICRO_RADIUS:
            z = zp
    return (z, mult)


def _split(rect: Rect):
    xm = 0.5 * (rect.x0 + rect.x1) + 1.37e-3 * (rect.x1 - rect.x0)
    ym = 0.5 * (rect.y0 + rect.y1) + 1.13e-3 * (rect.y1 - rect.y0)
    return [Rect(rect.x0, xm, rect.y0, ym), Rect(xm, rect.x1, rect.y0, ym),
            Rect(rect.x0, xm, ym, rect.y1), Rect(xm, rect.x1, ym, rect.y1)]


def locate_zeros(d: Expr, rect: Rect, target_count: Optional[int] = None,
                 max_depth: int = 12) -> ZeroCount:
    """Quadtree + Newton refinement of the zeros of d in ``rect``.

    Multiplicities come from the winding on a circle of radius 1e-3 about
    each converged point.
    """
    if target_count is None:
        target_count = count_zeros(d, rect)
    ds = _Derivs(d)
    result = ZeroCount(rect, target_count)
    stack = [(rect, target_count, 0)]
    while stack:
        r, k, depth = stack.pop(0)
        if k == 0:
            continue
        hit = _refine_cell(ds, r, k)
        if hit is not None:
            result.refined_zeros.append(hit)
            continue
        if depth >= max_depth:
            result.unresolved.append((r, k))
            continue
        for sub in _split(r):
            try:
                c = count_zeros(d, sub, cell=r.size / 4096)
            except WindingError:
                result.unresolved.append((sub, None))
                continue
            stack.append((sub, c, depth + 1))
    result.refined_zeros = _merge(result.refined_zeros)
    return result


def _merge(zeros):
    out = []
    for z, m in sorted(zeros, key=lambda t: (t[0].real, t[0].imag)):
        if out and abs(out[-1][0] - z) < 10 * MICRO_RADIUS:
            continue
        out.append((z, m))
    return out


# --------------------------------------------------------------------------
# tracts

@dataclass
class TractCriticalCount:
    count: int
    zeros: list
    tiles: int


def tract_critical_count(tract, d: Expr, fld: ScalarField, f: Optional[Expr] = None,
                         tile: int = 32, u_tol: float = 1e-9) -> TractCriticalCount:
    """Critical points of f (zeros of ``d`` = f') inside a tract region.

    Tiles are rectangles of grid nodes; tile edges sit on a slightly shifted
    half-grid so neighbouring tiles share edges exactly and never pass
    through grid nodes.  Tiles wholly inside the tract are counted;
    straddling tiles with a non-zero count are split down to single nodes,
    where each located zero is kept only if u > ``u_tol`` there and its
    nearest node belongs to the tract.  u is evaluated from ``f`` when given,
    otherwise interpolated from the field.
    """
    d = zero_equivalent(d)
    w = fld.window
    mask = tract.mask
    ii, jj = np.nonzero(mask)
    if ii.size == 0:
        return TractCriticalCount(0, [], 0)
    shift = 0.0137
    cell = 0.25 * min(w.dx, w.dy)

    def rect_of(i0, i1, j0, j1):
        return Rect(w.x_min + (i0 - 0.5 + shift) * w.dx, w.x_min + (i1 + 0.5 + shift) * w.dx,
                    w.y_min + (j0 - 0.5 + shift) * w.dy, w.y_min + (j1 + 0.5 + shift) * w.dy)

    total = 0
    zeros = []
    tiles = 0
    def u_at(z: complex) -> float:
        if f is None:
            return float(fld.bilinear(np.array([z]))[0])
        la = eval_log_array(f, np.array([z]))
        return -math.inf if la.is_zero[0] else float(la.log_mod[0]) - fld.log_R

    stack = []
    for i0 in range(int(ii.min()), int(ii.max()) + 1, tile):
        for j0 in range(int(jj.min()), int(jj.max()) + 1, tile):
            stack.append((i0, min(i0 + tile - 1, int(ii.max())), j0, min(j0 + tile - 1, int(jj.max()))))
    while stack:
        i0, i1, j0, j1 = stack.pop(0)
        block = mask[i0:i1 + 1, j0:j1 + 1]
        if not block.any():
            continue
        tiles += 1
        rect = rect_of(i0, i1, j0, j1)
        c = count_zeros(d, rect, cell=cell)
        if c == 0:
            continue
        if block.all():
            total += c
            zeros.extend(locate_zeros(d, rect, c).refined_zeros)
            continue
        if i1 - i0 <= 1 and j1 - j0 <= 1:
            found = locate_zeros(d, rect, c)
            for z, mult in found.refined_zeros:
                zi, zj, inside = w.nearest_index(np.array([z]))
                if inside[0] and mask[zi[0], zj[0]] and u_at(z) > u_tol:
                    total += mult
                    zeros.append((z, mult))
            continue
        im = (i0 + i1) // 2
        jm = (j0 + j1) // 2
        for a, b in ((i0, im), (im + 1, i1)):
            for c0, c1 in ((j0, jm), (jm + 1, j1)):
                if a <= b and c0 <= c1:
                    stack.append((a, b, c0, c1))
    return TractCriticalCount(total, _merge(zeros), tiles)
