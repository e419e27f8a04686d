"""Exactly solvable tract models built from Poisson kernels on the unit disc.

A model is ``f(t) = R e^{i theta} exp(sum_k c_k (zeta_k + t)/(zeta_k - t))`` on
the disc, so that ``log|f/R|`` is a positive combination of Poisson kernels
with poles at the unit-modulus points ``zeta_k``.  The half-plane helpers
describe the same kind of potential after the Cayley map
``t -> (1 + t)/(1 - t)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .logcomplex import LogComplex

UNIT_TOL = 1e-12
DEGREE_DROP_RTOL = 1e-10
PAIRING_TOL = 1e-8


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class PoissonModel:
    R: float
    theta: float
    zetas: tuple
    weights: tuple

    def __post_init__(self):
        zs = tuple(complex(z) for z in self.zetas)
        ws = tuple(float(c) for c in self.weights)
        object.__setattr__(self, "zetas", zs)
        object.__setattr__(self, "weights", ws)
        if not self.R > 0:
            raise ModelError("R must be positive")
        if len(zs) == 0 or len(zs) != len(ws):
            raise ModelError("need n >= 1 singularities with one weight each")
        if any(abs(abs(z) - 1) >= UNIT_TOL for z in zs):
            raise ModelError("singularities must lie on the unit circle")
        if any(not c > 0 for c in ws):
            raise ModelError("weights must be positive")
        if len(set(np.round(zs, 12))) != len(zs):
            raise ModelError("singularities must be distinct")

    @property
    def n(self) -> int:
        return len(self.zetas)

    @classmethod
    def from_angles(cls, angles, weights, R=1.0, theta=0.0) -> "PoissonModel":
        return cls(R, theta, tuple(cmath.exp(1j * a) for a in angles), tuple(weights))

    @classmethod
    def from_dict(cls, d: dict) -> "PoissonModel":
        """Flat record: {"R", "theta", "singularities": [[re, im, c], ...]}.

        Singularities may also be [re, im] pairs with a separate "weights" list.
        """
        try:
            sing = d["singularities"]
            zs = [complex(s[0], s[1]) for s in sing]
            if "weights" in d:
                cs = [float(c) for c in d["weights"]]
            else:
                cs = [float(s[2]) for s in sing]
            zs = [z / abs(z) if abs(abs(z) - 1) < 1e-9 else z for z in zs]
            return cls(float(d.get("R", 1.0)), float(d.get("theta", 0.0)), tuple(zs), tuple(cs))
        except (KeyError, TypeError, IndexError) as exc:
            raise ModelError(f"malformed model record: {exc}") from exc

    def to_dict(self) -> dict:
        return {"R": self.R, "theta": self.theta,
                "singularities": [[z.real, z.imag, c] for z, c in zip(self.zetas, self.weights)]}


def _check_disc(t):
    if np.any(np.abs(t) >= 1):
        raise ModelError("t must lie in the open unit disc")


def _herglotz(model: PoissonModel, t):
    t = np.asarray(t, dtype=complex)
    return sum(c * (z + t) / (z - t) for z, c in zip(model.zetas, model.weights))


def model_u(model: PoissonModel, t):
    """sum_k c_k Re((zeta_k + t)/(zeta_k - t)) at points of the open disc."""
    _check_disc(t)
    u = np.real(_herglotz(model, t))
    return float(u) if np.ndim(u) == 0 else u


def model_eval(model: PoissonModel, t) -> LogComplex:
    _check_disc(t)
    h = complex(_herglotz(model, t))
    return LogComplex(math.log(model.R) + h.real, model.theta + h.imag)


def model_eval_direct(model: PoissonModel, t) -> complex:
    """Plain complex evaluation of the model; used as an independent check."""
    return model.R * cmath.exp(1j * model.theta) * cmath.exp(complex(_herglotz(model, t)))


# --------------------------------------------------------------------------
# critical points

@dataclass
class CriticalPoints:
    roots: list                 # (root, in_disc) pairs
    degree: int                 # actual polynomial degree
    nominal_degree: int         # 2n - 2
    coefficients: np.ndarray = field(repr=False, default=None)

    @property
    def at_infinity(self) -> int:
        return self.nominal_degree - self.degree

    @property
    def in_disc(self) -> int:
        return sum(1 for _, inside in self.roots if inside)

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)


def critical_polynomial(model: PoissonModel) -> np.ndarray:
    """Ascending coefficients of sum_k c_k 2 zeta_k prod_{j != k} (zeta_j - t)^2."""
    total = np.zeros(1, dtype=complex)
    for k, (zk, ck) in enumerate(zip(model.zetas, model.weights)):
        term = np.array([2 * ck * zk], dtype=complex)
        for j, zj in enumerate(model.zetas):
            if j != k:
                term = P.polymul(term, P.polypow(np.array([zj, -1], dtype=complex), 2))
        total = P.polyadd(total, term)
    return total


def _trim(coeffs: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    k = len(coeffs)
    while k > 1 and abs(coeffs[k - 1]) <= DEGREE_DROP_RTOL * scale:
        k -= 1
    return coeffs[:k]


def companion_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of an ascending-coefficient polynomial via companion-matrix eigenvalues."""
    c = np.asarray(coeffs, dtype=complex)
    deg = len(c) - 1
    if deg < 1:
        return np.zeros(0, dtype=complex)
    monic = c[:-1] / c[-1]
    comp = np.zeros((deg, deg), dtype=complex)
    comp[1:, :-1] = np.eye(deg - 1)
    comp[:, -1] = -monic
    roots = np.linalg.eigvals(comp)
    # two Newton polishing steps on the original polynomial
    dc = P.polyder(c)
    for _ in range(2):
        fv = P.polyval(roots, c)
        dv = P.polyval(roots, dc)
        ok = dv != 0
        roots = np.where(ok, roots - np.where(ok, fv / np.where(ok, dv, 1), 0), roots)
    return roots


def model_critical_points(model: PoissonModel) -> CriticalPoints:
    """Zeros of the derivative of the exponent, with in-disc flags.

    Leading coefficients that cancel (relative size < 1e-10) are dropped and
    the missing roots are counted as roots at infinity.
    """
    coeffs = _trim(critical_polynomial(model))
    nominal = 2 * model.n - 2
    roots = companion_roots(coeffs) if model.n > 1 else np.zeros(0, dtype=complex)
    roots = sorted(roots, key=lambda r: (round(abs(r), 12), round(cmath.phase(r), 12)))
    out = []
    for r in roots:
        if abs(abs(r) - 1) < 1e-9:
            raise ModelError(f"critical point {r} on the unit circle")
        out.append((complex(r), bool(abs(r) < 1)))
    return CriticalPoints(out, len(coeffs) - 1 if model.n > 1 else 0, nominal, coeffs)


def check_reflection_pairing(model: PoissonModel, roots, tol: float = PAIRING_TOL) -> bool:
    """True iff the roots are invariant under t -> 1/conj(t), 0 pairing with infinity."""
    pts = [r for r, _ in roots] if roots and isinstance(next(iter(roots)), tuple) else list(roots)
    pts = [complex(r) for r in pts]
    n_inf = 2 * model.n - 2 - len(pts)
    if n_inf < 0:
        return False
    zeros = [r for r in pts if abs(r) < tol]
    if len(zeros) != n_inf:
        return False
    rest = [r for r in pts if abs(r) >= tol]
    used = [False] * len(rest)
    for a, r in enumerate(rest):
        if used[a]:
            continue
        image = 1 / r.conjugate()
        best, best_d = None, math.inf
        for b, s in enumerate(rest):
            if b != a and not used[b]:
                dist = abs(s - image) / max(1.0, abs(image))
                if dist < best_d:
                    best, best_d = b, dist
        if best is None or best_d > tol:
            return False
        used[a] = used[best] = True
    return True


# --------------------------------------------------------------------------
# covering fibres

def fiber_enumerate(model: PoissonModel, w: complex, j_range: Sequence[int]) -> list:
    """Preimages t_j of w under a one-singularity model, one per sheet j."""
    if model.n != 1:
        raise ModelError("fibre enumeration needs a single singularity")
    w = complex(w)
    if abs(w) <= model.R:
        raise ModelError("|w| must exceed R")
    zeta, c = model.zetas[0], model.weights[0]
    base = cmath.log(w / model.R) - 1j * model.theta
    out = []
    for j in j_range:
        s = base + 2j * math.pi * j
        out.append(zeta * (s - c) / (s + c))
    return out


# --------------------------------------------------------------------------
# horodiscs and the half-plane potential

@dataclass(frozen=True)
class Horodisc:
    c: float
    Rj: float
    center: float
    radius: float

    def contains(self, t) -> np.ndarray:
        return np.abs(np.asarray(t) - self.center) < self.radius

    def inside(self, other: "Horodisc") -> bool:
        """Closed containment in another horodisc (both tangent at 1)."""
        return abs(self.center - other.center) + self.radius <= other.radius + 1e-15


def horodisc_geometry(c: float, Rj: float) -> Horodisc:
    """{t : c P(t, 1) > Rj} is the disc |t - Rj/(Rj+c)| < c/(Rj+c)."""
    if not (c > 0 and Rj > 0):
        raise ModelError("c and Rj must be positive")
    return Horodisc(c, Rj, Rj / (Rj + c), c / (Rj + c))


def poisson_kernel(t, zeta: complex = 1.0):
    t = np.asarray(t, dtype=complex)
    return np.real((zeta + t) / (zeta - t))


@dataclass(frozen=True)
class HalfPlaneDensity:
    intervals: tuple = ()      # (a, b, w) with constant density w on [a, b]
    c: float = 1.0

    def __post_init__(self):
        iv = tuple(sorted((float(a), float(b), float(w)) for a, b, w in self.intervals))
        object.__setattr__(self, "intervals", iv)
        if self.c < 0:
            raise ModelError("c must be non-negative")
        for a, b, w in iv:
            if not a < b or w < 0:
                raise ModelError(f"bad interval ({a}, {b}, {w})")
        for (a0, b0, _), (a1, b1, _) in zip(iv, iv[1:]):
            if a1 < b0:
                raise ModelError("intervals overlap")

    @property
    def mass(self) -> float:
        return sum(w * (b - a) for a, b, w in self.intervals)


def halfplane_U(density: HalfPlaneDensity, x, y):
    """c x + sum_j w_j [arctan((b_j - y)/x) - arctan((a_j - y)/x)] for x > 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0):
        raise ModelError("U is defined for x > 0")
    U = density.c * x
    for a, b, w in density.intervals:
        U = U + w * (np.arctan((b - y) / x) - np.arctan((a - y) / x))
    return float(U) if np.ndim(U) == 0 else U


def monotonicity_threshold(density: HalfPlaneDensity) -> float:
    """x0 = sqrt(2 * mass / c): beyond it dU/dx >= c - 2 mass / x^2 > 0."""
    if not density.c > 0:
        raise ModelError("monotonicity needs c > 0")
    return math.sqrt(2 * density.mass / density.c)


def dU_dx(density: HalfPlaneDensity, x, y, h: Optional[float] = None):
    """Central finite difference of U in x."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-5 * np.maximum(1.0, x)
    return (halfplane_U(density, x + h, y) - halfplane_U(density, x - h, y)) / (2 * h)


def _y_extent(density: HalfPlaneDensity, margin: float):
    if density.intervals:
        lo = density.intervals[0][0]
        hi = max(b for _, b, _ in density.intervals)
    else:
        lo = hi = 0.0
    span = hi - lo
    return lo - margin - span, hi + margin + span


def verify_monotonicity(density: HalfPlaneDensity, nx: int = 200, ny: int = 200) -> bool:
    """Finite-difference check of dU/dx > 0 (and the bound chain) beyond the threshold."""
    x0 = monotonicity_threshold(density)
    lo = x0 * (1 + 1e-3) if x0 > 0 else 1e-3
    xs = np.linspace(lo, max(4 * x0, x0 + 10.0), nx)
    ylo, yhi = _y_extent(density, max(x0, 1.0))
    ys = np.linspace(ylo, yhi, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    d = dU_dx(density, X, Y)
    bound = density.c - 2 * density.mass / X**2
    return bool(np.all(d > 0) and np.all(d >= bound - 1e-6))


class LevelTooSmall(ModelError):
    pass


@dataclass
class OmegaCurve:
    single: bool
    ys: np.ndarray
    xs: np.ndarray          # X(y): the level curve as a graph over y


def omega_single_curve(density: HalfPlaneDensity, level: float, ys=None,
                       scan: int = 64) -> OmegaCurve:
    """Solve U(x, y) = level for x on each y and check that the root is unique."""
    x0 = monotonicity_threshold(density)
    if ys is None:
        ylo, yhi = _y_extent(density, max(x0, 1.0) + level)
        ys = np.linspace(ylo, yhi, 401)
    ys = np.asarray(ys, dtype=float)
    x_lo = max(x0, 1e-9)
    x_hi = level / density.c + 1.0
    if np.any(halfplane_U(density, np.full_like(ys, x_lo), ys) >= level):
        raise LevelTooSmall("level set reaches the non-monotone strip x <= x0")
    grid = np.linspace(x_lo, x_hi, scan)
    vals = halfplane_U(density, grid[:, None], ys[None, :]) - level
    changes = np.sum(np.diff(np.sign(vals), axis=0) != 0, axis=0)
    single = bool(np.all(changes == 1))
    a = np.full_like(ys, x_lo)
    b = np.full_like(ys, x_hi)
    for _ in range(200):
        mid = 0.5 * (a + b)
        above = halfplane_U(density, mid, ys) > level
        b = np.where(above, mid, b)
        a = np.where(above, a, mid)
        if np.max(b - a) < 1e-13 * max(1.0, x_hi):
            break
    return OmegaCurve(single, ys, 0.5 * (a + b))
