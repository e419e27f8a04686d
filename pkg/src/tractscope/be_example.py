"""Numerical evidence for h = exp(g), g(z) = sum_{k>=1} (z/2^k)^(2^k).

Checks the tree bound Re g < -2^(2^n) on the segments B_{j,n}, C^±_{j,n},
the 2^n-fold winding of g on dominance circles, and the single-boundary-curve
shape of the tracts of h in a window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .critpoints import tract_critical_count
from .expr import BESeries, Exp, Var
from .field import ScalarField, Window, extract_contours, label_components
from .logcomplex import wrap_angle
from .series import (DEFAULT_TOL, MAX_ABS_Z, SeriesRangeError, SeriesTruncation,
                     series_value, truncation)
from .tracts import build_tracts

EPS_MAX = 0.125
N_MAX = 4

G_EXPR = BESeries(Var())
H_EXPR = Exp(G_EXPR)
G_PRIME = BESeries(Var(), 1)


class TreeError(ValueError):
    pass


class DominanceError(ArithmeticError):
    pass


def eval_g(z, tol: float = DEFAULT_TOL):
    """g(z) summed until the tail bound drops below ``tol``."""
    return series_value(z, 0, tol)


def g_truncation(z: complex, tol: float = DEFAULT_TOL) -> SeriesTruncation:
    return truncation(abs(z), tol)


@dataclass(frozen=True)
class TreeSegment:
    kind: str          # "B", "C+", "C-"
    n: int
    j: int
    eps: float = EPS_MAX

    def __post_init__(self):
        if self.kind not in ("B", "C+", "C-"):
            raise TreeError(f"unknown segment kind {self.kind!r}")
        if self.n < 1:
            raise TreeError("n must be positive")
        if not 0 <= self.j < 2**self.n:
            raise TreeError("j must lie in [0, 2^n - 1]")
        if not 0 < self.eps <= EPS_MAX:
            raise TreeError("eps must lie in (0, 1/8]")

    @property
    def r_n(self) -> float:
        return (1 + self.eps) * 2 ** (self.n + 1)

    @property
    def r_n_prime(self) -> float:
        return (1 - 2 * self.eps) * 2 ** (self.n + 2)

    @property
    def r_next(self) -> float:
        return (1 + self.eps) * 2 ** (self.n + 2)

    @property
    def base_angle(self) -> float:
        return math.pi / 2**self.n + 2 * math.pi * self.j / 2**self.n

    @property
    def bound(self) -> float:
        return -float(2 ** (2**self.n))


def segments(n: int, eps: float = EPS_MAX):
    for j in range(2**n):
        for kind in ("B", "C+", "C-"):
            yield TreeSegment(kind, n, j, eps)


def tree_points(seg: TreeSegment, samples: int = 64) -> np.ndarray:
    if samples < 2:
        raise TreeError("need at least 2 samples")
    if seg.kind == "B":
        r = np.linspace(seg.r_n, seg.r_n_prime, samples)
        return r * np.exp(1j * seg.base_angle)
    r = np.linspace(seg.r_n_prime, seg.r_next, samples)
    sign = 1.0 if seg.kind == "C+" else -1.0
    offset = sign * (r - seg.r_n_prime) / (seg.r_next - seg.r_n_prime) * math.pi / 2 ** (seg.n + 1)
    return r * np.exp(1j * (seg.base_angle + offset))


@dataclass
class TreeBound:
    ok: bool
    margin: float        # bound - max Re g; positive when the bound holds
    max_re_g: float


def verify_tree_bound(seg: TreeSegment, samples: int = 64) -> TreeBound:
    if seg.n > N_MAX:
        raise TreeError(f"n = {seg.n} exceeds the double-range guard (n <= {N_MAX})")
    worst = float(np.max(np.real(eval_g(tree_points(seg, samples)))))
    margin = seg.bound - worst
    return TreeBound(worst < seg.bound, margin, worst)


# --------------------------------------------------------------------------
# winding

def term_moduli(r: float, K: Optional[int] = None) -> np.ndarray:
    """|(z/2^k)^(2^k)| on |z| = r for k = 1..K (computed in logs)."""
    if K is None:
        K = truncation(r).K + 2
    k = np.arange(1, K + 1)
    return np.exp(2.0**k * (math.log(r) - k * math.log(2.0)))


def dominant_index(r: float) -> int:
    """Index n whose term strictly dominates the sum of all others on |z| = r."""
    if r <= 0 or r > MAX_ABS_Z:
        raise DominanceError(f"radius {r} out of range")
    mods = term_moduli(r)
    k = int(np.argmax(mods))
    if mods[k] > mods.sum() - mods[k]:
        return k + 1
    raise DominanceError(f"no dominant term on |z| = {r}")


def _continued_arg(r: float, samples: int) -> np.ndarray:
    theta = 2 * math.pi * np.arange(samples + 1) / samples
    g = eval_g(r * np.exp(1j * theta))
    inc = np.array([wrap_angle(a) for a in np.diff(np.angle(g))])
    if np.max(np.abs(inc)) >= math.pi / 2:
        raise DominanceError("argument increments too large; raise the sample count")
    return np.angle(g[0]) + np.concatenate([[0.0], np.cumsum(inc)])


def winding_of_g(r: float, samples: int = 1024) -> int:
    """Winding of g around |z| = r; only defined on a dominance circle."""
    n = dominant_index(r)
    arg = _continued_arg(r, samples)
    w = (arg[-1] - arg[0]) / (2 * math.pi)
    k = int(round(w))
    if abs(w - k) > 1e-6 or k != 2**n:
        raise DominanceError(f"winding {w} disagrees with dominant index {n}")
    return k


def arg_increasing(r: float, samples: int = 1024) -> bool:
    """Is the continued argument of g(r e^{i theta}) strictly increasing in theta?"""
    arg = _continued_arg(r, samples)
    return bool(np.all(np.diff(arg) > 0))


# --------------------------------------------------------------------------
# tracts of h

def h_field(window: Window, R: float) -> ScalarField:
    """u = Re g - log R directly (exp(g) itself is far outside double range)."""
    if window.circumradius() > MAX_ABS_Z:
        raise SeriesRangeError("window exceeds |z| <= 700")
    z = window.points()
    vals = np.real(eval_g(z)) - math.log(R)
    return ScalarField(window, vals, ~np.isfinite(vals), math.log(R))


def tree_points_in_window(window: Window, eps: float = EPS_MAX, samples: int = 64) -> np.ndarray:
    pts = []
    outer = window.circumradius()
    n = 1
    while (1 + eps) * 2 ** (n + 1) < outer:
        for seg in segments(n, eps):
            p = tree_points(seg, samples)
            p = p[(p.real >= window.x_min) & (p.real <= window.x_max)
                  & (p.imag >= window.y_min) & (p.imag <= window.y_max)]
            pts.append(p)
        n += 1
    # the segment [-i r_1, i r_1]
    r1 = (1 + eps) * 4
    seg0 = 1j * np.linspace(-r1, r1, samples)
    pts.append(seg0[(seg0.real >= window.x_min) & (seg0.real <= window.x_max)
                    & (seg0.imag >= window.y_min) & (seg0.imag <= window.y_max)])
    return np.concatenate(pts) if pts else np.zeros(0, complex)


@dataclass
class SingleCurveReport:
    tracts: int
    complete: int
    complete_m: list
    all_single: bool
    tree_points: int
    tree_hits: int
    critical_points: int
    critical_checked: int

    @property
    def ok(self) -> bool:
        return self.all_single and self.tree_hits == 0 and self.critical_points == 0

    def to_dict(self) -> dict:
        return {"tracts": self.tracts, "complete_tracts": self.complete,
                "complete_m": self.complete_m, "all_single_curve": self.all_single,
                "tree_points": self.tree_points, "tree_hits": self.tree_hits,
                "critical_points": self.critical_points,
                "critical_tracts_checked": self.critical_checked, "pass": self.ok}


def verify_single_curve_tracts(window: Window, R: float, eps: float = EPS_MAX,
                               critical: bool = True) -> SingleCurveReport:
    fld = h_field(window, R)
    contours = extract_contours(fld)
    labels, _ = label_components(fld)
    tracts = build_tracts(fld, contours, labels, R)
    complete = [t for t in tracts if t.complete]
    pts = tree_points_in_window(window, eps)
    i, j, inside = window.nearest_index(pts)
    hits = int(np.count_nonzero(labels[i[inside], j[inside]] > 0))
    crit = 0
    if critical:
        for t in complete:
            crit += tract_critical_count(t, G_PRIME, fld, f=H_EXPR).count
    return SingleCurveReport(
        tracts=len(tracts),
        complete=len(complete),
        complete_m=[t.m for t in complete],
        all_single=all(t.m == 1 for t in complete),
        tree_points=int(inside.sum()),
        tree_hits=hits,
        critical_points=crit,
        critical_checked=len(complete) if critical else 0,
    )
