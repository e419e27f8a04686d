"""Tract regions, channel detection and the per-channel dichotomy.

Everything here works on a finite window, so "unbounded" always means
"reaches the window edge"; reports carry that presumption explicitly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .expr import Expr, eval_log_array, evaluate
from .field import Contour, ScalarField, extract_contours

DEFAULT_N_RADII = 16
U_THRESHOLD_FLOOR = 10.0
ASYMPTOTIC_TOL = 0.05
MONOTONE_RTOL = 0.01


@dataclass
class TractRegion:
    id: int
    boundary: list
    truncated: bool
    boundary_curve_count: int
    R: float
    closed_count: int = 0
    perimeter_runs: int = 0
    masked_exits: int = 0
    size: int = 0
    mask: np.ndarray = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.boundary_curve_count

    @property
    def degenerate(self) -> bool:
        return self.boundary_curve_count == 0

    @property
    def ambiguous(self) -> bool:
        """Window evidence cannot settle the boundary topology."""
        return self.perimeter_runs > 1 or self.masked_exits > 0 or self.closed_count > 0

    @property
    def complete(self) -> bool:
        return not self.degenerate and not self.ambiguous


def _perimeter(a: np.ndarray) -> np.ndarray:
    """Boundary entries of a 2-D grid, in one counterclockwise loop."""
    bottom = a[:, 0]
    right = a[-1, 1:]
    top = a[-2::-1, -1]
    left = a[0, -2:0:-1]
    return np.concatenate([bottom, right, top, left])


def _circular_runs(flags: np.ndarray) -> int:
    if flags.all():
        return 1
    if not flags.any():
        return 0
    starts = flags & ~np.roll(flags, 1)
    return int(starts.sum())


def _contour_owner(c: Contour, labels: np.ndarray) -> int:
    labs = labels[c.positive_nodes[:, 0], c.positive_nodes[:, 1]]
    labs = labs[labs > 0]
    if labs.size == 0:
        return 0
    return int(np.bincount(labs).argmax())


def build_tracts(fld: ScalarField, contours: list, labels: np.ndarray, R: float = 1.0) -> list:
    """One :class:`TractRegion` per positive component, with its boundary contours."""
    count = int(labels.max()) if labels.size else 0
    owned: dict = {k: [] for k in range(1, count + 1)}
    for c in contours:
        k = _contour_owner(c, labels)
        if k:
            owned[k].append(c)
    perim = _perimeter(labels)
    sizes = np.bincount(labels.ravel(), minlength=count + 1)
    regions = []
    for k in range(1, count + 1):
        on_edge = perim == k
        bnd = owned[k]
        regions.append(TractRegion(
            id=k,
            boundary=bnd,
            truncated=bool(on_edge.any()),
            boundary_curve_count=sum(1 for c in bnd if c.is_open),
            R=R,
            closed_count=sum(1 for c in bnd if c.closed),
            perimeter_runs=_circular_runs(on_edge),
            masked_exits=sum(1 for c in bnd if "mask" in c.exits),
            size=int(sizes[k]),
            mask=labels == k,
        ))
    return regions


# --------------------------------------------------------------------------
# channels

@dataclass
class Arc:
    radius: float
    start: float          # angle where the run begins
    extent: float         # angular length, radians
    mid: float
    points: np.ndarray = field(repr=False, default=None)

    @property
    def spine(self) -> complex:
        return self.radius * complex(math.cos(self.mid), math.sin(self.mid))


@dataclass
class Channel:
    parent: int
    r: float
    arcs: list
    direction: float
    mask: np.ndarray = field(repr=False, default=None)

    @property
    def radii(self):
        return [a.radius for a in self.arcs]


class ChannelSearchError(ValueError):
    pass


def _circle_arcs(mask: np.ndarray, fld: ScalarField, rho: float):
    """Runs of a circle |z| = rho lying in ``mask``; None if the whole circle does."""
    w = fld.window
    step = 0.5 * min(w.dx, w.dy)
    n = max(720, int(math.ceil(2 * math.pi * rho / step)))
    theta = 2 * math.pi * np.arange(n) / n
    z = rho * np.exp(1j * theta)
    i, j, inside = w.nearest_index(z)
    hit = inside & mask[i, j]
    if hit.all():
        return None
    if not hit.any():
        return []
    shift = int(np.argmin(hit))          # start the scan on a miss
    h = np.roll(hit, -shift)
    idx = (np.arange(n) + shift) % n
    arcs = []
    k = 0
    while k < n:
        if not h[k]:
            k += 1
            continue
        s = k
        while k < n and h[k]:
            k += 1
        run = idx[s:k]
        start = theta[run[0]]
        extent = (k - s - 1) * 2 * math.pi / n
        mid = math.remainder(start + extent / 2, 2 * math.pi)
        arcs.append(Arc(rho, start, extent, mid, z[run]))
    return arcs


def _touches_edge(mask: np.ndarray) -> bool:
    return bool(_perimeter(mask).any())


def default_radii(fld: ScalarField, r_min: Optional[float] = None,
                  r_max: Optional[float] = None) -> tuple:
    w = fld.window
    inr = w.inradius()
    outer = w.circumradius()
    if r_min is None:
        if inr > 0:
            r_min = 0.5 * inr
        else:
            near = math.hypot(max(w.x_min, 0, -w.x_max), max(w.y_min, 0, -w.y_max))
            r_min = near + 0.25 * (outer - near)
    if r_max is None:
        r_max = 0.98 * inr
    return r_min, r_max


def detect_channels(tract: TractRegion, fld: ScalarField, r_min: Optional[float] = None,
                    r_max: Optional[float] = None, n_radii: int = DEFAULT_N_RADII) -> list:
    """Single-access components of tract ∩ {|z| > r}, searched over geometric radii.

    A component whose sampled circles meet it in more than one arc is split
    again at the next larger radius.  Circles must stay inside the window, so
    ``r_max`` is capped by the window inradius about the origin.
    """
    r_min, r_max = default_radii(fld, r_min, r_max)
    inr = fld.window.inradius()
    if r_min <= 0 or r_min >= inr:
        raise ChannelSearchError(f"window too small relative to r_min = {r_min:g}")
    if r_max <= r_min or r_max > inr:
        raise ChannelSearchError(f"r_max = {r_max:g} must lie in (r_min, inradius = {inr:g}]")
    radii = list(np.geomspace(r_min, r_max, n_radii))
    absz = np.abs(fld.window.points())
    found: list = []
    _search(tract.mask, tract.id, fld, radii, 0, absz, found)
    found.sort(key=lambda ch: (round(ch.direction % (2 * math.pi), 9), ch.r))
    return found


def _search(region, parent, fld, radii, k, absz, found):
    sub = region & (absz > radii[k])
    labels, count = ndimage.label(sub)
    for lab in range(1, count + 1):
        comp = labels == lab
        if not _touches_edge(comp):
            continue
        arcs = []
        single = True
        for rho in radii[k + 1:]:
            a = _circle_arcs(comp, fld, rho)
            if a is None or len(a) > 1:
                single = False
                break
            arcs.extend(a)
        if single and len(arcs) >= 2:
            found.append(Channel(parent, radii[k], arcs, arcs[-1].mid, comp))
        elif not single and k + 2 < len(radii):
            _search(comp, parent, fld, radii, k + 1, absz, found)


# --------------------------------------------------------------------------
# classification

class VerdictKind(str, enum.Enum):
    LOGARITHMIC = "ContainsLogarithmicTract"
    ASYMPTOTIC = "AsymptoticValue"
    UNDETERMINED = "Undetermined"


@dataclass
class ChannelVerdict:
    kind: VerdictKind
    evidence: list                      # (radius, max u) pairs
    alpha: Optional[complex] = None
    omega_curves: Optional[int] = None
    omega_level: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value,
             "evidence": [[float(r), float(m)] for r, m in self.evidence]}
        if self.alpha is not None:
            d["alpha"] = [float(self.alpha.real), float(self.alpha.imag)]
        if self.omega_curves is not None:
            d["omega_curves"] = self.omega_curves
            d["omega_level"] = float(self.omega_level)
        return d


def _nondecreasing(seq, rtol=MONOTONE_RTOL) -> bool:
    return all(b >= a - rtol * abs(a) for a, b in zip(seq, seq[1:]))


def classify_channel(channel: Channel, expr: Expr, R: float, fld: ScalarField) -> ChannelVerdict:
    """Decide which side of the dichotomy the channel's window evidence supports."""
    log_R = math.log(R)
    prof = []
    argmax_pts = []
    for arc in channel.arcs:
        u = eval_log_array(expr, arc.points).log_mod - log_R
        u = np.where(np.isfinite(u), u, -np.inf)
        k = int(np.argmax(u))
        prof.append((arc.radius, float(u[k])))
        argmax_pts.append(arc.points[k])
    M = [m for _, m in prof]

    threshold = max(2 * M[0], U_THRESHOLD_FLOOR)
    if _nondecreasing(M) and M[-1] > threshold:
        level = M[-1] / 2
        curves = _omega_curve_count(fld, channel, level, argmax_pts[-1])
        kind = VerdictKind.LOGARITHMIC if curves == 1 else VerdictKind.UNDETERMINED
        return ChannelVerdict(kind, prof, omega_curves=curves, omega_level=level)

    tail = M[-3:]
    if len(tail) == 3 and all(b < a for a, b in zip(tail, tail[1:])) and abs(tail[-1]) < ASYMPTOTIC_TOL:
        spine = np.array([a.spine for a in channel.arcs[-3:]])
        alpha = complex(np.mean(evaluate(expr, spine)))
        if abs(abs(alpha) - R) / R < ASYMPTOTIC_TOL:
            return ChannelVerdict(VerdictKind.ASYMPTOTIC, prof, alpha=alpha)
    return ChannelVerdict(VerdictKind.UNDETERMINED, prof)


def _omega_curve_count(fld: ScalarField, channel: Channel, level: float, seed: complex) -> int:
    """Open boundary curves of the component of {u > level} in the channel around ``seed``."""
    sel = channel.mask & (fld.values > level) & ~fld.mask
    labels, count = ndimage.label(sel)
    if count == 0:
        return 0
    i, j, _ = fld.window.nearest_index(np.array([seed]))
    omega = int(labels[i[0], j[0]])
    if omega == 0:
        best = ndimage.maximum(np.where(sel, fld.values, -np.inf), labels,
                               index=np.arange(1, count + 1))
        omega = int(np.argmax(best)) + 1
    curves = 0
    for c in extract_contours(fld, level):
        if c.is_open and _contour_owner(c, labels) == omega:
            curves += 1
    return curves


def classify_tract(tract: TractRegion, verdicts: list, critical_count: Optional[int]) -> dict:
    """Report entry: the single-curve rule, or direct with channel verdicts and the m-1 bound."""
    m = tract.boundary_curve_count
    if tract.degenerate:
        label = "Degenerate"
    elif m == 1 and not tract.ambiguous:
        label = "Logarithmic"
    else:
        label = "Direct"
    bound = max(m - 1, 0)
    entry = {
        "id": tract.id,
        "label": label,
        "m": m,
        "truncated": tract.truncated,
        "presumed_unbounded": tract.truncated,
        "ambiguous": tract.ambiguous,
        "closed_boundaries": tract.closed_count,
        "cells": tract.size,
        "channels": [v.to_dict() if isinstance(v, ChannelVerdict) else v for v in verdicts],
        "critical_count": critical_count,
        "critical_bound": bound,
    }
    if critical_count is None:
        entry["bound_ok"] = None
        entry["violation"] = False
    else:
        ok = critical_count <= bound
        entry["bound_ok"] = ok
        entry["violation"] = not ok
    return entry
