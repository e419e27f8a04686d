"""Grid sampling of u = log|f| - log R, zero-level contours, and sign components."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .expr import Expr, eval_log_array

EDGES = ("left", "right", "bottom", "top")
MIN_CONTOUR_POINTS = 3


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class Window:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise WindowError(f"degenerate window {self}")
        if self.nx < 2 or self.ny < 2:
            raise WindowError("need at least 2 samples per axis")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    @property
    def xs(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.y_min + self.dy * np.arange(self.ny)

    def points(self) -> np.ndarray:
        """Complex grid of shape (nx, ny); entry (i, j) is x_i + i*y_j."""
        return self.xs[:, None] + 1j * self.ys[None, :]

    def point(self, i, j):
        return (self.x_min + i * self.dx) + 1j * (self.y_min + j * self.dy)

    def nearest_index(self, z):
        """Nearest grid indices (i, j) and an in-window mask for points z."""
        z = np.asarray(z, dtype=complex)
        fi = (z.real - self.x_min) / self.dx
        fj = (z.imag - self.y_min) / self.dy
        inside = (fi >= -0.5) & (fi <= self.nx - 0.5) & (fj >= -0.5) & (fj <= self.ny - 0.5)
        i = np.clip(np.rint(fi), 0, self.nx - 1).astype(int)
        j = np.clip(np.rint(fj), 0, self.ny - 1).astype(int)
        return i, j, inside

    def inradius(self, center: complex = 0j) -> float:
        """Distance from ``center`` to the nearest window edge (0 if outside)."""
        d = min(center.real - self.x_min, self.x_max - center.real,
                center.imag - self.y_min, self.y_max - center.imag)
        return max(d, 0.0)

    def circumradius(self, center: complex = 0j) -> float:
        corners = [complex(x, y) for x in (self.x_min, self.x_max) for y in (self.y_min, self.y_max)]
        return max(abs(c - center) for c in corners)

    def as_list(self):
        return [self.x_min, self.x_max, self.y_min, self.y_max]


@dataclass
class ScalarField:
    window: Window
    values: np.ndarray          # (nx, ny)
    mask: np.ndarray            # True where invalid
    log_R: float = 0.0

    def __post_init__(self):
        shape = (self.window.nx, self.window.ny)
        if self.values.shape != shape or self.mask.shape != shape:
            raise WindowError(f"field shape {self.values.shape} does not match window {shape}")

    @classmethod
    def from_function(cls, fn, window: Window) -> "ScalarField":
        """Synthetic field from a vectorized real function of a complex grid."""
        vals = np.asarray(fn(window.points()), dtype=float)
        return cls(window, vals, ~np.isfinite(vals))

    def positive(self, level: float = 0.0) -> np.ndarray:
        return (self.values > level) & ~self.mask

    def bilinear(self, z) -> np.ndarray:
        """Bilinear interpolation of the samples at complex points z."""
        w = self.window
        z = np.asarray(z, dtype=complex)
        fi = np.clip((z.real - w.x_min) / w.dx, 0, w.nx - 1)
        fj = np.clip((z.imag - w.y_min) / w.dy, 0, w.ny - 1)
        i0 = np.minimum(np.floor(fi).astype(int), w.nx - 2)
        j0 = np.minimum(np.floor(fj).astype(int), w.ny - 2)
        a = fi - i0
        b = fj - j0
        v = self.values
        return ((1 - a) * (1 - b) * v[i0, j0] + a * (1 - b) * v[i0 + 1, j0]
                + (1 - a) * b * v[i0, j0 + 1] + a * b * v[i0 + 1, j0 + 1])


def thread_count() -> int:
    raw = os.environ.get("TRACTSCOPE_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def sample_field(expr: Expr, window: Window, R: float = 1.0,
                 threads: Optional[int] = None) -> ScalarField:
    """Sample u = log|f| - log R on every grid node.

    Rows may be evaluated concurrently; each worker fills a disjoint slice,
    so the result does not depend on scheduling.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    threads = thread_count() if threads is None else max(1, threads)
    log_R = math.log(R)
    values = np.empty((window.nx, window.ny))
    mask = np.empty((window.nx, window.ny), dtype=bool)
    xs, ys = window.xs, window.ys

    def work(rows: slice):
        z = xs[rows, None] + 1j * ys[None, :]
        la = eval_log_array(expr, z)
        u = la.log_mod - log_R
        bad = la.is_zero | ~np.isfinite(u)
        values[rows] = np.where(bad, 0.0, u)
        mask[rows] = bad

    chunk = max(1, math.ceil(window.nx / (4 * threads)))
    slices = [slice(s, min(s + chunk, window.nx)) for s in range(0, window.nx, chunk)]
    if threads == 1:
        for s in slices:
            work(s)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, slices))
    return ScalarField(window, values, mask, log_R)


def label_components(fld: ScalarField, positive: bool = True, level: float = 0.0):
    """4-connected labels of {u > level} (or {u < level}); 0 = unlabeled.

    Returns ``(labels, count)``.
    """
    if positive:
        sel = (fld.values > level) & ~fld.mask
    else:
        sel = (fld.values < level) & ~fld.mask
    labels, count = ndimage.label(sel)
    return labels, int(count)


# --------------------------------------------------------------------------
# marching squares

@dataclass
class Contour:
    points: np.ndarray                       # complex polyline
    closed: bool
    exits: list = field(default_factory=list)
    positive_nodes: np.ndarray = field(default=None, repr=False)  # (k, 2) grid indices

    @property
    def is_open(self) -> bool:
        return not self.closed

    def __len__(self):
        return len(self.points)


def _edge_side(key, nx, ny) -> Optional[str]:
    kind, i, j = key
    if kind == "h":
        if j == 0:
            return "bottom"
        if j == ny - 1:
            return "top"
    else:
        if i == 0:
            return "left"
        if i == nx - 1:
            return "right"
    return None


def extract_contours(fld: ScalarField, level: float = 0.0) -> list:
    """Level-set polylines of the sampled field by marching squares.

    Edge crossings are placed by linear interpolation.  Saddle cells are
    resolved by the sign of the cell-centre average.  Cells touching a masked
    node are skipped; a contour stopping there gets the exit ``"mask"``.
    """
    w = fld.window
    nx, ny = w.nx, w.ny
    v = fld.values
    pos = (v > level) & ~fld.mask
    bad = fld.mask

    hcross = (pos[:-1, :] != pos[1:, :]) & ~bad[:-1, :] & ~bad[1:, :]   # (nx-1, ny)
    vcross = (pos[:, :-1] != pos[:, 1:]) & ~bad[:, :-1] & ~bad[:, 1:]   # (nx, ny-1)
    cell_bad = bad[:-1, :-1] | bad[1:, :-1] | bad[:-1, 1:] | bad[1:, 1:]
    active = (hcross[:, :-1] | hcross[:, 1:] | vcross[:-1, :] | vcross[1:, :]) & ~cell_bad

    adj: dict = {}

    def link(a, b):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    for i, j in zip(*np.nonzero(active)):
        i = int(i)
        j = int(j)
        bottom = ("h", i, j)
        top = ("h", i, j + 1)
        left = ("v", i, j)
        right = ("v", i + 1, j)
        p00, p10, p01, p11 = pos[i, j], pos[i + 1, j], pos[i, j + 1], pos[i + 1, j + 1]
        crossing = [e for e, c in ((bottom, hcross[i, j]), (right, vcross[i + 1, j]),
                                   (top, hcross[i, j + 1]), (left, vcross[i, j])) if c]
        if len(crossing) == 2:
            link(*crossing)
        elif len(crossing) == 4:
            centre = 0.25 * (v[i, j] + v[i + 1, j] + v[i, j + 1] + v[i + 1, j + 1])
            centre_pos = centre > level
            # pair the edges around each corner whose sign differs from the centre
            if p00 == centre_pos:
                # corners (1,0) and (0,1) are isolated
                link(bottom, right)
                link(top, left)
            else:
                link(bottom, left)
                link(right, top)
        # 1 or 3 crossings cannot happen on a consistent sign pattern

    def edge_point(key):
        kind, i, j = key
        if kind == "h":
            a, b = (i, j), (i + 1, j)
        else:
            a, b = (i, j), (i, j + 1)
        va, vb = v[a], v[b]
        t = (level - va) / (vb - va) if vb != va else 0.5
        za, zb = w.point(*a), w.point(*b)
        pnode = a if pos[a] else b
        return za + t * (zb - za), pnode

    visited = set()
    contours = []

    def walk(start):
        chain = [start]
        visited.add(start)
        prev, cur = None, start
        while True:
            nxt = [k for k in adj[cur] if k != prev or adj[cur].count(k) > 1]
            nxt = [k for k in nxt if k not in visited or (k == start and len(chain) > 2)]
            if not nxt:
                return chain, False
            k = nxt[0]
            if k == start:
                return chain, True
            visited.add(k)
            chain.append(k)
            prev, cur = cur, k

    def exit_of(key):
        side = _edge_side(key, nx, ny)
        if side is not None:
            return side
        return "mask"

    # open chains first: they start at degree-1 keys
    starts = sorted(k for k, nb in adj.items() if len(nb) == 1)
    for s in starts:
        if s in visited:
            continue
        chain, closed = walk(s)
        contours.append((chain, False, [exit_of(chain[0]), exit_of(chain[-1])]))
    for s in sorted(adj):
        if s in visited:
            continue
        chain, closed = walk(s)
        if closed:
            contours.append((chain, True, []))
        else:
            contours.append((chain, False, [exit_of(chain[0]), exit_of(chain[-1])]))

    out = []
    for chain, closed, exits in contours:
        pts, nodes = zip(*(edge_point(k) for k in chain))
        pts = list(pts)
        if closed:
            pts.append(pts[0])
        if len(pts) < MIN_CONTOUR_POINTS:
            continue
        out.append(Contour(np.array(pts, dtype=complex), closed, exits,
                           np.array(nodes, dtype=int)))
    return out
