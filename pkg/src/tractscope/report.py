"""Full analysis pipeline and its JSON report."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Optional

from . import critpoints, field, tracts
from .expr import derivative, parse
from .field import Window, extract_contours, label_components, sample_field
from .tracts import build_tracts, classify_channel, classify_tract, detect_channels

SCHEMA_VERSION = "1.0"


def tolerances() -> dict:
    return {
        "contour_level": 0.0,
        "min_contour_points": field.MIN_CONTOUR_POINTS,
        "channel_radii": tracts.DEFAULT_N_RADII,
        "logarithmic_u_floor": tracts.U_THRESHOLD_FLOOR,
        "monotone_rtol": tracts.MONOTONE_RTOL,
        "asymptotic_tol": tracts.ASYMPTOTIC_TOL,
        "winding_residual": critpoints.RESIDUAL_TOL,
        "winding_max_increment": critpoints.MAX_INCREMENT,
        "winding_samples": [critpoints.N_START, critpoints.N_MAX],
        "multiplicity_radius": critpoints.MICRO_RADIUS,
        "perturb_offsets": list(critpoints.PERTURB_OFFSETS),
        "critical_u_floor": 1e-9,
    }


def clean(x):
    """JSON-safe copy: complex -> [re, im], non-finite floats -> None."""
    if isinstance(x, dict):
        return {str(k): clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [clean(v) for v in x]
    if isinstance(x, complex):
        return [clean(x.real), clean(x.imag)]
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if hasattr(x, "item"):
        return clean(x.item())
    if isinstance(x, float):
        return x + 0.0 if math.isfinite(x) else None
    return x


def dumps(obj) -> str:
    return json.dumps(clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


@dataclass
class ChannelSpec:
    r_min: Optional[float] = None
    r_max: Optional[float] = None
    n: int = tracts.DEFAULT_N_RADII

    @classmethod
    def parse(cls, text: Optional[str]) -> "ChannelSpec":
        if not text:
            return cls()
        parts = [p.strip() for p in text.split(",")]
        if not 1 <= len(parts) <= 3:
            raise ValueError("--channels takes r_min[,r_max,n]")
        r_min = float(parts[0])
        r_max = float(parts[1]) if len(parts) > 1 and parts[1] else None
        n = int(parts[2]) if len(parts) > 2 else tracts.DEFAULT_N_RADII
        if n < 3:
            raise ValueError("need at least 3 channel radii")
        return cls(r_min, r_max, n)


def parse_window(text: str, res: int) -> Window:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError("--window takes X0,X1,Y0,Y1")
    x0, x1, y0, y1 = (float(p) for p in parts)
    return Window(x0, x1, y0, y1, res, res)


def analyze(expr_text: str, window: Window, R: float = 1.0,
            channels: Optional[ChannelSpec] = None, critical: bool = True,
            timings: bool = False) -> dict:
    """parse -> sample -> contours -> tracts -> channels -> classify -> critical counts."""
    t0 = time.perf_counter()
    channels = channels or ChannelSpec()
    f = parse(expr_text)
    fld = sample_field(f, window, R)
    contours = extract_contours(fld)
    labels, _ = label_components(fld)
    regions = build_tracts(fld, contours, labels, R)
    t_field = time.perf_counter()
    d = derivative(f) if critical else None

    entries = []
    for t in regions:
        verdicts = []
        note = None
        if not t.degenerate:
            try:
                found = detect_channels(t, fld, channels.r_min, channels.r_max, channels.n)
            except tracts.ChannelSearchError as exc:
                found = []
                note = str(exc)
            for ch in found:
                v = classify_channel(ch, f, R, fld).to_dict()
                v["direction"] = ch.direction
                v["r"] = ch.r
                verdicts.append(v)
        crit = None
        zeros = []
        if critical:
            cc = critpoints.tract_critical_count(t, d, fld, f=f)
            crit = cc.count
            zeros = [[z.real, z.imag, m] for z, m in sorted(cc.zeros, key=lambda q: (q[0].real, q[0].imag))]
        entry = classify_tract(t, verdicts, crit)
        entry["critical_points"] = zeros
        entry["open_boundaries"] = [c.exits for c in t.boundary if c.is_open]
        if note:
            entry["channel_search_error"] = note
        entries.append(entry)

    report = {
        "schema_version": SCHEMA_VERSION,
        "expression": expr_text,
        "parsed": str(f),
        "derivative": str(d) if d is not None else None,
        "window": window.as_list(),
        "resolution": [window.nx, window.ny],
        "R": R,
        "channel_search": {"r_min": channels.r_min, "r_max": channels.r_max, "n": channels.n},
        "critpoints": critical,
        "tolerances": tolerances(),
        "summary": {
            "tracts": len(entries),
            "contours": len(contours),
            "masked_nodes": int(fld.mask.sum()),
            "positive_nodes": int(fld.positive().sum()),
            "violations": sum(1 for e in entries if e["violation"]),
        },
        "tracts": entries,
    }
    if timings:
        t1 = time.perf_counter()
        report["runtime"] = {"field_s": t_field - t0, "total_s": t1 - t0}
    return report
