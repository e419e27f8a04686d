"""Command-line front end: analyze | render | model | be-verify.

Exit codes: 0 success, 1 invalid input (syntax, flags, model record),
2 numeric or I/O failure.  Errors are printed to stderr as JSON.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import be_example, poisson
from .critpoints import WindingError
from .expr import EvaluationError, ParseError, parse
from .field import WindowError, extract_contours, sample_field
from .render import write_ppm
from .report import ChannelSpec, SCHEMA_VERSION, analyze, dumps, parse_window
from .series import SeriesRangeError
from .tracts import ChannelSearchError


class InputError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


def _emit(text: str, out) -> None:
    if out:
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise NumericError(f"cannot write {out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise InputError(f"expected RE[,IM], got {text!r}")


def _window(args):
    try:
        return parse_window(args.window, args.res)
    except (ValueError, WindowError) as exc:
        raise InputError(str(exc)) from exc


def _channels(text):
    try:
        return ChannelSpec.parse(text)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


# --------------------------------------------------------------------------
# subcommands

def cmd_analyze(args) -> int:
    report = analyze(args.expr, _window(args), args.R, _channels(args.channels),
                     args.critpoints == "on", timings=args.timings)
    _emit(dumps(report), args.out)
    return 0


def cmd_render(args) -> int:
    f = parse(args.expr)
    if args.format != "ppm":
        raise InputError(f"unsupported format {args.format!r}")
    if not args.out:
        raise InputError("render needs --out PATH")
    fld = sample_field(f, _window(args), args.R)
    try:
        write_ppm(args.out, fld, extract_contours(fld))
    except OSError as exc:
        raise NumericError(f"cannot write {args.out}: {exc}") from exc
    return 0


def _load_model(text: str) -> poisson.PoissonModel:
    try:
        if text.lstrip().startswith("{"):
            record = json.loads(text)
        else:
            with open(text, encoding="utf-8") as fh:
                record = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed model JSON: {exc}") from exc
    if not isinstance(record, dict):
        raise InputError("model JSON must be an object")
    try:
        return poisson.PoissonModel.from_dict(record)
    except (poisson.ModelError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def cmd_model(args) -> int:
    out = {"schema_version": SCHEMA_VERSION, "action": args.action}
    if args.action == "horodisc":
        if args.Rj is None:
            raise InputError("horodisc needs --Rj")
        c = args.c
        if args.model:
            m = _load_model(args.model)
            c = m.weights[0] if c is None else c
        h = poisson.horodisc_geometry(1.0 if c is None else c, args.Rj)
        out.update(c=h.c, Rj=h.Rj, center=h.center, radius=h.radius,
                   tangent=abs(h.center + h.radius - 1) < 1e-12)
        _emit(dumps(out), args.out)
        return 0
    if args.action == "monotone":
        dens = _density(args.density)
        x0 = poisson.monotonicity_threshold(dens)
        out.update(mass=dens.mass, c=dens.c, threshold=x0,
                   verified=poisson.verify_monotonicity(dens))
        _emit(dumps(out), args.out)
        return 0
    if not args.model:
        raise InputError(f"{args.action} needs --model")
    model = _load_model(args.model)
    out["model"] = model.to_dict()
    if args.action == "critpoints":
        cp = poisson.model_critical_points(model)
        out.update(roots=[[r.real, r.imag, inside] for r, inside in cp.roots],
                   degree=cp.degree, nominal_degree=cp.nominal_degree,
                   at_infinity=cp.at_infinity, in_disc=cp.in_disc,
                   in_disc_bound=model.n - 1,
                   count_ok=cp.in_disc <= model.n - 1,
                   pairing=poisson.check_reflection_pairing(model, cp.roots))
    elif args.action == "fibers":
        if args.w is None:
            raise InputError("fibers needs --w RE,IM")
        w = _complex(args.w)
        js = list(range(-args.jmax, args.jmax + 1))
        try:
            ts = poisson.fiber_enumerate(model, w, js)
        except poisson.ModelError as exc:
            raise InputError(str(exc)) from exc
        rows = []
        for j, t in zip(js, ts):
            fw = poisson.model_eval(model, t).to_complex()
            rows.append({"j": j, "t": t, "abs_t": abs(t), "in_disc": abs(t) < 1,
                         "residual": abs(fw - w) / abs(w)})
        out.update(w=w, fibers=rows, all_in_disc=all(r["in_disc"] for r in rows))
    _emit(dumps(out), args.out)
    return 0


def _density(text):
    if not text:
        raise InputError("monotone needs --density")
    try:
        if text.lstrip().startswith("{"):
            rec = json.loads(text)
        else:
            with open(text, encoding="utf-8") as fh:
                rec = json.load(fh)
        return poisson.HalfPlaneDensity(tuple(tuple(iv) for iv in rec.get("intervals", [])),
                                        float(rec.get("c", 1.0)))
    except (OSError, json.JSONDecodeError, TypeError, ValueError, AttributeError) as exc:
        raise InputError(f"malformed density JSON: {exc}") from exc


def winding_radius(n: int) -> float:
    """Test radius on which the n-th term dominates: 5 for n = 1, 10 for n = 2."""
    return 1.25 * 2 ** (n + 1)


def cmd_be_verify(args) -> int:
    if not 0 < args.eps <= be_example.EPS_MAX:
        raise InputError("eps must lie in (0, 1/8]")
    if args.nmax < 1:
        raise InputError("nmax must be positive")
    if args.nmax > be_example.N_MAX:
        raise NumericError(f"nmax = {args.nmax} exceeds the double-range guard (nmax <= {be_example.N_MAX})")
    segs = []
    for n in range(1, args.nmax + 1):
        for seg in be_example.segments(n, args.eps):
            b = be_example.verify_tree_bound(seg, args.samples)
            segs.append({"kind": seg.kind, "n": n, "j": seg.j, "bound": seg.bound,
                         "max_re_g": b.max_re_g, "margin": b.margin, "pass": b.ok})
    winding = {}
    monotone = {}
    for n in range(1, args.nmax + 1):
        r = winding_radius(n)
        winding[str(n)] = be_example.winding_of_g(r)
        monotone[str(n)] = be_example.arg_increasing(r)
    sc = be_example.verify_single_curve_tracts(_window(args), math.exp(args.logR), args.eps)
    out = {
        "schema_version": SCHEMA_VERSION,
        "eps": args.eps, "nmax": args.nmax, "samples": args.samples,
        "tree_bound": {"pass": all(s["pass"] for s in segs), "segments": segs},
        "winding": {"radii": {str(n): winding_radius(n) for n in range(1, args.nmax + 1)},
                    "counts": winding,
                    "pass": all(winding[str(n)] == 2**n for n in range(1, args.nmax + 1))},
        "arg_monotone": {"samples": 1024, "by_n": monotone, "pass": all(monotone.values())},
        "single_curve": dict(sc.to_dict(), window=_window(args).as_list(), log_R=args.logR),
    }
    out["pass"] = all(out[k]["pass"] for k in ("tree_bound", "winding", "arg_monotone", "single_curve"))
    _emit(dumps(out), args.out)
    return 0


# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(json.dumps({"error": "usage", "message": message}, sort_keys=True) + "\n")
        sys.exit(1)


# flags whose values may start with "-" (negative coordinates)
_VALUE_FLAGS = {"--window", "--w", "--channels", "--expr"}


def _glue(argv):
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tractscope", description="Tracts and singularities of entire functions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def field_flags(sp):
        sp.add_argument("--expr", required=True, help="entire function of z")
        sp.add_argument("--R", type=float, default=1.0, help="tract level |f| = R")
        sp.add_argument("--window", default="-3,3,-3,3", help="X0,X1,Y0,Y1")
        sp.add_argument("--res", type=int, default=601, help="grid nodes per axis")
        sp.add_argument("--out", help="output path (stdout if omitted)")

    a = sub.add_parser("analyze", help="tract analysis report (JSON)")
    field_flags(a)
    a.add_argument("--channels", help="r_min[,r_max,n]")
    a.add_argument("--critpoints", choices=("on", "off"), default="on")
    a.add_argument("--timings", action="store_true", help="add wall-clock stats (breaks byte-identity)")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("render", help="binary PPM of the tracts")
    field_flags(r)
    r.add_argument("--format", default="ppm")
    r.set_defaults(func=cmd_render)

    m = sub.add_parser("model", help="model singularity computations")
    m.add_argument("action", choices=("critpoints", "fibers", "horodisc", "monotone"))
    m.add_argument("--model", help="model JSON (inline or path)")
    m.add_argument("--w", help="target value RE[,IM] for fibers")
    m.add_argument("--jmax", type=int, default=3)
    m.add_argument("--Rj", type=float)
    m.add_argument("--c", type=float, help="weight for horodisc (default: model weight or 1)")
    m.add_argument("--density", help='half-plane density JSON {"c": .., "intervals": [[a, b, w], ..]}')
    m.add_argument("--out")
    m.set_defaults(func=cmd_model)

    b = sub.add_parser("be-verify", help="numerical checks for exp(sum (z/2^k)^(2^k))")
    b.add_argument("--nmax", type=int, default=3)
    b.add_argument("--eps", type=float, default=be_example.EPS_MAX)
    b.add_argument("--samples", type=int, default=64)
    b.add_argument("--window", default="0,250,0,250")
    b.add_argument("--res", type=int, default=1001)
    b.add_argument("--logR", type=float, default=10.0, help="log of the tract level")
    b.add_argument("--out")
    b.set_defaults(func=cmd_be_verify)
    return p


INPUT_ERRORS = (InputError, ParseError, poisson.ModelError, be_example.TreeError, WindowError)
NUMERIC_ERRORS = (NumericError, WindingError, SeriesRangeError, ChannelSearchError, EvaluationError,
                  be_example.DominanceError, ArithmeticError, FloatingPointError, np.linalg.LinAlgError)


def _fail(kind: str, exc: Exception, code: int) -> int:
    err = {"error": kind, "message": str(exc)}
    if isinstance(exc, ParseError):
        err["message"] = exc.message
        err["offset"] = exc.offset
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue(argv))
    try:
        return args.func(args)
    except ParseError as exc:
        return _fail("syntax", exc, 1)
    except INPUT_ERRORS as exc:
        return _fail("input", exc, 1)
    except NUMERIC_ERRORS as exc:
        return _fail("numeric", exc, 2)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
