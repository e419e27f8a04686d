"""Acceptance criteria 1-8.  Each test prints one PASS/FAIL line, then asserts."""

import cmath
import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from tractscope import be_example
from tractscope.critpoints import Rect, count_zeros
from tractscope.expr import derivative, eval_log, evaluate, parse
from tractscope.field import Window
from tractscope.poisson import (HalfPlaneDensity, PoissonModel, check_reflection_pairing,
                                fiber_enumerate, horodisc_geometry, model_critical_points,
                                model_eval, monotonicity_threshold, omega_single_curve,
                                verify_monotonicity)
from tractscope.report import analyze


@pytest.fixture
def line(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n}] {'PASS' if ok else 'FAIL'}: {detail}")
    return emit


def _angle_near(d, target, tol=0.1):
    return abs(math.remainder(d - target, 2 * math.pi)) < tol


def test_criterion_1_quartic(line, monkeypatch):
    monkeypatch.setenv("TRACTSCOPE_THREADS", "1")
    t0 = time.perf_counter()
    rep = analyze("2*exp(z^4)", Window(-3, 3, -3, 3, 601, 601))
    dt = time.perf_counter() - t0
    tr = rep["tracts"]
    checks = {
        "one tract": len(tr) == 1,
        "m = 4": len(tr) == 1 and tr[0]["m"] == 4,
        "4 open contours": rep["summary"]["contours"] == 4,
    }
    if len(tr) == 1:
        t = tr[0]
        ch = t["channels"]
        dirs = sorted(c["direction"] % (2 * math.pi) for c in ch)
        zeros = t["critical_points"]
        checks.update({
            "4 log channels": len(ch) == 4 and all(c["kind"] == "ContainsLogarithmicTract" for c in ch),
            "axis directions": len(dirs) == 4 and all(_angle_near(d, k * math.pi / 2) for k, d in enumerate(dirs)),
            "critical = 3": t["critical_count"] == 3,
            "single zero at 0, mult 3": len(zeros) == 1 and abs(complex(zeros[0][0], zeros[0][1])) < 1e-8
            and zeros[0][2] == 3,
            "bound 3 <= m-1": t["bound_ok"] is True,
        })
    checks["runtime < 30 s"] = dt < 30
    ok = all(checks.values())
    line(1, ok, f"{dt:.1f}s " + ", ".join(f"{k}={'ok' if v else 'NO'}" for k, v in checks.items()))
    assert ok, checks


def test_criterion_2_strips(line):
    rep = analyze("exp(exp(z))", Window(-6, 6, -7, 7, 601, 601))
    tr = rep["tracts"]
    rows = []
    ok = len(tr) == 3
    for t in tr:
        right = [c for c in t["channels"] if _angle_near(c["direction"], 0, 0.6)]
        left = [c for c in t["channels"] if _angle_near(c["direction"], math.pi, 0.6)]
        r_ok = len(right) == 1 and right[0]["kind"] == "ContainsLogarithmicTract"
        l_ok = (len(left) == 1 and left[0]["kind"] == "AsymptoticValue"
                and abs(complex(*left[0]["alpha"]) - 1) < 0.05)
        t_ok = t["m"] == 2 and r_ok and l_ok and t["critical_count"] == 0
        ok = ok and t_ok
        rows.append(f"tract {t['id']}: m={t['m']} right={'ok' if r_ok else 'NO'} "
                    f"left={'ok' if l_ok else 'NO'} crit={t['critical_count']}")
    line(2, ok, f"{len(tr)} tracts; " + "; ".join(rows))
    assert ok, rows


def test_criterion_3_sin_minus_z(line):
    rep = analyze("exp(sin(z)-z)", Window(-20, 20, -20, 20, 601, 601))
    right = []
    left = None
    w = Window(-20, 20, -20, 20, 601, 601)
    for t in rep["tracts"]:
        if t["ambiguous"] is False and t["m"] == 1 and t["label"] == "Logarithmic":
            right.append(t)
        if left is None or t["cells"] > left["cells"]:
            left = t
    log_left = [c for c in left["channels"] if c["kind"] == "ContainsLogarithmicTract"]
    rep2 = analyze("exp(sin(z)-z)", Window(-15, 0, -8, 8, 601, 601))
    left2 = max(rep2["tracts"], key=lambda t: t["cells"])
    zeros = sorted((round(z[0], 6), z[2]) for z in left2["critical_points"])
    want = [(round(-4 * math.pi, 6), 2), (round(-2 * math.pi, 6), 2)]
    checks = {
        ">= 3 complete m=1 tracts": len(right) >= 3,
        ">= 2 log channels in left tract": len(log_left) >= 2,
        "left critical = 4": left2["critical_count"] == 4,
        "double zeros at -2pi, -4pi": zeros == want,
    }
    ok = all(checks.values())
    line(3, ok, f"{len(right)} m=1 tracts, {len(log_left)} left log channels, "
                f"left critical {left2['critical_count']} at {zeros}")
    assert ok, checks


def test_criterion_4_poisson_models(line):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    bad_count = bad_pair = on_circle = equal = 0
    for _ in range(200):
        n = int(rng.integers(2, 7))
        angles = np.sort(rng.uniform(0, 2 * math.pi, n))
        m = PoissonModel.from_angles(angles, rng.uniform(0.1, 5.0, n), R=rng.uniform(0.5, 5),
                                     theta=rng.uniform(-math.pi, math.pi))
        cp = model_critical_points(m)
        bad_count += cp.in_disc > n - 1
        equal += cp.in_disc == n - 1
        bad_pair += not check_reflection_pairing(m, cp.roots, 1e-8)
        on_circle += any(abs(abs(r) - 1) < 1e-9 for r, _ in cp.roots)
    one = PoissonModel(1.3, 0.4, (cmath.exp(1.1j),), (0.7,))
    w = 5 + 2j
    js = list(range(-50, 51))
    ts = fiber_enumerate(one, w, js)
    distinct = len({(round(t.real, 13), round(t.imag, 13)) for t in ts}) == len(ts)
    in_disc = all(abs(t) < 1 for t in ts)
    resid = max(abs(model_eval(one, t).to_complex() - w) / abs(w) for t in ts)
    mods = {j: abs(t) for j, t in zip(js, ts)}
    mono = (all(mods[j + 1] > mods[j] for j in range(5, 50))
            and all(mods[-j - 1] > mods[-j] for j in range(5, 50)))
    dt = time.perf_counter() - t0
    ok = (bad_count == 0 and bad_pair == 0 and on_circle == 0 and distinct and in_disc
          and resid < 1e-9 and mono and dt < 10)
    line(4, ok, f"{dt:.2f}s; count>n-1: {bad_count}, equality in {equal}/200, pairing failures: {bad_pair}, "
                f"on circle: {on_circle}; fibres distinct={distinct} in_disc={in_disc} "
                f"max residual={resid:.1e} monotone={mono}")
    assert ok


def test_criterion_5_horodisc_halfplane(line):
    rng = np.random.default_rng(77)
    tangency = 0.0
    nested = True
    for _ in range(50):
        c = rng.uniform(0.1, 10)
        r1 = rng.uniform(0.1, 10)
        r2 = r1 + rng.uniform(0.01, 10)
        h1, h2 = horodisc_geometry(c, r1), horodisc_geometry(c, r2)
        tangency = max(tangency, abs(h1.center + h1.radius - 1), abs(h2.center + h2.radius - 1))
        nested = nested and h2.inside(h1)

    def density():
        k = int(rng.integers(0, 4))
        cuts = np.sort(rng.uniform(-5, 5, 2 * k))
        ivs = tuple((cuts[2 * i], cuts[2 * i + 1], rng.uniform(0.1, 3)) for i in range(k))
        return HalfPlaneDensity(ivs, rng.uniform(0.5, 2.0))

    mono_fail = 0
    for _ in range(20):
        mono_fail += not verify_monotonicity(density(), 200, 200)
    single_fail = 0
    for _ in range(20):
        d = density()
        x0 = monotonicity_threshold(d)
        level = d.c * x0 + math.pi * sum(w for _, _, w in d.intervals) + rng.uniform(0.5, 5)
        single_fail += not omega_single_curve(d, level).single
    ok = tangency < 1e-12 and nested and mono_fail == 0 and single_fail == 0
    line(5, ok, f"tangency err {tangency:.1e}, nesting={nested}, monotonicity failures {mono_fail}/20, "
                f"single-curve failures {single_fail}/20")
    assert ok


def test_criterion_6_class_B_evidence(line):
    t0 = time.perf_counter()
    margins = {}
    for n in (1, 2, 3):
        margins[n] = min(be_example.verify_tree_bound(s, 64).margin for s in be_example.segments(n, 0.125))
    tree_ok = all(m > 0 for m in margins.values())
    w5 = be_example.winding_of_g(5)
    w10 = be_example.winding_of_g(10)
    mono = be_example.arg_increasing(10, 1024)
    sc = be_example.verify_single_curve_tracts(Window(0, 250, 0, 250, 1001, 1001), math.exp(10))
    dt = time.perf_counter() - t0
    ok = tree_ok and w5 == 2 and w10 == 4 and mono and sc.ok and dt < 120
    margin_txt = ", ".join(f"n={n}: {m:+.3g}" for n, m in margins.items())
    line(6, ok, f"{dt:.1f}s; tree margins (bound - max Re g) {margin_txt}; winding r=5: {w5}, r=10: {w10}; "
                f"arg monotone={mono}; single-curve: {sc.complete} complete tracts, all m=1={sc.all_single}, "
                f"tree hits={sc.tree_hits}, critical={sc.critical_points}")
    assert ok


_HYGIENE = ["2*exp(z^4)", "exp(sin(z)-z)", "exp(exp(z))", "z^7-3*z^2+1", "cos(z)*exp(z/2)",
            "sin(z)/(z^2+9)", "beg(z)", "exp(beg(z)/4)", "(z+1i)^3*cos(2*z)", "exp(-z^2)*sin(3*z)"]


def test_criterion_7_numerics_hygiene(line):
    rng = np.random.default_rng(99)
    worst_fd = 0.0
    for _ in range(100):
        e = parse(_HYGIENE[int(rng.integers(len(_HYGIENE)))])
        z = complex(*rng.uniform(-1.5, 1.5, 2))
        d = evaluate(derivative(e), z)
        h = 1e-5
        fd = (evaluate(e, z + h) - evaluate(e, z - h)) / (2 * h)
        worst_fd = max(worst_fd, abs(d - fd) / max(abs(d), 1.0))
    worst_log = 0.0
    for _ in range(200):
        e = parse(_HYGIENE[int(rng.integers(len(_HYGIENE)))])
        z = complex(*rng.uniform(-3, 3, 2))
        v = evaluate(e, z)
        if v == 0 or not cmath.isfinite(v):
            continue
        worst_log = max(worst_log, abs(eval_log(e, z).to_complex() - v) / abs(v))
    d = parse("(z-0.31-0.12i)*(z+0.44i)^2*(z+0.7-0.55i)*(z-0.9+0.8i)")
    additive = True
    for _ in range(10):
        xs = np.sort(np.concatenate([[-1.2, 1.1], rng.uniform(-1.2, 1.1, 2)]))
        ys = np.sort(np.concatenate([[-1.05, 1.0], rng.uniform(-1.05, 1.0, 2)]))
        whole = count_zeros(d, Rect(xs[0], xs[-1], ys[0], ys[-1]))
        parts = sum(count_zeros(d, Rect(xs[i], xs[i + 1], ys[j], ys[j + 1]))
                    for i in range(3) for j in range(3))
        additive = additive and whole == parts == 5
    ok = worst_fd < 1e-6 and worst_log < 1e-9 and additive
    line(7, ok, f"max FD rel err {worst_fd:.1e}, max eval_log rel err {worst_log:.1e}, additivity={additive}")
    assert ok


def test_criterion_8_determinism(line, tmp_path):
    outs = []
    for threads in ("1", "4"):
        env = dict(os.environ, TRACTSCOPE_THREADS=threads)
        p = subprocess.run([sys.executable, "-m", "tractscope", "analyze", "--expr", "exp(sin(z)-z)",
                            "--window", "-20,20,-20,20"], capture_output=True, env=env, check=True)
        outs.append(p.stdout)
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    json.loads(outs[0])
    line(8, ok, f"report bytes identical for TRACTSCOPE_THREADS=1,4 ({len(outs[0])} bytes)")
    assert ok
