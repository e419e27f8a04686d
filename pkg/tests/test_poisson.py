import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tractscope.poisson import (HalfPlaneDensity, LevelTooSmall, ModelError, PoissonModel,
                                check_reflection_pairing, dU_dx, fiber_enumerate, halfplane_U,
                                horodisc_geometry, model_critical_points, model_eval,
                                model_eval_direct, model_u, monotonicity_threshold,
                                omega_single_curve, verify_monotonicity)


def one(R=1.0, theta=0.0):
    return PoissonModel(R, theta, (1,), (1.0,))


def pm(zs, cs):
    return PoissonModel(1.0, 0.0, tuple(zs), tuple(cs))


def random_model(rng, n):
    angles = np.sort(rng.uniform(0, 2 * math.pi, n))
    return PoissonModel.from_angles(angles, rng.uniform(0.2, 3.0, n), R=rng.uniform(0.5, 3), theta=rng.uniform(-3, 3))


def test_model_validation():
    with pytest.raises(ModelError):
        pm([1.1], [1])
    with pytest.raises(ModelError):
        pm([1, 1], [1, 1])
    with pytest.raises(ModelError):
        pm([1], [0])
    with pytest.raises(ModelError):
        model_u(one(), 1.0)


def test_model_u_examples():
    m = pm([1, -1j, cmath.exp(2j)], [0.5, 1.0, 2.0])
    assert model_u(m, 0) == pytest.approx(3.5)
    assert model_u(one(), 0.5) == pytest.approx(3)
    assert model_u(pm([1, -1], [1, 1]), 0.5j) == pytest.approx(6 / 5)


def test_model_eval_examples():
    m = PoissonModel(2.0, 0.4, (1, 1j), (1.0, 2.0))
    v = model_eval(m, 0)
    assert v.log_mod == pytest.approx(math.log(2) + 3)
    assert v.arg == pytest.approx(0.4)
    w = model_eval(one(), 0.5)
    assert w.log_mod == pytest.approx(3) and w.arg == pytest.approx(0, abs=1e-15)


def test_model_eval_matches_direct():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m = random_model(rng, int(rng.integers(1, 6)))
        t = 0.9 * rng.uniform() * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
        assert model_eval(m, t).to_complex() == pytest.approx(model_eval_direct(m, t), rel=1e-12)


def test_critical_points_examples():
    assert len(model_critical_points(one())) == 0
    sym = pm([1, -1], [1, 1])
    cp = model_critical_points(sym)
    assert cp.degree == 1 and cp.at_infinity == 1
    assert len(cp) == 1 and abs(cp.roots[0][0]) < 1e-14 and cp.in_disc == 1
    assert check_reflection_pairing(sym, cp.roots)
    cp2 = model_critical_points(pm([1, 1j], [1, 1]))
    roots = np.roots([2 * (1 + 1j) / 2, -2 * (1j + 1j), (1j * 1j + 1j)])  # (i-t)^2 + i(1-t)^2
    assert sorted(abs(r) for r, _ in cp2.roots) == pytest.approx(sorted(abs(roots)), rel=1e-10)
    assert cp2.in_disc == 1


def test_critical_points_are_zeros_of_derivative():
    rng = np.random.default_rng(11)
    m = random_model(rng, 4)
    for r, inside in model_critical_points(m).roots:
        if inside:
            h = 1e-6
            du = (model_eval_direct(m, r + h) - model_eval_direct(m, r - h)) / (2 * h)
            assert abs(du) < 1e-5 * abs(model_eval_direct(m, r))


def test_pairing_negative_control():
    rng = np.random.default_rng(5)
    m = random_model(rng, 3)
    roots = [r for r, _ in model_critical_points(m).roots]
    assert check_reflection_pairing(m, roots)
    roots[0] += 1e-3
    assert not check_reflection_pairing(m, roots)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_in_disc_count_and_pairing(n, seed):
    m = random_model(np.random.default_rng(seed), n)
    cp = model_critical_points(m)
    assert cp.in_disc <= n - 1
    assert check_reflection_pairing(m, cp.roots)
    assert all(abs(abs(r) - 1) >= 1e-9 for r, _ in cp.roots)


def test_fibers_examples():
    t = fiber_enumerate(one(), math.e, [0, 1])
    assert abs(t[0]) < 1e-15
    assert t[1] == pytest.approx(2j * math.pi / (2 + 2j * math.pi))
    assert abs(t[1]) == pytest.approx(math.pi / math.sqrt(1 + math.pi**2))
    with pytest.raises(ModelError):
        fiber_enumerate(one(), 1.0, [0])
    with pytest.raises(ModelError):
        fiber_enumerate(pm([1, -1], [1, 1]), 3.0, [0])


def test_fibers_solve_equation():
    m = PoissonModel(1.5, 0.7, (cmath.exp(0.3j),), (0.8,))
    w = 4 - 3j
    ts = fiber_enumerate(m, w, range(-50, 51))
    assert len({(round(t.real, 12), round(t.imag, 12)) for t in ts}) == 101
    for t in ts:
        assert abs(t) < 1
        assert abs(model_eval(m, t).to_complex() - w) < 1e-9 * abs(w)


def test_horodisc_examples():
    h = horodisc_geometry(1, 1)
    assert (h.center, h.radius) == (0.5, 0.5)
    assert horodisc_geometry(1, 1e12).radius < 1e-11
    for c in (0.3, 1, 4):
        h1, h2 = horodisc_geometry(c, 2), horodisc_geometry(c, 5)
        assert h1.center + h1.radius == pytest.approx(1, abs=1e-12)
        assert h2.inside(h1) and not h1.inside(h2)


def test_horodisc_matches_level_set():
    rng = np.random.default_rng(2)
    c, Rj = 1.7, 2.3
    h = horodisc_geometry(c, Rj)
    t = np.sqrt(rng.uniform(0, 1, 2000)) * np.exp(1j * rng.uniform(0, 2 * np.pi, 2000))
    P = (1 - np.abs(t) ** 2) / np.abs(1 - t) ** 2
    far = np.abs(c * P - Rj) > 1e-6
    assert np.all(h.contains(t)[far] == (c * P > Rj)[far])


def test_halfplane_examples():
    empty = HalfPlaneDensity((), 1.0)
    assert halfplane_U(empty, 3.0, -7.0) == pytest.approx(3.0)
    one_iv = HalfPlaneDensity(((-1, 1, 1),), 0.0)
    assert halfplane_U(one_iv, 1.0, 0.0) == pytest.approx(math.pi / 2)
    c1 = HalfPlaneDensity(((-1, 1, 1),), 1.0)
    assert halfplane_U(c1, 1e8, 0.3) / 1e8 == pytest.approx(1.0, rel=1e-7)
    with pytest.raises(ModelError):
        halfplane_U(c1, 0.0, 0.0)


def test_threshold_examples():
    assert monotonicity_threshold(HalfPlaneDensity(((-1, 1, 1),), 1.0)) == pytest.approx(2)
    assert monotonicity_threshold(HalfPlaneDensity((), 1.0)) == 0
    a = monotonicity_threshold(HalfPlaneDensity(((-1, 0, 1), (2, 3, 0.5)), 1.3))
    b = monotonicity_threshold(HalfPlaneDensity(((-1, 0, 2), (2, 3, 1.0)), 1.3))
    assert b == pytest.approx(math.sqrt(2) * a)


def test_monotonicity_holds_right_of_threshold():
    d = HalfPlaneDensity(((-2, -1, 3), (0, 0.5, 1), (1, 4, 0.2)), 0.7)
    assert verify_monotonicity(d)
    x0 = monotonicity_threshold(d)
    ys = np.linspace(-10, 10, 50)
    assert np.all(dU_dx(d, np.full_like(ys, x0 * 1.01), ys) > 0)


def test_omega_examples():
    line = omega_single_curve(HalfPlaneDensity((), 1.0), 5.0)
    assert line.single and np.allclose(line.xs, 5.0)
    d = HalfPlaneDensity(((-1, 1, 1),), 1.0)
    a = omega_single_curve(d, 10.0)
    assert a.single and np.all((a.xs > 8) & (a.xs < 10))
    assert a.xs[0] == pytest.approx(10, abs=0.1)
    b = omega_single_curve(d, 12.0, ys=a.ys)
    assert np.all(a.xs < b.xs)
    with pytest.raises(LevelTooSmall):
        omega_single_curve(HalfPlaneDensity(((-1, 1, 5),), 0.1), 1.0)
