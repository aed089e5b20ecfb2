import math
import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.optimize import bisect

from l0ridge.core import InvalidInputError
from l0ridge.ortho import (ATTRACTIVE, REPELLING, SADDLE, ScalarDynamics, dynamics_step,
                           fixed_points, iterate, local_min_x_star, shrinkage_residual,
                           threshold_select, xfx_curve)

DELTA = 1e-5


def bisect_root(b, K, lo, hi):
    g = lambda x: x * (1 + K / (DELTA ** 2 + x * x)) - b
    return bisect(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def double_root_K(beta_hat):
    """K values where two fixed points merge (cubic discriminant zero), via sympy."""
    x, K = sp.symbols("x K")
    b = sp.nsimplify(beta_hat)
    d2 = sp.Rational(1, 10 ** 10)
    cubic = x ** 3 - b * x ** 2 + (K + d2) * x - b * d2
    disc = sp.Poly(sp.discriminant(cubic, x), K)
    return sorted(float(r) for r in disc.nroots(n=30) if r.is_real and r > 0)


def test_dynamics_step_examples():
    dyn = ScalarDynamics(0.9, 0.3)
    assert dynamics_step(0.0, dyn) == pytest.approx(0.9 / (1 + 0.3 / 1e-10), rel=1e-14)
    assert dynamics_step(0.0, dyn) == pytest.approx(3e-10, rel=1e-9)
    assert dynamics_step(1e12, dyn) == pytest.approx(0.9, rel=1e-12)
    x3 = bisect_root(0.9, 0.1, 0.5, 0.9)
    assert x3 == pytest.approx(0.7702, abs=1e-4)
    assert dynamics_step(x3, ScalarDynamics(0.9, 0.1)) == pytest.approx(x3, abs=1e-12)


def test_local_min():
    dyn = ScalarDynamics(1.0, 0.1)
    xs = local_min_x_star(dyn)
    exact = math.sqrt(0.05 - 1e-10 + 0.5 * math.sqrt((0.1 - 2e-10) ** 2 - 4e-10))
    assert xs == pytest.approx(exact, rel=1e-14)
    assert xs == pytest.approx(math.sqrt(0.1), rel=1e-8)
    assert xs * dyn.f(xs) == pytest.approx(2 * math.sqrt(0.1), rel=1e-8)
    # it really is a minimum of x f(x)
    for h in (1e-4, -1e-4):
        assert (xs + h) * dyn.f(xs + h) > xs * dyn.f(xs)
    with pytest.raises(InvalidInputError):
        local_min_x_star(ScalarDynamics(1.0, 4 * DELTA ** 2))


def test_local_min_small_delta_limit():
    for d in (1e-3, 1e-5, 1e-8):
        assert local_min_x_star(ScalarDynamics(1.0, 0.2, d)) == pytest.approx(math.sqrt(0.2), rel=10 * d)


def test_single_root_case():
    fp = fixed_points(ScalarDynamics(0.9, 0.3))
    assert len(fp.roots) == 1 and fp.classification == (ATTRACTIVE,)
    assert fp.roots[0] == pytest.approx(DELTA ** 2 * 0.9 / 0.3, rel=1e-6)
    assert fp.predicted_limit == fp.roots[0]
    assert not fp.selected


def test_three_root_case():
    fp = fixed_points(ScalarDynamics(0.9, 0.1))
    assert fp.classification == (ATTRACTIVE, REPELLING, ATTRACTIVE)
    x1, x2, x3 = fp.roots
    assert x2 == pytest.approx(0.45 - math.sqrt(0.81 / 4 - 0.1), abs=1e-6)
    assert x3 == pytest.approx(0.45 + math.sqrt(0.81 / 4 - 0.1), abs=1e-6)
    assert x2 == pytest.approx(bisect_root(0.9, 0.1, 0.01, 0.3), rel=1e-12)
    assert x3 == pytest.approx(bisect_root(0.9, 0.1, 0.5, 0.9), rel=1e-12)
    assert x1 == pytest.approx(bisect_root(0.9, 0.1, 0.0, 1e-6), rel=1e-9)
    assert fp.predicted_limit == x3 and fp.selected


def test_negative_beta_mirrors():
    a = fixed_points(ScalarDynamics(0.9, 0.1))
    b = fixed_points(ScalarDynamics(-0.9, 0.1))
    assert b.roots == tuple(-r for r in a.roots)
    assert b.predicted_limit == -a.predicted_limit
    assert b.classification == a.classification


def test_zero_beta():
    fp = fixed_points(ScalarDynamics(0.0, 0.1))
    assert fp.roots == (0.0,) and fp.predicted_limit == 0.0


@pytest.mark.parametrize("beta_hat", [0.9, 0.5, 1.7])
def test_double_root_from_symbolic_discriminant(beta_hat):
    Ks = double_root_K(beta_hat)
    assert len(Ks) == 2
    # the upper merge sits at beta^2 / 4 up to O(delta^2)
    assert Ks[1] == pytest.approx(beta_hat ** 2 / 4, rel=1e-8)
    for K, kinds in zip(Ks, [(SADDLE, ATTRACTIVE), (ATTRACTIVE, SADDLE)]):
        dyn = ScalarDynamics(beta_hat, K)
        fp = fixed_points(dyn)
        assert fp.classification == kinds
        assert all(0 < r <= beta_hat for r in fp.roots)
        for r in fp.roots:
            assert abs(shrinkage_residual(dyn, r)) <= 1e-10 * beta_hat


def test_double_root_small_K_regime():
    # K = beta^2 / 4 is the merge point up to delta^2 terms
    fp = fixed_points(ScalarDynamics(0.9, 0.2025))
    assert len(fp.roots) in (2, 3)
    assert fp.roots[-1] == pytest.approx(0.45, abs=1e-4)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(1e-3, 0.99), st.booleans())
def test_roots_satisfy_fixed_point_equation(b, K, neg):
    b = -b if neg else b
    dyn = ScalarDynamics(b, K)
    fp = fixed_points(dyn)
    assert len(fp.roots) in (1, 2, 3)
    for r in fp.roots:
        assert abs(shrinkage_residual(dyn, r)) <= 1e-10 * abs(b)
        assert 0 < abs(r) <= abs(b) and math.copysign(1, r) == math.copysign(1, b)
    assert list(np.abs(fp.roots)) == sorted(np.abs(fp.roots))


@settings(max_examples=150, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.01, 0.9))
def test_iteration_reaches_predicted_limit(b, K):
    assume(abs(b * b - 4 * K) > 1e-3)
    dyn = ScalarDynamics(b, K)
    assert iterate(dyn, 10_000) == pytest.approx(fixed_points(dyn).predicted_limit, abs=1e-8)


@settings(max_examples=150, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(1e-3, 0.99))
def test_selection_matches_threshold(b, K):
    assume(abs(b * b - 4 * K) > 1e-6)
    assert fixed_points(ScalarDynamics(b, K)).selected == (b * b > 4 * K)


def test_threshold_select_examples():
    assert threshold_select([0.9], 10.0, 1.0, 100).tolist() == [0]
    assert threshold_select([0.2], 10.0, 1.0, 100).tolist() == []
    lt = math.log(100) / 4
    bh = np.array([0.3, 0.2, -0.22, 0.21, 0.1, -0.5])
    got = threshold_select(bh, lt, 1.0, 100)
    assert got.tolist() == np.flatnonzero(bh ** 2 > math.log(100) / 100).tolist() == [0, 2, 5]


def test_threshold_select_warns_for_large_K():
    with pytest.warns(RuntimeWarning):
        threshold_select([5.0], 200.0, 1.0, 100)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        threshold_select([5.0], 50.0, 1.0, 100)


def test_xfx_curve():
    x, y = xfx_curve(0.9, 0.1, num=11)
    assert x[0] == 0 and x[-1] == pytest.approx(1.08)
    assert y == pytest.approx(x * (1 + 0.1 / (DELTA ** 2 + x ** 2)))


def test_scalar_dynamics_validation():
    with pytest.raises(InvalidInputError):
        ScalarDynamics(1.0, -0.1)
    with pytest.raises(InvalidInputError):
        ScalarDynamics(1.0, 0.1, 0.0)
    assert ScalarDynamics(1.0, 1e-9).regular and not ScalarDynamics(1.0, 8e-10).regular
