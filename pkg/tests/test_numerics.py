import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from navier_blowup import bubble as bb
from navier_blowup.errors import DivergentIntegralError, InvalidArgumentError
from navier_blowup.numerics import (
    OMEGA5,
    ball_radial_rule,
    clustered_grid,
    composite_gauss,
    fornberg_weights,
    gauss_rule,
    integrate_ode,
    radial_chain,
    radial_integral_5d,
    radial_laplacian_fd,
)


def test_gauss_constant():
    assert gauss_rule(1, -1, 1).integrate(lambda x: np.ones_like(x)) == pytest.approx(2.0, abs=1e-15)


def test_gauss_two_point_quadratic():
    assert gauss_rule(2, -1, 1).integrate(lambda x: x**2) == pytest.approx(2 / 3, rel=1e-15)


def test_gauss_x10():
    assert abs(gauss_rule(32, 0, 1).integrate(lambda x: x**10) - 1 / 11) <= 1e-14


def test_gauss_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        gauss_rule(0, 0, 1)
    with pytest.raises(InvalidArgumentError):
        gauss_rule(3, 1, 1)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 64), data=st.data())
def test_gauss_exact_for_monomials(n, data):
    k = data.draw(st.integers(0, 2 * n - 1))
    exact = (1 - (-1) ** (k + 1)) / (k + 1)  # int_{-1}^1 x^k
    got = gauss_rule(n, -1, 1).integrate(lambda x: x**k)
    # odd monomials integrate to zero; compare on the scale of int |x|^k
    assert abs(got - exact) <= 1e-13 * (2 / (k + 1))


def test_composite_gauss_interval_length():
    x, w = composite_gauss([0.0, 0.5, 2.0, 3.0], 4)
    assert w.sum() == pytest.approx(3.0, rel=1e-15)
    assert np.all((x > 0) & (x < 3))


def test_radial_integral_tan_oracle():
    # r = tan(theta) reduces int r^4 (1+r^2)^-4.5 dr to int sin^4 cos^3 = 2/35
    got = radial_integral_5d(lambda r: (1 + r * r) ** -4.5, 9.0)
    assert got == pytest.approx(16 * math.pi**2 / 105, rel=1e-12)


def test_radial_integral_unit_ball_volume():
    got = radial_integral_5d(lambda r: (r < 1).astype(float), 50.0, breakpoints=[1.0])
    gamma_oracle = math.pi**2.5 / math.gamma(3.5)
    assert got == pytest.approx(8 * math.pi**2 / 15, rel=1e-12)
    assert got == pytest.approx(gamma_oracle, rel=1e-12)
    assert OMEGA5 / 5 == pytest.approx(gamma_oracle, rel=1e-15)


def test_radial_integral_zero():
    assert radial_integral_5d(lambda r: 0.0 * r, 9.0) == 0.0


def test_radial_integral_rejects_slow_decay():
    with pytest.raises(DivergentIntegralError):
        radial_integral_5d(lambda r: (1 + r) ** -5, 5.0)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.5, 3.0), b=st.floats(0.5, 3.0), s=st.floats(-2, 2))
def test_radial_integral_linear(a, b, s):
    f = lambda r: (a + r * r) ** -4.5  # noqa: E731
    g = lambda r: s * np.exp(-b * r)  # noqa: E731
    lhs = radial_integral_5d(lambda r: f(r) + g(r), 9.0)
    rhs = radial_integral_5d(f, 9.0) + radial_integral_5d(g, 9.0)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_ball_rule_volume():
    r, w = ball_radial_rule(2.0, 0.01, 16)
    assert w.sum() == pytest.approx(OMEGA5 * 2.0**5 / 5, rel=1e-13)


def test_ode_constant_is_harmonic():
    sys = radial_chain(lambda r, f: np.zeros(1), 1)
    prof = integrate_ode(sys, [1.0, 0.0], 1.0, 1e-10)
    assert np.max(np.abs(prof.u - 1.0)) <= 1e-10


def test_ode_quadratic():
    sys = radial_chain(lambda r, f: np.array([-10.0]), 1)
    prof = integrate_ode(sys, [1.0, 0.0], 1.0, 1e-10)
    assert np.max(np.abs(prof.u - (1 - prof.r**2))) <= 1e-10


def _bubble_error(tol):
    sys = radial_chain(lambda r, f: np.array([f[1], f[0] ** 9]), 2)
    r = np.linspace(0, 2, 41)
    prof = integrate_ode(sys, [bb.C0, 0.0, -5 * bb.C0, 0.0], 2.0, tol, grid=r)
    ref = bb.radial_value(1.0, r)
    return float(np.max(np.abs(prof.u - ref) / ref))


def test_ode_reproduces_bubble():
    assert _bubble_error(1e-12) <= 1e-10


def test_ode_error_tracks_tolerance():
    # global error proportional to the requested tolerance
    errs = [_bubble_error(t) for t in (1e-4, 1e-6, 1e-8, 1e-10)]
    for t, e in zip((1e-4, 1e-6, 1e-8, 1e-10), errs):
        assert e <= 100 * t
    for a, b in zip(errs, errs[1:]):
        assert b <= a / 10


def test_fornberg_weights_known():
    w = fornberg_weights(0.0, np.array([-1.0, 0.0, 1.0]), 2)
    np.testing.assert_allclose(w[1], [-0.5, 0.0, 0.5], atol=1e-15)
    np.testing.assert_allclose(w[2], [1.0, -2.0, 1.0], atol=1e-15)


def test_radial_laplacian_fd_quadratic():
    r = np.linspace(0, 1, 51)
    lap = radial_laplacian_fd(r, r**2)
    np.testing.assert_allclose(lap, 10.0, rtol=1e-9)


def test_clustered_grid():
    g = clustered_grid(1.0, 1e-3, 200)
    assert g[0] == 0 and g[-1] == 1.0
    assert np.all(np.diff(g) > 0)
    assert g[1] < 1e-3
