import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from bmo_bellman.boundary import MINUS_INF, PLUS_INF
from bmo_bellman.errors import BracketError, DivergenceError
from bmo_bellman.numerics import (ExpKernel, convolve_force, find_root_monotone, g_eps, gauss_legendre,
                                  shifted_weighted_integral, weighted_integral)


def test_weighted_integral_constant_on_left_ray():
    assert weighted_integral(lambda t: 1.0, MINUS_INF, 0.0, 1.0, 1.0) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("u", [-3.0, 0.0, 2.5])
def test_weighted_integral_exponential_on_right_ray(u):
    # int_u^inf e^t e^{-2t} dt = e^{-u}; weighted relative to u it is e^u
    val = weighted_integral(np.exp, u, PLUS_INF, -1.0, 0.5, eps0=1.0)
    assert val == pytest.approx(math.exp(-u), rel=1e-10)
    shifted = shifted_weighted_integral(np.exp, u, PLUS_INF, -1.0, 0.5, u, eps0=1.0)
    assert shifted == pytest.approx(math.exp(u), rel=1e-10)


def test_weighted_integral_cubic_ramp():
    # 3 t^2 weighted from the right at u = 0, eps = 1 gives m_L(0) = 6
    val = weighted_integral(lambda t: 3 * t * t, 0.0, PLUS_INF, -1.0, 1.0)
    assert val == pytest.approx(6.0, rel=1e-12)


def test_weighted_integral_diverges_against_growth():
    with pytest.raises(DivergenceError):
        weighted_integral(lambda t: 1.0, 0.0, PLUS_INF, 1.0, 1.0)
    with pytest.raises(DivergenceError):
        weighted_integral(lambda t: 1.0, MINUS_INF, PLUS_INF, 1.0, 1.0)


def test_weighted_integral_respects_breakpoints():
    g = lambda t: abs(t) ** 0.5
    val = weighted_integral(g, -1.0, 2.0, 1.0, 0.7, breakpoints=(0.0,))
    ref = integrate.quad(lambda t: g(t) * math.exp(t / 0.7), -1, 2, points=[0.0], epsabs=1e-14)[0]
    assert val == pytest.approx(ref, rel=1e-10)


@given(st.floats(-3, 3), st.floats(0.01, 3), st.floats(0.01, 3), st.floats(0.2, 2), st.sampled_from([-1.0, 1.0]))
def test_weighted_integral_is_additive(a, l1, l2, eps, rate):
    g = lambda t: math.sin(3 * t) + t * t
    b, c = a + l1, a + l1 + l2
    whole = weighted_integral(g, a, c, rate, eps)
    parts = weighted_integral(g, a, b, rate, eps) + weighted_integral(g, b, c, rate, eps)
    scale = weighted_integral(lambda t: abs(g(t)) + 1, a, c, rate, eps)
    assert whole == pytest.approx(parts, abs=1e-10 * scale)


@given(st.floats(-5, 5), st.floats(0.1, 2))
def test_weighted_integral_orientation(u, eps):
    g = lambda t: t ** 3
    assert weighted_integral(g, u, u + 1, 1.0, eps) == pytest.approx(-weighted_integral(g, u + 1, u, 1.0, eps))


def test_find_root_monotone_example():
    root = find_root_monotone(lambda u: u * u + 2 * u - 2, 0.0, 2.0)
    assert root == pytest.approx(math.sqrt(3) - 1, abs=1e-12)


def test_find_root_monotone_needs_bracket():
    with pytest.raises(BracketError):
        find_root_monotone(lambda u: u * u + 1, -1.0, 1.0)


def test_find_root_monotone_endpoint_roots():
    assert find_root_monotone(lambda u: u, 0.0, 1.0) == 0.0
    assert find_root_monotone(lambda u: u - 1, 0.0, 1.0) == 1.0


def test_g_eps_linear_third_derivative():
    assert g_eps(lambda t: t, 1.0, 1.0) == pytest.approx(2.0, rel=1e-12)


@given(st.floats(-5, 5), st.floats(0.1, 3), st.floats(-3, 3))
def test_g_eps_linear_closed_form(u, eps, a):
    assert g_eps(lambda t: t - a, u, eps) == pytest.approx(2 * eps * (u - a), abs=1e-9 * (1 + abs(u) + abs(a)))


def test_convolve_force_quintic_from_infinity():
    f3 = lambda t: t * t - 4.0
    assert convolve_force(f3, PLUS_INF, 0.0, 1.0) == pytest.approx(-2.0, rel=1e-12)


@given(st.floats(-4, 4), st.floats(0.2, 2), st.floats(0.1, 5))
def test_convolve_force_quintic_closed_form(u, eps, d):
    f3 = lambda t: t * t - d
    exact = eps * (u * u + 2 * u * eps + 2 * eps * eps - d)
    assert convolve_force(f3, PLUS_INF, u, eps) == pytest.approx(exact, abs=1e-9 * (1 + u * u + d))


def test_convolve_force_vanishes_at_source():
    assert convolve_force(lambda t: t, 0.3, 0.3, 1.0) == 0.0


def test_gauss_legendre_polynomial_exact():
    assert gauss_legendre(lambda t: t ** 7, -1.0, 2.0) == pytest.approx((2 ** 8 - 1) / 8, rel=1e-13)


@given(st.floats(-10, 10), st.floats(0.1, 2))
def test_exp_kernel_matches_direct_quadrature(u, eps):
    g = np.cos
    ker = ExpKernel(g, "R", 0.0, 0.7, eps)
    direct = 0.7 * math.exp(-u / eps) + integrate.quad(
        lambda t: g(t) * math.exp((t - u) / eps), 0.0, u, epsabs=1e-14, limit=200)[0] / eps
    if u >= 0:
        assert ker(u) == pytest.approx(direct, abs=1e-9 * (1 + abs(direct)))


def test_exp_kernel_rejects_wrong_infinite_anchor():
    with pytest.raises(ValueError):
        ExpKernel(np.exp, "R", PLUS_INF, 0.0, 0.5)
