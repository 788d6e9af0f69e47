import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmo_bellman.candidate import angle_coefficients, foliate, trolleybus_coefficients
from bmo_bellman.catalog import parse_builtin
from bmo_bellman.errors import ConstructionError, DispatchError
from bmo_bellman.geometry import Point
from bmo_bellman.tangents import FromInfinity, TangentCoefficient

from conftest import cached_foliation

SWEEP = [("exp+", 0.5), ("cubic-", 1.0), ("power(3)", 0.7), ("quartic-(0.5)", 0.8), ("quintic(1)", 1 / 1.2 ** 0.5),
         ("quintic(1)", 1 / 1.5 ** 0.5), ("two-exp(0.5)", 0.3), ("square-linear", 0.3), ("square-linear", 1.5)]


def tangent_point(u, eps, side, t):
    w = u - eps if side == "R" else u + eps
    return Point(u + t * (w - u), (1 - t) * u * u + t * (w * w + eps * eps))


def test_angle_coefficients_symmetric_power():
    f = parse_builtin("power(3)")
    eps = 0.8
    m_l = TangentCoefficient("L", FromInfinity(), eps, f).value(0.0)
    m_r = TangentCoefficient("R", FromInfinity(), eps, f).value(0.0)
    assert m_r == pytest.approx(-m_l, abs=1e-12)
    a1, a2, a0 = angle_coefficients(0.0, m_r, m_l, f, eps)
    assert a1 == pytest.approx(0.0, abs=1e-12)
    assert a0 == pytest.approx(0.0, abs=1e-12)
    assert a2 == pytest.approx(m_l / (2 * eps), rel=1e-12)


def test_angle_coefficients_degenerate():
    f = parse_builtin("cubic+")
    v = 0.7
    d = float(f.eval_f1(v))
    a1, a2, a0 = angle_coefficients(v, d, d, f, 1.0)
    assert a2 == 0.0
    # affine function tangent to the boundary data at v
    assert a1 * v + a2 * v * v + a0 == pytest.approx(float(f.eval_f(v)))
    assert a1 == pytest.approx(d)


def test_angle_coefficients_reject_unbalanced():
    with pytest.raises(ConstructionError):
        angle_coefficients(0.0, 1.0, 1.0, parse_builtin("power(3)"), 1.0)


def test_trolleybus_coefficients_interpolate():
    fol = cached_foliation("quintic(1.2)", 1.0)
    tr = [fig for fig in fol.figures if fig.kind == "trolleybus"]
    assert len(tr) == 1
    a0, b0 = tr[0].a0, tr[0].b0
    f = fol.f
    b1, b2, b0_ = trolleybus_coefficients(a0, b0, f)
    for t in (a0, b0):
        assert b1 * t + b2 * t * t + b0_ == pytest.approx(float(f.eval_f(t)), abs=1e-10)
    avg = (float(f.eval_f1(b0)) - float(f.eval_f1(a0))) / (b0 - a0)
    assert b2 == pytest.approx(avg / 2, rel=1e-12)


def test_trolleybus_coefficients_symmetric_chord():
    f = parse_builtin("quartic-(0)")
    b1, b2, b0 = trolleybus_coefficients(-0.5, 0.5, f)
    assert b1 == pytest.approx(0.0, abs=1e-15)
    assert b2 == pytest.approx(-0.5)
    assert b0 == pytest.approx(-1 / 16 + 1 / 8)


def test_trolleybus_coefficients_reject_non_chord():
    with pytest.raises(ConstructionError):
        trolleybus_coefficients(-0.5, 0.3, parse_builtin("quartic-(0)"))


def test_signatures_and_layouts():
    fol = cached_foliation("exp+", 0.5)
    assert fol.signature == "L" and len(fol.figures) == 1
    fol = cached_foliation("quartic-(0)", 1.0)
    assert fol.signature == "LR"
    assert fol.tags() == ["L", "cup", "R"]
    fol = cached_foliation("quintic(1.5)", 1.0)
    assert fol.signature == "LRL"
    assert fol.tags() == ["L", "cup", "R", "angle", "L"]
    assert cached_foliation("quintic(1.2)", 1.0).tags() == ["L", "cup", "trL", "L"]


def test_locate_examples():
    eps = 0.9
    fol = cached_foliation("power(3)", eps)
    assert fol.locate(Point(0.0, eps * eps)).kind == "angle"
    fol = cached_foliation("quintic(1.5)", 1.0)
    cup = next(fig for fig in fol.figures if fig.kind == "cup")
    b = cup.hi
    fig = fol.locate(tangent_point(b + 1e-6, 1.0, "R", 0.5))
    assert fig.kind == "tangent" and fig.side == "R"
    x1 = 0.5 * (cup.lo + cup.hi)
    assert fol.locate(Point(x1, x1 * x1)) is cup


def test_locate_outside_raises():
    with pytest.raises(DispatchError):
        cached_foliation("exp+", 0.5).locate(Point(0.0, 1.0))


def test_evaluate_examples():
    assert cached_foliation("exp+", 0.5).evaluate((0.0, 0.25)) == pytest.approx(2 * math.exp(-0.5), rel=1e-12)
    assert cached_foliation("cubic+", 1.0).evaluate((0.0, 1.0)) == pytest.approx(2.0, rel=1e-12)
    assert cached_foliation("quartic-(0)", 1.0).evaluate((0.0, 0.25)) == pytest.approx(-1 / 16, abs=1e-12)


def test_two_sided_angle_matches_closed_form_power():
    # vertex at the origin for every eps
    for eps in (0.5, 1.0, 2.0):
        fol = cached_foliation("power(3)", eps)
        assert fol.family.balance_points[0] == pytest.approx(0.0, abs=1e-9)


def _boundaries(fol):
    """(figure, u, side) for every finite end of a tangent domain."""
    out = []
    for fig in fol.figures:
        if fig.kind != "tangent":
            continue
        for u, outward in ((fig.lo, -1), (fig.hi, 1)):
            if math.isfinite(u):
                out.append((fig, u, outward))
    return out


@pytest.mark.parametrize("name,eps", SWEEP)
def test_continuity_across_figure_boundaries(name, eps):
    fol = cached_foliation(name, eps)
    for fig, u, outward in _boundaries(fol):
        for t in np.linspace(0.1, 1.0, 100):
            x = tangent_point(u, eps, fig.side, t)
            nudged = tangent_point(u + outward * 1e-7 * eps, eps, fig.side, t)
            other = fol.locate(nudged)
            if other is fig or other.kind == "cup":
                continue
            a, b = fig.value(x), other.value(x)
            assert abs(a - b) <= 1e-7 * max(1.0, abs(a))


@pytest.mark.parametrize("name,eps", [("quartic-(0.5)", 0.8), ("quintic(1)", 1 / 1.2 ** 0.5),
                                      ("quintic(1)", 1 / 1.5 ** 0.5)])
def test_continuity_across_top_chords(name, eps):
    fol = cached_foliation(name, eps)
    checked = 0
    for cup in (fig for fig in fol.figures if fig.kind == "cup"):
        a, b = cup.cup.top()
        for t in np.linspace(0.02, 0.98, 49):
            x = Point(t * a + (1 - t) * b, t * a * a + (1 - t) * b * b)
            above = Point(x.x1, x.x2 + 1e-9)
            if above.x2 > above.x1 ** 2 + eps * eps:
                continue
            other = fol.locate(above)
            assert other is not cup
            assert cup.value(x) == pytest.approx(other.value(x), abs=1e-8 * max(1.0, abs(cup.value(x))))
            checked += 1
    assert checked > 20


@pytest.mark.parametrize("name,eps", SWEEP)
def test_x2_derivative_continuous_across_boundaries(name, eps):
    fol = cached_foliation(name, eps)
    h = 1e-5 * eps * eps
    for fig, u, outward in _boundaries(fol):
        for t in np.linspace(0.2, 0.8, 7):
            x = tangent_point(u, eps, fig.side, t)
            other = fol.locate(tangent_point(u + outward * 1e-7 * eps, eps, fig.side, t))
            if other is fig or other.kind == "cup":
                continue
            grads = [(g.value(Point(x.x1, x.x2 + h)) - g.value(Point(x.x1, x.x2 - h))) / (2 * h)
                     for g in (fig, other)]
            assert grads[0] == pytest.approx(grads[1], abs=1e-5 * max(1.0, abs(grads[0])))


@pytest.mark.parametrize("name,eps", SWEEP)
def test_lower_boundary_condition(name, eps):
    fol = cached_foliation(name, eps)
    f = fol.f
    for x1 in np.linspace(-4, 4, 101):
        x = Point(x1, x1 * x1)
        val = fol.locate(x).value(x)
        assert val == pytest.approx(float(f.eval_f(x1)), abs=1e-9 * max(1.0, abs(float(f.eval_f(x1)))))


@pytest.mark.parametrize("name,eps", SWEEP)
@settings(max_examples=40)
@given(data=st.data())
def test_midpoint_concavity(name, eps, data):
    fol = cached_foliation(name, eps)
    x1 = data.draw(st.floats(-4, 4))
    x2 = x1 * x1 + data.draw(st.floats(0, 1)) * eps * eps
    theta = data.draw(st.floats(0, math.pi))
    r = data.draw(st.floats(1e-3, 0.5)) * eps
    d = (math.cos(theta), math.sin(theta) * (1 + abs(x1)))
    p, q = Point(x1 - r * d[0], x2 - r * d[1]), Point(x1 + r * d[0], x2 + r * d[1])
    from bmo_bellman.geometry import segment_in_strip
    if not segment_in_strip(p, q, eps):
        return
    mid = fol.evaluate(Point(x1, x2))
    ends = 0.5 * (fol.evaluate(p) + fol.evaluate(q))
    assert mid >= ends - 1e-8 * max(1.0, abs(mid))


def test_order_switch_gives_same_foliation():
    f = parse_builtin("quintic(1.2)")
    a, b = foliate(f, 1.0, order="LR"), foliate(f, 1.0, order="RL")
    assert a.signature == b.signature
    for x in [(0.0, 0.5), (-1.0, 1.3), (2.0, 4.2)]:
        assert a.evaluate(x) == pytest.approx(b.evaluate(x), abs=1e-12)
