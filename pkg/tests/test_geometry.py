import math

import pytest
from hypothesis import given, strategies as st

from bmo_bellman.geometry import (Point, StripLocation, chord_line, classify, segment_in_strip,
                                  tangent_line, tangent_segment, u_tangent)


def test_classify_examples():
    assert classify(Point(0, 0), 1) is StripLocation.LOWER
    assert classify(Point(0, 1), 1) is StripLocation.UPPER
    assert classify(Point(0, 2), 1) is StripLocation.OUTSIDE
    assert classify(Point(0, 0.5), 1) is StripLocation.INTERIOR


def test_u_tangent_examples():
    assert u_tangent("R", (0, 0.75), 1) == pytest.approx(0.5, abs=1e-15)
    assert u_tangent("L", (0, 0.75), 1) == pytest.approx(-0.5, abs=1e-15)


def test_u_tangent_on_lower_boundary_is_x1():
    assert u_tangent("R", (1.3, 1.69), 0.4) == pytest.approx(1.3, abs=1e-14)
    assert u_tangent("L", (1.3, 1.69), 0.4) == pytest.approx(1.3, abs=1e-14)


def test_tangent_segment_example():
    seg = tangent_segment("R", 0.0, 1.0)
    ends = sorted([tuple(seg[0]), tuple(seg[1])])
    assert ends[0] == pytest.approx((-1.0, 2.0))
    assert ends[1] == pytest.approx((0.0, 0.0))


def test_chord_line_examples():
    k, m = chord_line(-1, 1)
    assert (k, m) == pytest.approx((0.0, 1.0))
    k, m = chord_line(0, 2)
    assert (k, m) == pytest.approx((2.0, 0.0))


def test_segment_in_strip():
    assert segment_in_strip(Point(-0.5, 0.25), Point(0.5, 0.25), 1.0)
    # chord of length 3 pokes above the upper parabola at its middle
    assert not segment_in_strip(Point(-1.5, 2.25), Point(1.5, 2.25), 1.0)


strip_points = st.tuples(st.floats(-50, 50), st.floats(0, 1), st.floats(0.05, 5)).map(
    lambda t: (Point(t[0], t[0] ** 2 + t[1] * t[2] ** 2), t[2]))


@given(strip_points, st.sampled_from(["R", "L"]))
def test_point_lies_on_its_tangent(pe, side):
    x, eps = pe
    u = u_tangent(side, x, eps)
    k, m = tangent_line(side, u, eps)
    assert x.x2 == pytest.approx(k * x.x1 + m, rel=1e-9, abs=1e-9 * (1 + x.x1 ** 2))
    # tangency point sits eps away on the correct side
    w = u - eps if side == "R" else u + eps
    assert (x.x1 - u) * (w - u) >= -1e-9 * (1 + abs(u))


@given(st.floats(-20, 20), st.floats(0.05, 5), st.sampled_from(["R", "L"]), st.floats(0, 1))
def test_u_tangent_round_trip(u, eps, side, t):
    w = u - eps if side == "R" else u + eps
    x = Point(u + t * (w - u), (1 - t) * u * u + t * (w * w + eps * eps))
    assert u_tangent(side, x, eps) == pytest.approx(u, abs=1e-9 * (1 + abs(u)))


@given(st.floats(-10, 10), st.floats(1e-3, 5))
def test_chord_passes_through_both_ends(a, ell):
    b = a + ell
    k, m = chord_line(a, b)
    assert k * a + m == pytest.approx(a * a, abs=1e-9 * (1 + a * a))
    assert k * b + m == pytest.approx(b * b, abs=1e-9 * (1 + b * b))
    assert math.isfinite(k)
