"""Geometry of the parabolic strip x1^2 <= x2 <= x1^2 + eps^2."""
from __future__ import annotations

import enum
import math
from typing import NamedTuple, Tuple

from .errors import DomainError

# boundary band, scaled by 1 + x1^2
BOUNDARY_TOL = 1e-12


class Point(NamedTuple):
    x1: float
    x2: float


class StripLocation(enum.Enum):
    INTERIOR = "interior"
    LOWER = "lower"
    UPPER = "upper"
    OUTSIDE = "outside"


class Segment(NamedTuple):
    p: Point
    q: Point

    def at(self, t: float) -> Point:
        return Point(self.p.x1 + t * (self.q.x1 - self.p.x1),
                     self.p.x2 + t * (self.q.x2 - self.p.x2))

    def midpoint(self) -> Point:
        return self.at(0.5)


def _band(x1: float) -> float:
    return BOUNDARY_TOL * (1.0 + x1 * x1)


def classify(x: Point, eps: float) -> StripLocation:
    x1, x2 = x
    h = x2 - x1 * x1
    band = _band(x1)
    if h < -band or h > eps * eps + band:
        return StripLocation.OUTSIDE
    if abs(h) <= band:
        return StripLocation.LOWER
    if abs(h - eps * eps) <= band:
        return StripLocation.UPPER
    return StripLocation.INTERIOR


def height(x: Point) -> float:
    """Distance above the lower parabola, x2 - x1^2."""
    return x[1] - x[0] * x[0]


def u_tangent(side: str, x: Point, eps: float) -> float:
    """Abscissa of the lower-boundary foot of the side-tangent through x.

    Uses the rationalized form d / (eps + sqrt(eps^2 - d)) so that points
    close to the lower boundary lose no digits.
    """
    x1, x2 = x
    d = x2 - x1 * x1
    band = _band(x1)
    if d < -band or d > eps * eps + band:
        raise DomainError(f"point {tuple(x)} is outside the strip of width {eps}")
    d = min(max(d, 0.0), eps * eps)
    shift = d / (eps + math.sqrt(eps * eps - d))
    if side == "R":
        return x1 + shift
    if side == "L":
        return x1 - shift
    raise ValueError(f"side must be 'R' or 'L', got {side!r}")


def upper_point(w: float, eps: float) -> Point:
    return Point(w, w * w + eps * eps)


def lower_point(u: float) -> Point:
    return Point(u, u * u)


def tangent_segment(side: str, u: float, eps: float) -> Segment:
    """Extremal segment of the side family with foot at (u, u^2)."""
    if side == "R":
        return Segment(upper_point(u - eps, eps), lower_point(u))
    if side == "L":
        return Segment(lower_point(u), upper_point(u + eps, eps))
    raise ValueError(f"side must be 'R' or 'L', got {side!r}")


def tangent_line(side: str, u: float, eps: float) -> Tuple[float, float]:
    """(slope, intercept) of the full line carrying the tangent with foot u."""
    if side == "R":
        return 2.0 * (u - eps), -u * u + 2.0 * u * eps
    if side == "L":
        return 2.0 * (u + eps), -u * u - 2.0 * u * eps
    raise ValueError(f"side must be 'R' or 'L', got {side!r}")


def chord_line(a: float, b: float) -> Tuple[float, float]:
    """(slope, intercept) of the line through (a, a^2) and (b, b^2)."""
    if not a < b:
        raise ValueError(f"chord needs a < b, got a={a}, b={b}")
    return a + b, -a * b


def segment_in_strip(p: Point, q: Point, eps: float, tol: float = 0.0) -> bool:
    """True when the whole segment [p, q] lies in the closed strip.

    x2 - x1^2 is concave along a segment, so the lower constraint only needs
    the endpoints while the upper one needs the interior maximum.
    """
    if classify(p, eps) is StripLocation.OUTSIDE or classify(q, eps) is StripLocation.OUTSIDE:
        return False
    d1 = q.x1 - p.x1
    d2 = q.x2 - p.x2
    if d1 == 0.0:
        return True
    # h(t) = p2 + t d2 - (p1 + t d1)^2, maximal at t* below
    t_star = (d2 - 2.0 * p.x1 * d1) / (2.0 * d1 * d1)
    if 0.0 < t_star < 1.0:
        x1 = p.x1 + t_star * d1
        h = p.x2 + t_star * d2 - x1 * x1
        if h > eps * eps + tol + _band(x1):
            return False
    return True
