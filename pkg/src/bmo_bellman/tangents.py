"""Tangent-domain candidates B = m(u)(x1 - u) + f(u) and their coefficients m_R, m_L."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .boundary import MINUS_INF, PLUS_INF, BoundaryFunction
from .errors import DispatchError
from .geometry import Point, StripLocation, classify, u_tangent
from .numerics import ExpKernel


@dataclass(frozen=True)
class FromInfinity:
    """Minimal coefficient integrated in from the infinite end (constant A = 0)."""


@dataclass(frozen=True)
class ScreenEnd:
    """Coefficient seeded at the end of a cup or trolleybus screen [a0, b0]."""
    a0: float
    b0: float

    def __post_init__(self):
        if not self.b0 > self.a0:
            raise ValueError(f"screen needs a0 < b0, got [{self.a0}, {self.b0}]")


@dataclass(frozen=True)
class FreeConstant:
    """Coefficient with prescribed value m(at) = A."""
    A: float
    at: float


Anchor = Union[FromInfinity, ScreenEnd, FreeConstant]


def mean_f2(f: BoundaryFunction, a0: float, b0: float) -> float:
    """Average of f'' over [a0, b0]."""
    return (float(f.eval_f1(b0)) - float(f.eval_f1(a0))) / (b0 - a0)


def screen_differentials(f: BoundaryFunction, a0: float, b0: float) -> Tuple[float, float]:
    """D_L = f''(a0) - <f''>, D_R = f''(b0) - <f''> on [a0, b0]."""
    m = mean_f2(f, a0, b0)
    return float(f.eval_f2(a0)) - m, float(f.eval_f2(b0)) - m


RANGE_TOL = 1e-9


@dataclass
class TangentCoefficient:
    """m_R (side 'R') or m_L (side 'L') for one anchor, with its admissible u-range.

    Solves eps m_R' + m_R = f' or -eps m_L' + m_L = f'; the second derivative
    solves the same equation with f''' in place of f'. Both are evaluated
    through cached exponential kernels, so repeated calls cost one short
    local integral each.
    """
    side: str
    anchor: Anchor
    eps: float
    f: BoundaryFunction
    u_range: Optional[Tuple[float, float]] = None
    certificate: Optional[bool] = field(default=None, compare=False)

    def __post_init__(self):
        if self.side not in ("R", "L"):
            raise ValueError("side must be 'R' or 'L'")
        f, eps, a = self.f, self.eps, self.anchor
        bps = f.breakpoints
        if isinstance(a, FromInfinity):
            end = MINUS_INF if self.side == "R" else PLUS_INF
            self._m = ExpKernel(f.eval_f1, self.side, end, 0.0, eps, f.eps0, bps)
            self._m2 = ExpKernel(f.eval_f3, self.side, end, 0.0, eps, f.eps0, bps)
            default = (-math.inf, math.inf)
        elif isinstance(a, ScreenEnd):
            avg = mean_f2(f, a.a0, a.b0)
            d_l, d_r = screen_differentials(f, a.a0, a.b0)
            if self.side == "R":
                seed = float(f.eval_f1(a.b0)) - eps * avg
                self._m = ExpKernel(f.eval_f1, "R", a.b0, seed, eps, f.eps0, bps)
                self._m2 = ExpKernel(f.eval_f3, "R", a.b0, d_r / eps, eps, f.eps0, bps)
                default = (a.b0, math.inf)
            else:
                seed = float(f.eval_f1(a.a0)) + eps * avg
                self._m = ExpKernel(f.eval_f1, "L", a.a0, seed, eps, f.eps0, bps)
                self._m2 = ExpKernel(f.eval_f3, "L", a.a0, -d_l / eps, eps, f.eps0, bps)
                default = (-math.inf, a.a0)
        elif isinstance(a, FreeConstant):
            slope = float(f.eval_f1(a.at))
            curv = float(f.eval_f2(a.at))
            sgn = 1.0 if self.side == "R" else -1.0
            seed2 = (a.A - slope) / eps ** 2 + sgn * curv / eps
            self._m = ExpKernel(f.eval_f1, self.side, a.at, a.A, eps, f.eps0, bps)
            self._m2 = ExpKernel(f.eval_f3, self.side, a.at, seed2, eps, f.eps0, bps)
            default = (a.at, math.inf) if self.side == "R" else (-math.inf, a.at)
        else:
            raise TypeError(f"unknown anchor {a!r}")
        if self.u_range is None:
            self.u_range = default

    def contains(self, u: float, tol: float = RANGE_TOL) -> bool:
        lo, hi = self.u_range
        slack = tol * (1.0 + abs(u))
        return lo - slack <= u <= hi + slack

    def value(self, u: float) -> float:
        return self._m(u)

    def first(self, u: float) -> float:
        """m'(u) from the defining first-order equation."""
        diff = float(self.f.eval_f1(u)) - self._m(u)
        return diff / self.eps if self.side == "R" else -diff / self.eps

    def second(self, u: float) -> float:
        return self._m2(u)


def m_value(tc: TangentCoefficient, u: float) -> float:
    return tc.value(u)


def m_second(tc: TangentCoefficient, u: float) -> float:
    return tc.second(u)


def sign_certificate(tc: TangentCoefficient, lo: Optional[float] = None, hi: Optional[float] = None,
                     samples: int = 200, tol: float = 1e-10) -> bool:
    """m_R'' <= 0 (or m_L'' >= 0) at `samples` points of [lo, hi]; records the result."""
    r_lo, r_hi = tc.u_range
    lo = r_lo if lo is None else lo
    hi = r_hi if hi is None else hi
    if math.isinf(lo):
        lo = hi - 20.0 * tc.eps if math.isfinite(hi) else -10.0 * tc.eps
    if math.isinf(hi):
        hi = lo + 20.0 * tc.eps
    sgn = -1.0 if tc.side == "R" else 1.0
    ok = True
    for u in np.linspace(lo, hi, samples):
        val = tc.second(float(u))
        scale = 1.0 + abs(float(tc.f.eval_f3(float(u))))
        if sgn * val < -tol * scale:
            ok = False
            break
    tc.certificate = ok
    return ok


def eval_tangent(tc: TangentCoefficient, x: Point) -> float:
    """B = m(u)(x1 - u) + f(u) with u the foot of the tangent through x."""
    x = Point(*x)
    if classify(x, tc.eps) is StripLocation.LOWER:
        return float(tc.f.eval_f(x.x1))
    u = u_tangent(tc.side, x, tc.eps)
    if not tc.contains(u):
        raise DispatchError(f"u = {u:.12g} is outside the {tc.side} range {tc.u_range}")
    return tc.value(u) * (x.x1 - u) + float(tc.f.eval_f(u))
