"""Exponentially weighted integrals, bracketed roots and the convolution g_eps = f''' * w_eps.

Every integral against exp(+-t/eps) is computed in shifted form
exp(+-(t - t0)/eps) with t0 the endpoint carrying the largest weight, so
the products that appear in the tangent coefficients never overflow.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .boundary import ExtendedReal, Infinite, is_infinite
from .errors import AccuracyError, BracketError, DivergenceError


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions must be at least 10")


DEFAULT_SETTINGS = QuadratureSettings()
TIGHT_SETTINGS = QuadratureSettings(rel_tol=1e-13, abs_tol=1e-15, max_subdivisions=4000)

_GL_N = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_N)


def _cuts(lo: float, hi: float, breakpoints: Iterable[float]) -> list:
    inner = sorted(b for b in breakpoints if lo < b < hi)
    return [lo] + inner + [hi]


def gl_nodes(lo: float, hi: float, breakpoints: Iterable[float] = (),
             max_panel: Optional[float] = None):
    """Nodes and weights of the composite Gauss-Legendre rule on [lo, hi], lo < hi."""
    edges = _cuts(lo, hi, breakpoints)
    nodes, weights = [], []
    for a, b in zip(edges, edges[1:]):
        k = 1 if max_panel is None else max(1, int(math.ceil((b - a) / max_panel)))
        grid = np.linspace(a, b, k + 1)
        half = 0.5 * np.diff(grid)
        mid = 0.5 * (grid[1:] + grid[:-1])
        nodes.append((mid[:, None] + half[:, None] * _GL_X[None, :]).ravel())
        weights.append((half[:, None] * _GL_W[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def gauss_legendre(func: Callable, lo: float, hi: float, breakpoints: Iterable[float] = (),
                   max_panel: Optional[float] = None) -> float:
    """Composite fixed-order Gauss-Legendre rule, split at breakpoints.

    `func` must accept a numpy array. A reversed interval gives the negated value.
    """
    if lo == hi:
        return 0.0
    sign = 1.0
    if lo > hi:
        lo, hi, sign = hi, lo, -1.0
    t, w = gl_nodes(lo, hi, breakpoints, max_panel)
    return sign * float(np.dot(w, np.asarray(func(t), dtype=float)))


def _call_scalar(g: Callable, t: float) -> float:
    return float(g(t))


def _tail_length(g: Callable, ref: float, direction: int, rate: float, eps: float,
                 eps0: float, abs_tol: float) -> float:
    """Distance T from ref beyond which the integrand tail is below abs_tol.

    The envelope C exp(-lam |t - ref|), lam = |rate|/eps - 1/eps0, is fitted
    from samples at ref + direction * k * eps, k = 5, 10, 15, then T is pushed
    out until the integrand itself is negligible at the cut.
    """
    lam = abs(rate) / eps - (1.0 / eps0 if math.isfinite(eps0) else 0.0)
    if lam <= 0.0:
        raise DivergenceError(f"weighted integral diverges: eps = {eps} is not below eps0 = {eps0}")
    consts = []
    with np.errstate(all="ignore"):
        for k in (5, 10, 15):
            dist = k * eps
            mag = abs(_call_scalar(g, ref + direction * dist)) * math.exp(-abs(rate) * dist / eps)
            consts.append(mag * math.exp(lam * dist))
    c = max([x for x in consts if math.isfinite(x)] + [1e-300])
    t_cut = max(15.0 * eps, math.log(max(c / (lam * abs_tol), 1.0)) / lam)
    cap = 700.0 * eps / abs(rate)
    with np.errstate(all="ignore"):
        for _ in range(80):
            if t_cut >= cap:
                return cap
            mag = abs(_call_scalar(g, ref + direction * t_cut)) * math.exp(-abs(rate) * t_cut / eps)
            if math.isfinite(mag) and mag / lam < abs_tol:
                break
            t_cut *= 1.25
    return min(t_cut, cap)


def _quad(func: Callable, lo: float, hi: float, breakpoints: Sequence[float],
          s: QuadratureSettings) -> float:
    pts = [b for b in breakpoints if lo < b < hi]
    out = quad(func, lo, hi, points=pts or None, epsabs=s.abs_tol, epsrel=s.rel_tol,
               limit=s.max_subdivisions, full_output=1)
    value, err = out[0], out[1]
    if len(out) > 3:
        # QUADPACK flagged trouble; keep the result only if its error estimate is acceptable
        if not err <= 100.0 * max(s.abs_tol, s.rel_tol * abs(value)):
            raise AccuracyError(f"quadrature on [{lo}, {hi}] failed: {out[3]}")
    return float(value)


def shifted_weighted_integral(g: Callable, lo: ExtendedReal, hi: ExtendedReal, rate: float,
                              eps: float, ref: float, settings: QuadratureSettings = DEFAULT_SETTINGS,
                              eps0: float = math.inf, breakpoints: Sequence[float] = ()) -> float:
    """Integral of g(t) exp(rate (t - ref)/eps) over [lo, hi]; endpoints may be infinite."""
    lo_f, hi_f = float(lo), float(hi)
    if lo_f == hi_f:
        return 0.0
    if lo_f > hi_f:
        return -shifted_weighted_integral(g, hi, lo, rate, eps, ref, settings, eps0, breakpoints)
    if math.isinf(lo_f) and math.isinf(hi_f):
        raise DivergenceError("both endpoints infinite")
    if math.isinf(lo_f) and rate <= 0 or math.isinf(hi_f) and rate >= 0:
        raise DivergenceError("the exponential weight grows towards the infinite endpoint")

    def integrand(t):
        return _call_scalar(g, t) * math.exp(rate * (t - ref) / eps)

    if math.isinf(lo_f) or math.isinf(hi_f):
        end = hi_f if math.isinf(lo_f) else lo_f
        direction = -1 if math.isinf(lo_f) else 1
        # tolerance for the integrand shifted to the finite end
        scale = rate * (ref - end) / eps
        tol = settings.abs_tol * math.exp(scale) if abs(scale) < 700 else settings.abs_tol
        t_cut = _tail_length(g, end, direction, rate, eps, eps0, tol)
        if direction < 0:
            lo_f = end - t_cut
        else:
            hi_f = end + t_cut
    return _quad(integrand, lo_f, hi_f, breakpoints, settings)


def weighted_integral(g: Callable, lo: ExtendedReal, hi: ExtendedReal, rate: float, eps: float,
                      s: QuadratureSettings = DEFAULT_SETTINGS, eps0: float = math.inf,
                      breakpoints: Sequence[float] = ()) -> float:
    """Integral of g(t) exp(rate t / eps) over [lo, hi].

    Computed in shifted form around the finite endpoint with the largest
    weight; infinite endpoints need eps < eps0 so the integrand decays.
    """
    lo_f, hi_f = float(lo), float(hi)
    if lo_f == hi_f:
        return 0.0
    a, b = min(lo_f, hi_f), max(lo_f, hi_f)
    if math.isinf(a):
        ref = b
    elif math.isinf(b):
        ref = a
    else:
        ref = b if rate > 0 else a
    core = shifted_weighted_integral(g, lo, hi, rate, eps, ref, s, eps0, breakpoints)
    return core * math.exp(rate * ref / eps)


def find_root_monotone(h: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of a continuous monotone function on a sign-changing bracket.

    Brent's method (bisection safeguarded secant / inverse quadratic steps),
    deterministic for a given bracket.
    """
    h_lo, h_hi = float(h(lo)), float(h(hi))
    if h_lo == 0.0:
        return lo
    if h_hi == 0.0:
        return hi
    if h_lo * h_hi > 0.0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: h = {h_lo:.3g}, {h_hi:.3g}")
    return brentq(h, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


def convolve_force(f3: Callable, c: ExtendedReal, u: float, eps: float, eps0: float = math.inf,
                   breakpoints: Sequence[float] = (), s: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Zero-screen force F(u, 0) of a source c.

    Left of c: integral over [u, c] of f'''(t) exp((u - t)/eps);
    right of c: integral over [c, u] of f'''(t) exp((t - u)/eps).
    """
    if is_infinite(c):
        if c.sign > 0:
            return shifted_weighted_integral(f3, u, c, -1.0, eps, u, s, eps0, breakpoints)
        return shifted_weighted_integral(f3, c, u, 1.0, eps, u, s, eps0, breakpoints)
    c = float(c)
    if u < c:
        return shifted_weighted_integral(f3, u, c, -1.0, eps, u, s, eps0, breakpoints)
    if u > c:
        return shifted_weighted_integral(f3, c, u, 1.0, eps, u, s, eps0, breakpoints)
    return 0.0


def g_eps(f3: Callable, u: float, eps: float, eps0: float = math.inf,
          breakpoints: Sequence[float] = (), s: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """(f''' * w_eps)(u): sum of the two infinite-source forces, equal to eps (m_R'' + m_L'')."""
    return (convolve_force(f3, Infinite(-1), u, eps, eps0, breakpoints, s)
            + convolve_force(f3, Infinite(1), u, eps, eps0, breakpoints, s))


class ExpKernel:
    """Solution of a first-order linear ODE written as an exponential convolution.

    side 'R' (anchor p on the left):
        y(u) = y_p exp((p - u)/eps) + eps^-1 * int_p^u g(t) exp((t - u)/eps) dt
    side 'L' (anchor p on the right):
        y(u) = y_p exp((u - p)/eps) + eps^-1 * int_u^p g(t) exp((u - t)/eps) dt
    An infinite anchor drops the seed term. Values at knots spaced eps/4 are
    cached and propagated in the stable direction; an evaluation adds one
    short Gauss-Legendre integral from the nearest knot on the anchor side.
    """

    def __init__(self, g: Callable, side: str, anchor: ExtendedReal, seed: float, eps: float,
                 eps0: float = math.inf, breakpoints: Sequence[float] = (),
                 settings: QuadratureSettings = TIGHT_SETTINGS, spacing: Optional[float] = None):
        if side not in ("R", "L"):
            raise ValueError("side must be 'R' or 'L'")
        if is_infinite(anchor) and (anchor.sign < 0) != (side == "R"):
            raise ValueError("an R kernel is anchored on the left, an L kernel on the right")
        self.g = g
        self.side = side
        self.anchor = anchor
        self.seed = float(seed)
        self.eps = float(eps)
        self.eps0 = eps0
        self.breakpoints = tuple(sorted(breakpoints))
        self.settings = settings
        self.h = float(spacing) if spacing else self.eps / 4.0
        self._knots: Dict[int, float] = {}
        self._lock = threading.Lock()
        self._dir = 1 if side == "R" else -1
        if not is_infinite(anchor):
            self._knots[0] = self.seed

    # knot layout: finite anchor p -> p + dir*i*h (i >= 0); infinite -> i*h
    def _pos(self, i: int) -> float:
        if is_infinite(self.anchor):
            return i * self.h
        return float(self.anchor) + self._dir * i * self.h

    def _index(self, u: float) -> int:
        """Knot at or on the anchor side of u."""
        if is_infinite(self.anchor):
            return int(math.floor(u / self.h)) if self._dir > 0 else int(math.ceil(u / self.h))
        i = int(math.floor(self._dir * (u - float(self.anchor)) / self.h))
        return max(i, 0)

    def _step(self, y_from: float, t_from: float, t_to: float) -> float:
        """Propagate y from t_from to t_to (any direction) with one local integral."""
        eps = self.eps
        if self.side == "R":
            integral = gauss_legendre(lambda t: self.g(t) * np.exp((t - t_to) / eps), t_from, t_to,
                                      self.breakpoints)
            return y_from * math.exp((t_from - t_to) / eps) + integral / eps
        integral = gauss_legendre(lambda t: self.g(t) * np.exp((t_to - t) / eps), t_to, t_from,
                                  self.breakpoints)
        return y_from * math.exp((t_to - t_from) / eps) + integral / eps

    def _direct(self, t: float) -> float:
        """y at t straight from the infinite anchor."""
        if self.side == "R":
            core = shifted_weighted_integral(self.g, self.anchor, t, 1.0, self.eps, t, self.settings,
                                             self.eps0, self.breakpoints)
        else:
            core = shifted_weighted_integral(self.g, t, self.anchor, -1.0, self.eps, t, self.settings,
                                             self.eps0, self.breakpoints)
        return core / self.eps

    def _knot(self, i: int) -> float:
        got = self._knots.get(i)
        if got is not None:
            return got
        with self._lock:
            got = self._knots.get(i)
            if got is not None:
                return got
            # nearest cached predecessor on the anchor side
            step = self._dir if is_infinite(self.anchor) else 1
            j = i
            back = 0
            while (j - step) not in self._knots:
                j -= step
                back += 1
                if is_infinite(self.anchor) and back > 64:
                    break
                if not is_infinite(self.anchor) and j <= 0:
                    break
            if (j - step) in self._knots:
                k = j - step
                y = self._knots[k]
            else:
                k = i
                y = self._direct(self._pos(i))
                self._knots[i] = y
                return y
            while k != i:
                nxt = k + step
                y = self._step(y, self._pos(k), self._pos(nxt))
                self._knots[nxt] = y
                k = nxt
            return y

    def __call__(self, u: float) -> float:
        u = float(u)
        i = self._index(u)
        t = self._pos(i)
        return self._step(self._knot(i), t, u)
