"""Cups: the chord equation, its continuation in the chord length and B on the cup."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .boundary import BoundaryFunction
from .errors import ContinuationError, DispatchError, SingularJacobianError
from .geometry import Point, StripLocation, classify
from .numerics import gl_nodes

PANEL = 0.25


class Chord(NamedTuple):
    a: float
    b: float


def _moments(f: BoundaryFunction, a: float, b: float) -> Tuple[float, float, float]:
    """Integrals over [a, b] of (t-a)(b-t) f''', (t-a) f''' and (b-t) f'''.

    These integral forms keep full relative accuracy for short chords, where
    the textbook expressions cancel catastrophically.
    """
    t, w = gl_nodes(a, b, f.breakpoints, PANEL)
    g = np.asarray(f.eval_f3(t), dtype=float) * w
    left = t - a
    right = b - t
    return float(np.dot(g, left * right)), float(np.dot(g, left)), float(np.dot(g, right))


def chord_mismatch(a: float, ell: float, f: BoundaryFunction) -> float:
    """Phi(a, l) = l (f'(a) + f'(a+l)) - 2 (f(a+l) - f(a)), as an integral of f'''."""
    if ell == 0.0:
        return 0.0
    return _moments(f, a, a + ell)[0]


def differentials(a: float, b: float, f: BoundaryFunction) -> Tuple[float, float]:
    """D_L = f''(a) - <f''>, D_R = f''(b) - <f''> over [a, b]."""
    if not a < b:
        raise ValueError(f"differentials need a < b, got {a}, {b}")
    _, left, right = _moments(f, a, b)
    ell = b - a
    return -right / ell, left / ell


def _phi_and_grad(f: BoundaryFunction, a: float, ell: float):
    phi, left, right = _moments(f, a, a + ell)
    d_l, d_r = -right / ell, left / ell
    return phi, ell * (d_l + d_r), ell * d_r, d_l, d_r


def _newton_a(f: BoundaryFunction, a: float, ell: float, iters: int = 40) -> Tuple[float, float, float]:
    """Solve Phi(., ell) = 0 for a starting at `a`; returns (a, D_L, D_R)."""
    for _ in range(iters):
        phi, phi_a, _, d_l, d_r = _phi_and_grad(f, a, ell)
        if phi_a == 0.0 or not math.isfinite(phi_a):
            raise SingularJacobianError(f"Phi_a vanishes at a={a}, l={ell}")
        step = phi / phi_a
        a -= step
        if abs(step) <= 1e-15 * (1.0 + abs(a)) + 1e-13 * ell:
            phi, phi_a, _, d_l, d_r = _phi_and_grad(f, a, ell)
            return a, d_l, d_r
    raise ContinuationError(f"Newton on the chord equation did not converge at l={ell}")


@dataclass
class CupFamily:
    """Chords [a(l), a(l)+l] for 0 < l <= ell_max around the c-point `origin_c`.

    The table stores (l, a, a') with a' = -D_R/(D_L + D_R) exact at each row;
    a cubic Hermite spline through it gives the initial guess and Newton on
    the chord equation polishes every lookup.
    """
    origin_c: float
    eps: float
    ell_max: float
    f: BoundaryFunction
    ells: np.ndarray
    avals: np.ndarray
    slopes: np.ndarray
    d_left: np.ndarray
    d_right: np.ndarray
    _spline: Optional[CubicHermiteSpline] = field(default=None, repr=False)

    def __post_init__(self):
        if self._spline is None:
            self._spline = CubicHermiteSpline(self.ells, self.avals, self.slopes)

    @property
    def full(self) -> bool:
        return self.ell_max >= 2.0 * self.eps * (1.0 - 1e-12)

    def a_at(self, ell: float, polish: bool = True) -> float:
        if ell <= 0.0:
            return self.origin_c
        if ell > self.ell_max * (1.0 + 1e-12):
            raise ValueError(f"l = {ell} exceeds the cup size {self.ell_max}")
        ell = min(ell, self.ell_max)
        guess = float(self._spline(ell))
        if not polish or ell < 1e-8 * self.eps:
            return guess
        try:
            return _newton_a(self.f, guess, ell, iters=8)[0]
        except ContinuationError:
            return guess

    def b_at(self, ell: float, polish: bool = True) -> float:
        return self.a_at(ell, polish) + ell

    def chord(self, ell: Optional[float] = None) -> Chord:
        ell = self.ell_max if ell is None else ell
        a = self.a_at(ell)
        return Chord(a, a + ell)

    def top(self) -> Chord:
        return Chord(float(self.avals[-1]), float(self.avals[-1] + self.ells[-1]))

    def differentials_at(self, ell: float) -> Tuple[float, float]:
        a = self.a_at(ell)
        return differentials(a, a + ell, self.f)

    def chord_with_left_end(self, a_end: float) -> Chord:
        """Chord of the family whose left end is a_end (a_end <= c)."""
        c = self.origin_c
        if a_end >= c:
            return Chord(c, c)
        lmax = self.ell_max
        h = lambda ell: self.a_at(ell, False) - a_end
        ell = lmax if h(lmax) >= 0.0 else brentq(h, 0.0, lmax, xtol=1e-15 * self.eps)
        if ell < 1e-8 * self.eps:
            return Chord(a_end, a_end + ell)
        # Newton in l at fixed a: dPhi/dl = l D_R
        for _ in range(12):
            phi, _, phi_l, _, _ = _phi_and_grad(self.f, a_end, ell)
            if phi_l == 0.0:
                break
            step = phi / phi_l
            ell -= step
            if abs(step) <= 1e-15 * (1.0 + abs(a_end)):
                break
        return Chord(a_end, a_end + ell)

    def chord_with_right_end(self, b_end: float) -> Chord:
        """Chord of the family whose right end is b_end (b_end >= c)."""
        c = self.origin_c
        if b_end <= c:
            return Chord(c, c)
        lmax = self.ell_max
        h = lambda ell: self.b_at(ell, False) - b_end
        ell = lmax if h(lmax) <= 0.0 else brentq(h, 0.0, lmax, xtol=1e-15 * self.eps)
        a = b_end - ell
        if ell < 1e-8 * self.eps:
            return Chord(a, b_end)
        # Newton in a at fixed b: dPhi(a, b-a)/da = l D_L
        for _ in range(12):
            ell = b_end - a
            phi, _, _, d_l, _ = _phi_and_grad(self.f, a, ell)
            deriv = ell * d_l
            if deriv == 0.0:
                break
            step = phi / deriv
            a -= step
            if abs(step) <= 1e-15 * (1.0 + abs(a)):
                break
        return Chord(a, b_end)

    def restricted(self, ell: float) -> "CupFamily":
        """The same family cut at chord length ell (a compressed screen)."""
        if not 0.0 < ell <= self.ell_max * (1.0 + 1e-12):
            raise ValueError(f"cannot restrict a cup of size {self.ell_max} to {ell}")
        ell = min(ell, self.ell_max)
        a, d_l, d_r = _newton_a(self.f, self.a_at(ell), ell)
        keep = self.ells < ell * (1.0 - 1e-12)
        ells = np.append(self.ells[keep], ell)
        avals = np.append(self.avals[keep], a)
        slopes = np.append(self.slopes[keep], -d_r / (d_l + d_r))
        return CupFamily(self.origin_c, self.eps, ell, self.f, ells, avals, slopes,
                         np.append(self.d_left[keep], d_l), np.append(self.d_right[keep], d_r))

    def contains(self, x: Point, tol: float = 1e-12) -> bool:
        a, b = self.top()
        x1, x2 = x
        slack = tol * (1.0 + abs(x1))
        if x1 < a - slack or x1 > b + slack:
            return False
        return x2 <= (a + b) * x1 - a * b + tol * (1.0 + x1 * x1)


def _ell_schedule(eps: float, ell_max: float, ell0: float):
    fine = 2.0 * eps / 256.0
    out = []
    ell = ell0
    while ell < min(fine, ell_max):
        out.append(ell)
        ell *= 2.0
    ell = out[-1] if out else ell0
    n = max(1, int(math.ceil((ell_max - ell) / fine)))
    out.extend(np.linspace(ell, ell_max, n + 1)[1:].tolist())
    return out


def grow_cup(c: float, ell_max: float, f: BoundaryFunction, eps: float) -> CupFamily:
    """Continue the chord equation from l -> 0+ at c out to l = ell_max.

    Euler predictor with a' = -D_R/(D_L + D_R), Newton corrector at fixed l,
    and per-step checks of the cup invariants.
    """
    if not 0.0 < ell_max <= 2.0 * eps * (1.0 + 1e-12):
        raise ValueError(f"cup size must lie in (0, 2 eps], got {ell_max}")
    ell0 = min(1e-4 * eps, ell_max)
    sched = _ell_schedule(eps, ell_max, ell0)
    ells, avals, slopes, dls, drs = [0.0], [c], [-0.5], [0.0], [0.0]
    a, slope, prev_ell = c, -0.5, 0.0
    for ell in sched:
        guess = a + slope * (ell - prev_ell)
        try:
            a_new, d_l, d_r = _newton_a(f, guess, ell)
        except ContinuationError as exc:
            raise ContinuationError(str(exc), last_ell=prev_ell) from exc
        if abs(d_l + d_r) <= 1e-300:
            raise SingularJacobianError("D_L + D_R vanished", last_ell=prev_ell)
        b_new = a_new + ell
        if not (a_new < a and b_new > avals[-1] + ells[-1] and a_new < c < b_new):
            raise ContinuationError(
                f"cup around {c} lost monotonicity at l={ell}: a={a_new}, b={b_new}", last_ell=prev_ell)
        if not (d_l < 0.0 and d_r < 0.0):
            raise ContinuationError(
                f"cup around {c} has D_L={d_l:.3g}, D_R={d_r:.3g} at l={ell}", last_ell=prev_ell)
        slope = -d_r / (d_l + d_r)
        a, prev_ell = a_new, ell
        ells.append(ell)
        avals.append(a_new)
        slopes.append(slope)
        dls.append(d_l)
        drs.append(d_r)
    return CupFamily(c, eps, ells[-1], f, np.array(ells), np.array(avals), np.array(slopes),
                     np.array(dls), np.array(drs))


def locate_chord(x: Point, cup: CupFamily) -> Chord:
    """The chord of the cup passing through x (unique since chords are nested)."""
    x1, x2 = float(x[0]), float(x[1])
    if not cup.contains((x1, x2)):
        raise DispatchError(f"point {(x1, x2)} is not inside the cup at {cup.origin_c}")
    d = max(x2 - x1 * x1, 0.0)
    lmax = cup.ell_max
    if classify(Point(x1, x2), cup.eps) is StripLocation.LOWER or d == 0.0:
        # degenerate chord with an endpoint at x1
        if x1 == cup.origin_c:
            return Chord(x1, x1)
        if x1 < cup.origin_c:
            h = lambda ell: cup.a_at(ell, False) - x1
        else:
            h = lambda ell: cup.b_at(ell, False) - x1
        if h(lmax) * h(0.0) > 0:
            ell = lmax
        else:
            ell = brentq(h, 0.0, lmax, xtol=1e-14 * cup.eps)
        a = cup.a_at(ell)
        return Chord(a, a + ell)

    def height(ell: float, polish: bool = False) -> float:
        a = cup.a_at(ell, polish)
        return (x1 - a) * (a + ell - x1) - d

    h_top = height(lmax, True)
    if h_top <= 0.0:
        ell = lmax
    elif height(lmax) > 0.0:
        ell = brentq(height, 0.0, lmax, xtol=1e-11 * cup.eps, rtol=1e-15)
    else:
        # within spline error of the top chord: bracket with polished ends
        ell = brentq(lambda t: height(t, True), 0.0, lmax, xtol=1e-11 * cup.eps, rtol=1e-15)
    a = cup.a_at(ell, False)
    if ell < 1e-8 * cup.eps or ell >= lmax:
        a = cup.a_at(ell)
        return Chord(a, a + ell)
    # joint Newton on the chord equation and the incidence condition
    f = cup.f
    for _ in range(12):
        phi, phi_a, phi_l, _, _ = _phi_and_grad(f, a, ell)
        f2 = (x1 - a) * (a + ell - x1) - d
        j21 = 2.0 * x1 - 2.0 * a - ell
        j22 = x1 - a
        det = phi_a * j22 - phi_l * j21
        if det == 0.0 or not math.isfinite(det):
            break
        da = (phi * j22 - phi_l * f2) / det
        dl = (phi_a * f2 - j21 * phi) / det
        a -= da
        ell = min(max(ell - dl, 0.0), lmax)
        if abs(da) + abs(dl) <= 1e-15 * (1.0 + abs(a)):
            break
    return Chord(a, a + ell)


def eval_cup(x: Point, cup: CupFamily, f: Optional[BoundaryFunction] = None) -> float:
    """Linear interpolation of f along the chord through x."""
    f = cup.f if f is None else f
    x1 = float(x[0])
    if classify(Point(x1, float(x[1])), cup.eps) is StripLocation.LOWER:
        return float(f.eval_f(x1))
    a, b = locate_chord(x, cup)
    if b <= a:
        return float(f.eval_f(x1))
    return (float(f.eval_f(a)) * (b - x1) + float(f.eval_f(b)) * (x1 - a)) / (b - a)
