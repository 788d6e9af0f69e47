"""Force functions, their tails, balance points, cleaning and screen compression.

A force with source c and screen [a, b] is eps * m_L'' (anchored at a) left
of the screen, the differential D on the screen and eps * m_R'' (anchored at
b) right of it. Tangent domains may sit where a force has the right sign: its
left tail (F >= 0) and right tail (F <= 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .boundary import MINUS_INF, PLUS_INF, BoundaryFunction, ExtendedReal, Infinite, is_infinite
from .cups import CupFamily, differentials, grow_cup
from .errors import BracketError, ClassGateError, ConstructionError
from .numerics import ExpKernel

# |v - screen end| below this (times 1 + |v|) counts as "at the end"
END_TOL = 1e-9
HORIZON = 600.0
MAX_PASSES = 64


class Tails(NamedTuple):
    t_minus: float
    t_plus: float


class Force:
    """F(u) for one source; finite sources carry a cup whose top chord is the screen."""

    def __init__(self, source: ExtendedReal, f: BoundaryFunction, eps: float,
                 cup: Optional[CupFamily] = None):
        self.source = source
        self.f = f
        self.eps = eps
        self.cup = cup
        f3, bps, e0 = f.eval_f3, f.breakpoints, f.eps0
        self._left = self._right = None
        if is_infinite(source):
            if cup is not None:
                raise ValueError("forces from infinity have zero screens")
            if source.sign > 0:
                self._left = ExpKernel(f3, "L", PLUS_INF, 0.0, eps, e0, bps)
            else:
                self._right = ExpKernel(f3, "R", MINUS_INF, 0.0, eps, e0, bps)
            self.screen = None
            self.d_left = self.d_right = 0.0
        else:
            c = float(source)
            if cup is None:
                self.screen = (c, c)
                self.d_left = self.d_right = 0.0
            else:
                a, b = cup.top()
                self.screen = (a, b)
                self.d_left, self.d_right = differentials(a, b, f)
            a, b = self.screen
            self._left = ExpKernel(f3, "L", a, -self.d_left / eps, eps, e0, bps)
            self._right = ExpKernel(f3, "R", b, self.d_right / eps, eps, e0, bps)
        self._tails: Optional[Tails] = None

    @property
    def ell(self) -> float:
        return 0.0 if self.cup is None else self.cup.ell_max

    @property
    def finite(self) -> bool:
        return not is_infinite(self.source)

    def __repr__(self) -> str:
        return f"Force(source={self.source!r}, ell={self.ell:.6g})"

    def on_screen(self, u: float) -> float:
        """D(u): -D_L of the chord starting at u, or D_R of the chord ending at u."""
        c = float(self.source)
        if u == c or self.cup is None:
            return 0.0
        if u < c:
            a, b = self.cup.chord_with_left_end(u)
            return 0.0 if b <= a else -differentials(a, b, self.f)[0]
        a, b = self.cup.chord_with_right_end(u)
        return 0.0 if b <= a else differentials(a, b, self.f)[1]

    def __call__(self, u: float) -> float:
        u = float(u)
        if self._right is None:
            return self.eps * self._left(u)
        if self._left is None:
            return self.eps * self._right(u)
        a, b = self.screen
        if u < a:
            return self.eps * self._left(u)
        if u > b:
            return self.eps * self._right(u)
        if u == a:
            return -self.d_left
        if u == b:
            return self.d_right
        return self.on_screen(u)

    def tails(self) -> Tails:
        if self._tails is None:
            self._tails = compute_tails(self)
        return self._tails

    def in_tail(self, x: ExtendedReal) -> bool:
        """Whether x lies in one of this force's (closed) tails."""
        t_minus, t_plus = self.tails()
        if is_infinite(x):
            return (x.sign < 0 and t_minus == -math.inf) or (x.sign > 0 and t_plus == math.inf)
        s = float(self.source)
        return t_minus <= x <= s or s <= x <= t_plus


def force_value(force: Force, u: float) -> float:
    return force(u)


def _pattern_points(f: BoundaryFunction) -> List[float]:
    if f.pattern is None:
        return []
    return [p for p, _ in f.pattern.finite_points()]


def _sign_tol(values) -> float:
    return 1e-12 * (1.0 + max((abs(v) for v in values), default=0.0))


def _march(force: Force, start: float, direction: int) -> float:
    """First point beyond `start` (in `direction`) where F leaves its tail sign.

    Right tails (direction +1) need F <= 0, left tails F >= 0. Between
    consecutive pattern points e^{-+u/eps} F is monotone, so F changes sign
    at most once there; the eps/16 grid plus the pattern points brackets
    every violation. Past the last pattern point, 2 eps panels are marched
    until a crossing is bracketed or the geometric decay of the increments
    shows none can occur.
    """
    eps = force.eps
    bad = 1 if direction > 0 else -1
    pts = [p for p in _pattern_points(force.f) if (p - start) * direction > 0]
    grid = [start]
    if pts:
        far = max(pts) if direction > 0 else min(pts)
        n = int(math.ceil(abs(far - start) / (eps / 16.0)))
        grid = sorted(set(np.linspace(start, far, n + 1).tolist()) | set(pts))
        if direction < 0:
            grid = grid[::-1]
    # signs are judged on G = F e^{direction (u - start)/eps}, which keeps the
    # sign of F without its exponential decay
    scale = lambda u: math.exp(direction * (u - start) / eps)
    seen = []
    prev_u, prev_v = None, None
    for u in grid:
        val = force(u)
        seen.append(val * scale(u))
        tol = _sign_tol(seen)
        if bad * seen[-1] > tol:
            if prev_u is None:
                return u
            return _refine(force, prev_u, u, bad, tol / scale(u))
        prev_u, prev_v = u, val
    # outer ray: sign of f''' there decides whether a crossing is possible
    edge = grid[-1]
    probe = edge + direction * eps
    s3 = float(force.f.eval_f3(probe))
    if force.f.pattern is not None:
        s3 = force.f.pattern.sign_at(probe)
    if bad * s3 <= 0:
        return direction * math.inf
    step = 2.0 * eps
    ratio_hits = 0
    delta_prev = None
    u, val = edge, prev_v
    decay = math.exp(-step / eps)
    while abs(u - edge) < HORIZON * eps:
        u_next = u + direction * step
        v_next = force(u_next)
        seen.append(v_next * scale(u_next))
        tol = _sign_tol(seen)
        if bad * seen[-1] > tol:
            return _refine(force, u, u_next, bad, tol / scale(u_next))
        # increment of e^{+-u/eps} F, rescaled to the new point
        delta = v_next - decay * val
        if delta_prev is not None and delta_prev != 0.0:
            rho = abs(delta / delta_prev) / decay
            if rho < 0.95 and abs(delta) * rho / (1.0 - rho) < 0.5 * abs(v_next):
                ratio_hits += 1
                if ratio_hits >= 2:
                    return direction * math.inf
            else:
                ratio_hits = 0
        delta_prev = delta
        u, val = u_next, v_next
    return direction * math.inf


def _refine(force: Force, good: float, badpt: float, bad: int, tol: float) -> float:
    h = lambda u: bad * force(u) - tol
    try:
        return brentq(h, min(good, badpt), max(good, badpt), xtol=1e-12, rtol=1e-15)
    except ValueError:
        return good


def compute_tails(force: Force) -> Tails:
    src = force.source
    pts = _pattern_points(force.f)
    if is_infinite(src):
        if src.sign > 0:
            if not pts:
                return Tails(-math.inf, math.inf)
            return Tails(_march(force, max(pts), -1), math.inf)
        if not pts:
            return Tails(-math.inf, math.inf)
        return Tails(-math.inf, _march(force, min(pts), 1))
    a, b = force.screen
    return Tails(_march(force, a, -1), _march(force, b, 1))


def tails(force: Force) -> Tails:
    return force.tails()


@dataclass
class BalancedFamily:
    forces: List[Force]
    balance_points: List[float]
    eps: float
    f: BoundaryFunction
    status: str = "Balanced"
    trace: List[Dict] = field(default_factory=list)


def _source_key(force: Force) -> float:
    return float(force.source)


def clean(forces: List[Force], trace: Optional[List[Dict]] = None) -> List[Force]:
    """Drop forces whose source lies in a tail of another force, one at a time."""
    forces = sorted(forces, key=_source_key)
    while True:
        victim = None
        for k, fk in enumerate(forces):
            for j, fj in enumerate(forces):
                if j != k and fj.in_tail(fk.source):
                    victim = (k, j)
                    break
            if victim:
                break
        if victim is None:
            return forces
        k, j = victim
        if trace is not None:
            trace.append({"event": "clean", "removed": repr(forces[k].source),
                          "by": repr(forces[j].source), "tails": tuple(forces[j].tails())})
        forces = forces[:k] + forces[k + 1:]


def balance_point(f1: Force, f2: Force) -> Optional[float]:
    """Root of F1 + F2 on the intersection of F1's right tail and F2's left tail."""
    lo = f2.tails().t_minus
    hi = f1.tails().t_plus
    lo = max(lo, float(f1.source))
    hi = min(hi, float(f2.source))
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        return None
    h = lambda u: f1(u) + f2(u)
    h_lo, h_hi = h(lo), h(hi)
    if h_lo > 0.0 and h_hi > 0.0 or h_lo < 0.0 and h_hi < 0.0:
        return None
    if h_lo == 0.0:
        return lo
    if h_hi == 0.0:
        return hi
    return brentq(h, lo, hi, xtol=1e-14 * (1.0 + abs(lo) + abs(hi)), rtol=1e-15)


def _balance_points(forces: List[Force]) -> List[float]:
    vs = []
    for f1, f2 in zip(forces, forces[1:]):
        v = balance_point(f1, f2)
        if v is None:
            raise ConstructionError(
                f"forces at {f1.source!r} and {f2.source!r} are not balanced: "
                f"tails {tuple(f1.tails())}, {tuple(f2.tails())}")
        vs.append(v)
    return vs


def _at(v: float, end: float) -> bool:
    return abs(v - end) <= END_TOL * (1.0 + abs(v))


def _scan_root(h, ell_cur: float) -> float:
    """Largest l in (0, ell_cur] with h(l) = 0, scanning down in ell_cur/64 steps."""
    grid = np.linspace(ell_cur, 0.0, 65)[:-1].tolist() + [ell_cur * 1e-4, ell_cur * 1e-7]
    prev_l, prev_h = grid[0], h(grid[0])
    if prev_h == 0.0:
        return prev_l
    for ell in grid[1:]:
        val = h(ell)
        if val == 0.0:
            return ell
        if (val > 0.0) != (prev_h > 0.0):
            return brentq(h, ell, prev_l, xtol=1e-15 * ell_cur, rtol=1e-15)
        prev_l, prev_h = ell, val
    raise BracketError(f"no compression root in (0, {ell_cur}]")


def compress_left_screen(left: Force, right: Force) -> Force:
    """Shrink the screen of `right` so the balance point sits at its left end."""
    cup = right.cup

    def h(ell):
        a = cup.a_at(ell)
        d_l, _ = differentials(a, a + ell, right.f)
        return left(a) - d_l

    ell = _scan_root(h, cup.ell_max)
    return Force(right.source, right.f, right.eps, cup.restricted(ell))


def compress_right_screen(left: Force, right: Force) -> Force:
    """Shrink the screen of `left` so the balance point sits at its right end."""
    cup = left.cup

    def h(ell):
        a = cup.a_at(ell)
        _, d_r = differentials(a, a + ell, left.f)
        return d_r + right(a + ell)

    ell = _scan_root(h, cup.ell_max)
    return Force(left.source, left.f, left.eps, cup.restricted(ell))


def _violations(forces: List[Force], vs: List[float]):
    """Balance points strictly inside screens: ('left', j) means v_j is in the screen of j+1."""
    left, right = [], []
    for j, v in enumerate(vs):
        nxt, cur = forces[j + 1], forces[j]
        if nxt.cup is not None and v > nxt.screen[0] and not _at(v, nxt.screen[0]):
            left.append(j)
        if cur.cup is not None and v < cur.screen[1] and not _at(v, cur.screen[1]):
            right.append(j)
    return left, right


def compress(family: BalancedFamily, direction: str) -> BalancedFamily:
    """One compression step of the given pass ('LeftPass' or 'RightPass'), then cleaning."""
    forces = list(family.forces)
    left, right = _violations(forces, family.balance_points)
    if direction == "LeftPass":
        if not left:
            return family
        j = left[0]
        old = forces[j + 1]
        forces[j + 1] = compress_left_screen(forces[j], old)
        changed = forces[j + 1]
    elif direction == "RightPass":
        if not right:
            return family
        j = right[-1]
        old = forces[j]
        forces[j] = compress_right_screen(old, forces[j + 1])
        changed = forces[j]
    else:
        raise ValueError("direction must be 'LeftPass' or 'RightPass'")
    trace = family.trace
    trace.append({"event": "compress", "pass": direction, "source": repr(old.source),
                  "old_ell": old.ell, "new_ell": changed.ell, "screen": changed.screen})
    forces = clean(forces, trace)
    return BalancedFamily(forces, _balance_points(forces), family.eps, family.f, "Balanced", trace)


def _complete(forces: List[Force], vs: List[float]) -> bool:
    left, right = _violations(forces, vs)
    if left or right:
        return False
    for j, fo in enumerate(forces):
        if fo.cup is None or fo.cup.full:
            continue
        a, b = fo.screen
        ok = (j > 0 and _at(vs[j - 1], a)) or (j < len(vs) and _at(vs[j], b))
        if not ok:
            return False
    return True


def separation_gate(f: BoundaryFunction, sources: List[float], eps: float) -> None:
    """Surviving finite sources must keep 2 eps away from every v-point."""
    pat = f.require_pattern()
    for c in sources:
        for v in pat.v_points:
            if abs(c - v) < 2.0 * eps * (1.0 - 1e-12):
                raise ClassGateError(
                    f"source {c:.6g} and v-point {v:.6g} are closer than 2 eps = {2 * eps:.6g}")


def balance_all(f: BoundaryFunction, eps: float, order: str = "LR",
                max_passes: int = MAX_PASSES) -> BalancedFamily:
    """Completely balanced family of forces whose tails cover the line.

    Forces from infinity are built first and remove the finite sources in
    their tails; the rest get full 2 eps cups. After cleaning, balance points
    lying strictly inside screens are removed by compressions: left screens
    scanning rightwards, then right screens scanning leftwards (order 'RL'
    swaps the two passes).
    """
    f.check_eps(eps)
    pat = f.require_pattern()
    trace: List[Dict] = []
    infinite = [Force(c, f, eps) for c in pat.c_points if is_infinite(c)]
    infinite = sorted(infinite, key=_source_key, reverse=True)  # +inf first
    kept_inf: List[Force] = []
    for fo in infinite:
        if any(k.in_tail(fo.source) for k in kept_inf):
            trace.append({"event": "clean", "removed": repr(fo.source), "by": "infinite force"})
            continue
        kept_inf.append(fo)
    finite = []
    for c in pat.finite_c():
        owner = next((k for k in kept_inf if k.in_tail(c)), None)
        if owner is not None:
            trace.append({"event": "clean", "removed": repr(c), "by": repr(owner.source),
                          "tails": tuple(owner.tails())})
            continue
        finite.append(c)
    separation_gate(f, finite, eps)
    forces = kept_inf + [Force(c, f, eps, grow_cup(c, 2.0 * eps, f, eps)) for c in finite]
    forces = clean(forces, trace)
    family = BalancedFamily(forces, _balance_points(forces), eps, f, "Balanced", trace)
    passes = ("LeftPass", "RightPass") if order == "LR" else ("RightPass", "LeftPass")
    for _ in range(max_passes):
        if _complete(family.forces, family.balance_points):
            family.status = "CompletelyBalanced"
            return family
        left, right = _violations(family.forces, family.balance_points)
        todo = {"LeftPass": left, "RightPass": right}
        direction = passes[0] if todo[passes[0]] else passes[1]
        if not todo[direction]:
            break
        family = compress(family, direction)
    if _complete(family.forces, family.balance_points):
        family.status = "CompletelyBalanced"
        return family
    raise ConstructionError(f"compression did not reach a completely balanced family "
                            f"within {max_passes} steps")
