"""Test functions on [0, 1] that realize B(x): constants, logarithmic ramps and their concatenations."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from .boundary import BoundaryFunction
from .candidate import AngleFigure, CupFigure, Foliation, TangentDomain, TrolleybusFigure
from .cups import locate_chord
from .errors import ConstructionError, DispatchError
from .geometry import Point, StripLocation, classify, u_tangent, upper_point
from .numerics import TIGHT_SETTINGS, shifted_weighted_integral
from .tangents import FromInfinity, ScreenEnd


@dataclass(frozen=True)
class Constant:
    value: float
    lo: float
    hi: float

    def at(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.value)


@dataclass(frozen=True)
class LogRampUp:
    """u1 + eps log((s - l)/(r - l)) on [lo, hi], l <= lo < hi <= r."""
    l: float
    r: float
    u1: float
    eps: float
    lo: float
    hi: float

    def z(self, s):
        return (np.asarray(s, dtype=float) - self.l) / (self.r - self.l)

    def at(self, s):
        with np.errstate(divide="ignore"):
            return self.u1 + self.eps * np.log(self.z(s))


@dataclass(frozen=True)
class LogRampDown:
    """u2 - eps log((r - s)/(r - l)) on [lo, hi], l <= lo < hi <= r."""
    l: float
    r: float
    u2: float
    eps: float
    lo: float
    hi: float

    def z(self, s):
        return (self.r - np.asarray(s, dtype=float)) / (self.r - self.l)

    def at(self, s):
        with np.errstate(divide="ignore"):
            return self.u2 - self.eps * np.log(self.z(s))


Piece = Union[Constant, LogRampUp, LogRampDown]


class MomentTriple(NamedTuple):
    m1: float
    m2: float
    mf: float


def _xlogx(z: float) -> float:
    return 0.0 if z == 0.0 else z * math.log(z)


def _int_log(z0: float, z1: float) -> float:
    """Integral of log z over [z0, z1]."""
    return (_xlogx(z1) - z1) - (_xlogx(z0) - z0)


def _int_log2(z0: float, z1: float) -> float:
    def g(z):
        if z == 0.0:
            return 0.0
        lz = math.log(z)
        return z * lz * lz - 2.0 * z * lz + 2.0 * z
    return g(z1) - g(z0)


def _piece_sums(p: Piece, lo: float, hi: float, shift: float = 0.0):
    """(integral of phi - shift, integral of (phi - shift)^2) over [lo, hi] inside the piece."""
    if hi <= lo:
        return 0.0, 0.0
    if isinstance(p, Constant):
        c = p.value - shift
        return c * (hi - lo), c * c * (hi - lo)
    w = p.r - p.l
    if isinstance(p, LogRampUp):
        z0, z1 = max((lo - p.l) / w, 0.0), (hi - p.l) / w
        base, sgn = p.u1 - shift, 1.0
    else:
        z0, z1 = max((p.r - hi) / w, 0.0), (p.r - lo) / w
        base, sgn = p.u2 - shift, -1.0
    e = p.eps * sgn
    il, il2 = _int_log(z0, z1), _int_log2(z0, z1)
    dz = z1 - z0
    return w * (base * dz + e * il), w * (base * base * dz + 2.0 * base * e * il + e * e * il2)


@dataclass
class TestFunction:
    pieces: List[Piece]
    __test__ = False  # not a pytest class

    def __post_init__(self):
        edge = 0.0
        for p in self.pieces:
            if abs(p.lo - edge) > 1e-12 or not p.hi >= p.lo:
                raise ValueError(f"pieces must tile [0, 1] in order; got {p}")
            edge = p.hi
        if abs(edge - 1.0) > 1e-12:
            raise ValueError("pieces must end at 1")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        for k, p in enumerate(self.pieces):
            last = k == len(self.pieces) - 1
            mask = (s >= p.lo) & ((s <= p.hi) if last else (s < p.hi))
            if np.any(mask):
                out[mask] = p.at(s[mask])
        return out

    def endpoint_values(self):
        """(value at lo, value at hi) of each piece, +-inf at singular ends."""
        out = []
        for p in self.pieces:
            with np.errstate(divide="ignore"):
                out.append((float(p.at(p.lo)), float(p.at(p.hi))))
        return out

    def is_non_decreasing(self, tol: float = 1e-9) -> bool:
        vals = self.endpoint_values()
        for (a0, a1), (b0, _) in zip(vals, vals[1:]):
            if b0 < a1 - tol * (1.0 + abs(a1)):
                return False
        return all(lo <= hi + tol * (1.0 + abs(hi)) for lo, hi in vals)

    def describe(self) -> List[Dict]:
        out = []
        for p in self.pieces:
            rec = {"type": type(p).__name__, "interval": [p.lo, p.hi]}
            if isinstance(p, Constant):
                rec["value"] = p.value
            elif isinstance(p, LogRampUp):
                rec.update(l=p.l, r=p.r, u1=p.u1, eps=p.eps)
            else:
                rec.update(l=p.l, r=p.r, u2=p.u2, eps=p.eps)
            out.append(rec)
        return out


def _embed(phi: TestFunction, lo: float, hi: float) -> List[Piece]:
    """Pieces of phi reparametrized from [0, 1] onto [lo, hi]."""
    w = hi - lo
    m = lambda s: lo + w * s
    out = []
    for p in phi.pieces:
        if p.hi <= p.lo:
            continue
        if isinstance(p, Constant):
            out.append(Constant(p.value, m(p.lo), m(p.hi)))
        else:
            out.append(replace(p, l=m(p.l), r=m(p.r), lo=m(p.lo), hi=m(p.hi)))
    return out


def _tidy(pieces: List[Piece]) -> TestFunction:
    kept = [p for p in pieces if p.hi > p.lo]
    fixed = []
    edge = 0.0
    for p in kept:
        fixed.append(replace(p, lo=edge))
        edge = p.hi
    if fixed:
        fixed[-1] = replace(fixed[-1], hi=1.0)
    return TestFunction(fixed)


def _step(a: float, b: float, alpha: float) -> TestFunction:
    return _tidy([Constant(a, 0.0, alpha), Constant(b, alpha, 1.0)])


def _find_tangent(fol: Foliation, side: str, lo: Optional[float] = None,
                  hi: Optional[float] = None) -> TangentDomain:
    for fig in fol.figures:
        if fig.kind != "tangent" or fig.side != side:
            continue
        if lo is not None and abs(fig.lo - lo) > 1e-9 * (1.0 + abs(lo)):
            continue
        if hi is not None and abs(fig.hi - hi) > 1e-9 * (1.0 + abs(hi)):
            continue
        return fig
    raise ConstructionError(f"no {side} tangent domain with range ({lo}, {hi})")


def _node(fol: Foliation, dom: TangentDomain) -> TestFunction:
    """Optimizer of the upper point where a screen-anchored tangent domain starts."""
    a0, b0 = dom.coeff.anchor.a0, dom.coeff.anchor.b0
    eps = fol.eps
    tag = "trR" if dom.side == "R" else "trL"
    for fig in fol.figures:
        if fig.kind == "trolleybus" and fig.tag == tag and abs(fig.a0 - a0) + abs(fig.b0 - b0) < 1e-9:
            x = upper_point(b0 - eps if dom.side == "R" else a0 + eps, eps)
            return _trolleybus(fol, fig, x)
    if b0 - a0 < 2.0 * eps * (1.0 - 1e-9):
        raise ConstructionError(f"screen [{a0}, {b0}] is not full and carries no trolleybus")
    return _step(a0, b0, 0.5)


def _upper(fol: Foliation, dom: TangentDomain, u: float) -> TestFunction:
    """Optimizer of the upper end of the tangent with foot u."""
    eps = fol.eps
    anchor = dom.coeff.anchor
    if dom.side == "R":
        if isinstance(anchor, FromInfinity):
            return TestFunction([LogRampUp(0.0, 1.0, u, eps, 0.0, 1.0)])
        kappa = math.exp(-(u - anchor.b0) / eps)
        pieces = _embed(_node(fol, dom), 0.0, kappa) if kappa > 0 else []
        pieces.append(LogRampUp(0.0, 1.0, u, eps, kappa, 1.0))
        return _tidy(pieces)
    if isinstance(anchor, FromInfinity):
        return TestFunction([LogRampDown(0.0, 1.0, u, eps, 0.0, 1.0)])
    kappa = math.exp(-(anchor.a0 - u) / eps)
    pieces: List[Piece] = [LogRampDown(0.0, 1.0, u, eps, 0.0, 1.0 - kappa)]
    if kappa > 0:
        pieces += _embed(_node(fol, dom), 1.0 - kappa, 1.0)
    return _tidy(pieces)


def _tangent(fol: Foliation, dom: TangentDomain, x: Point, u: Optional[float] = None) -> TestFunction:
    eps = fol.eps
    if u is None:
        u = u_tangent(dom.side, x, eps)
    if dom.side == "R":
        mu = min(max((u - x[0]) / eps, 0.0), 1.0)
        if mu == 0.0:
            return TestFunction([Constant(u, 0.0, 1.0)])
        return _tidy(_embed(_upper(fol, dom, u), 0.0, mu) + [Constant(u, mu, 1.0)])
    mu = min(max((x[0] - u) / eps, 0.0), 1.0)
    if mu == 0.0:
        return TestFunction([Constant(u, 0.0, 1.0)])
    return _tidy([Constant(u, 0.0, 1.0 - mu)] + _embed(_upper(fol, dom, u), 1.0 - mu, 1.0))


def _trolleybus(fol: Foliation, tr: TrolleybusFigure, x: Point) -> TestFunction:
    """Transit from the lower corner through x to the far tangent edge."""
    eps = fol.eps
    if tr.side == "R":
        corner, foot = tr.b0, tr.a0
        slope, icpt = 2.0 * (foot - eps), -foot * foot + 2.0 * foot * eps
    else:
        corner, foot = tr.a0, tr.b0
        slope, icpt = 2.0 * (foot + eps), -foot * foot - 2.0 * foot * eps
    c2 = corner * corner
    den = (x[1] - c2) - slope * (x[0] - corner)
    if den == 0.0:
        return TestFunction([Constant(corner, 0.0, 1.0)])
    t = (slope * corner + icpt - c2) / den
    lam = min(max(1.0 / t, 0.0), 1.0)
    p = Point(corner + t * (x[0] - corner), c2 + t * (x[1] - c2))
    if tr.side == "R":
        dom = _find_tangent(fol, "R", hi=tr.a0)
        return _tidy(_embed(_tangent(fol, dom, p, u=foot), 0.0, lam) + [Constant(corner, lam, 1.0)])
    dom = _find_tangent(fol, "L", lo=tr.b0)
    return _tidy([Constant(corner, 0.0, 1.0 - lam)] + _embed(_tangent(fol, dom, p, u=foot), 1.0 - lam, 1.0))


def _angle(fol: Foliation, ang: AngleFigure, x: Point) -> TestFunction:
    """Concatenate the optimizers of the two side points on the line through x of slope 2v."""
    eps, v = fol.eps, ang.v
    k = x[1] - 2.0 * v * x[0] + v * v
    if k <= 0.0:
        return TestFunction([Constant(v, 0.0, 1.0)])
    half = k / (2.0 * eps)
    p_minus = Point(v - half, 2.0 * v * (v - half) - v * v + k)
    p_plus = Point(v + half, 2.0 * v * (v + half) - v * v + k)
    lam = min(max((p_plus.x1 - x[0]) / (2.0 * half), 0.0), 1.0)
    left = _find_tangent(fol, "R", hi=v)
    right = _find_tangent(fol, "L", lo=v)
    return _tidy(_embed(_tangent(fol, left, p_minus, u=v), 0.0, lam)
                 + _embed(_tangent(fol, right, p_plus, u=v), lam, 1.0))


def build_optimizer(x, fol: Foliation) -> TestFunction:
    """A non-decreasing phi on [0, 1] with moments x and <f(phi)> = B(x)."""
    x = Point(float(x[0]), float(x[1]))
    loc = classify(x, fol.eps)
    if loc is StripLocation.OUTSIDE:
        raise DispatchError(f"point {tuple(x)} is outside the strip")
    if loc is StripLocation.LOWER:
        return TestFunction([Constant(x.x1, 0.0, 1.0)])
    fig = fol.locate(x)
    if isinstance(fig, CupFigure):
        a, b = locate_chord(x, fig.cup)
        if b <= a:
            return TestFunction([Constant(x.x1, 0.0, 1.0)])
        return _step(a, b, (b - x.x1) / (b - a))
    if isinstance(fig, TangentDomain):
        return _tangent(fol, fig, x)
    if isinstance(fig, AngleFigure):
        return _angle(fol, fig, x)
    if isinstance(fig, TrolleybusFigure):
        return _trolleybus(fol, fig, x)
    raise DispatchError(f"unknown figure {fig!r}")


def _mf_piece(p: Piece, f: BoundaryFunction) -> float:
    if isinstance(p, Constant):
        return float(f.eval_f(p.value)) * (p.hi - p.lo)
    w = p.r - p.l
    if isinstance(p, LogRampUp):
        z0, z1 = (p.lo - p.l) / w, (p.hi - p.l) / w
        t0 = -math.inf if z0 <= 0 else p.u1 + p.eps * math.log(z0)
        t1 = p.u1 + p.eps * math.log(z1)
        core = shifted_weighted_integral(f.eval_f, t0, t1, 1.0, p.eps, p.u1, TIGHT_SETTINGS,
                                         f.eps0, f.breakpoints)
    else:
        z_hi, z_lo = (p.r - p.hi) / w, (p.r - p.lo) / w
        t0 = p.u2 - p.eps * math.log(z_lo)
        t1 = math.inf if z_hi <= 0 else p.u2 - p.eps * math.log(z_hi)
        core = shifted_weighted_integral(f.eval_f, t0, t1, -1.0, p.eps, p.u2, TIGHT_SETTINGS,
                                         f.eps0, f.breakpoints)
    return w / p.eps * core


def moments(phi: TestFunction, f: Optional[BoundaryFunction] = None) -> MomentTriple:
    m1 = m2 = mf = 0.0
    for p in phi.pieces:
        s1, s2 = _piece_sums(p, p.lo, p.hi)
        m1 += s1
        m2 += s2
        if f is not None:
            mf += _mf_piece(p, f)
    return MomentTriple(m1, m2, mf if f is not None else math.nan)


def _log_variance(rho: float) -> float:
    """Variance of log z for z uniform on [rho, 1]."""
    if rho <= 0.0:
        return 1.0
    if rho >= 1.0:
        return 0.0
    d = 1.0 - rho
    lr = math.log(rho)
    mean = (-1.0 - rho * lr + rho) / d
    second = (2.0 - rho * lr * lr + 2.0 * rho * lr - 2.0 * rho) / d
    return max(second - mean * mean, 0.0)


def _antiderivs(p: Piece, s: np.ndarray, shift: float):
    """Integrals of phi - shift and (phi - shift)^2 from p.lo to each s."""
    ln = s - p.lo
    if isinstance(p, Constant):
        c = p.value - shift
        return c * ln, c * c * ln
    w = p.r - p.l

    def prim(z):
        with np.errstate(divide="ignore", invalid="ignore"):
            lz = np.log(z)
            i1 = np.where(z > 0, z * lz - z, 0.0)
            i2 = np.where(z > 0, z * lz * lz - 2.0 * z * lz + 2.0 * z, 0.0)
        return i1, i2

    if isinstance(p, LogRampUp):
        base, e = p.u1 - shift, p.eps
        z0 = max((p.lo - p.l) / w, 0.0)
        z = np.maximum((s - p.l) / w, 0.0)
        a1, a2 = prim(z)
        b1, b2 = prim(np.array(z0))
        il, il2 = a1 - b1, a2 - b2
        dz = z - z0
    else:
        base, e = p.u2 - shift, -p.eps
        z0 = max((p.r - p.lo) / w, 0.0)
        z = np.maximum((p.r - s) / w, 0.0)
        a1, a2 = prim(z)
        b1, b2 = prim(np.array(z0))
        # integral over [z, z0] in z
        il, il2 = b1 - a1, b2 - a2
        dz = z0 - z
    return w * (base * dz + e * il), w * (base * base * dz + 2.0 * base * e * il + e * e * il2)


def _grid(p: Piece, resolution: int) -> np.ndarray:
    """Uniform nodes plus, at a singular ramp end, geometrically graded ones."""
    n = max(2, resolution)
    singular_lo = isinstance(p, LogRampUp) and p.lo <= p.l
    singular_hi = isinstance(p, LogRampDown) and p.hi >= p.r
    if not (singular_lo or singular_hi):
        return np.linspace(p.lo, p.hi, n + 1)
    half = max(2, n // 2)
    span = p.hi - p.lo
    geo = span * 2.0 ** (-np.arange(1, half + 1) * 40.0 / half)
    uni = np.linspace(p.lo, p.hi, half + 1)
    extra = p.lo + geo if singular_lo else p.hi - geo
    return np.unique(np.concatenate([uni, extra]))


def bmo_norm(phi: TestFunction, resolution: int = 512) -> float:
    """Square root of the largest variance over subintervals with grid endpoints.

    Subintervals inside one ramp use the exact scale-invariant variance of
    the logarithm; windows across pieces use cumulative centred moments on a
    grid that is uniform on each piece and geometric towards a ramp's
    singular end.  Grids for resolutions n and k*n are nested.
    """
    best = 0.0
    for p in phi.pieces:
        if isinstance(p, LogRampUp):
            best = max(best, p.eps ** 2 * _log_variance((p.lo - p.l) / (p.hi - p.l)))
        elif isinstance(p, LogRampDown):
            best = max(best, p.eps ** 2 * _log_variance((p.r - p.hi) / (p.r - p.lo)))
    pieces = [p for p in phi.pieces if p.hi > p.lo]
    if len(pieces) < 2:
        return math.sqrt(best)
    shift = moments(phi).m1
    nodes, c1, c2 = [], [], []
    off1 = off2 = 0.0
    for p in pieces:
        s = _grid(p, resolution)
        a1, a2 = _antiderivs(p, s, shift)
        nodes.append(s)
        c1.append(off1 + a1)
        c2.append(off2 + a2)
        off1 += a1[-1]
        off2 += a2[-1]
    k = len(pieces)
    for i in range(k):
        si, ci1, ci2 = nodes[i][:-1, None], c1[i][:-1, None], c2[i][:-1, None]
        for j in range(i + 1, k):
            sj, cj1, cj2 = nodes[j][None, 1:], c1[j][None, 1:], c2[j][None, 1:]
            length = sj - si
            mean = (cj1 - ci1) / length
            var = (cj2 - ci2) / length - mean * mean
            best = max(best, float(np.max(var)))
    return math.sqrt(max(best, 0.0))


def truncate(phi: TestFunction, c: float, d: float) -> TestFunction:
    """Clamp phi to [c, d], splitting ramps where they cross the levels."""
    if not c < d:
        raise ValueError("truncation needs c < d")
    out: List[Piece] = []
    for p in phi.pieces:
        if isinstance(p, Constant):
            out.append(Constant(min(max(p.value, c), d), p.lo, p.hi))
            continue
        w = p.r - p.l
        if isinstance(p, LogRampUp):
            s_c = p.l + w * math.exp((c - p.u1) / p.eps) if (c - p.u1) / p.eps < 700 else math.inf
            s_d = p.l + w * math.exp((d - p.u1) / p.eps) if (d - p.u1) / p.eps < 700 else math.inf
        else:
            s_c = p.r - w * math.exp(-(c - p.u2) / p.eps) if -(c - p.u2) / p.eps < 700 else -math.inf
            s_d = p.r - w * math.exp(-(d - p.u2) / p.eps) if -(d - p.u2) / p.eps < 700 else -math.inf
        lo, hi = p.lo, p.hi
        a = min(max(s_c, lo), hi)
        b = min(max(s_d, lo), hi)
        if a > lo:
            out.append(Constant(c, lo, a))
        if b > a:
            out.append(replace(p, lo=a, hi=b))
        if hi > b:
            out.append(Constant(d, b, hi))
    return TestFunction(out)


# exact BMO norm for non-decreasing step functions (used by the random oracle)

def step_bmo_norm(values: Sequence[float], lengths: Sequence[float]) -> float:
    """Exact sup of the variance over subintervals of a step function.

    For a window whose first and last pieces are cut, the variance is
    stationary in a cut length only where (c - mean)^2 = variance; both cuts
    stationary forces a two-point equal-weight distribution, so the sup is
    attained with one end at a breakpoint (a 1-D concave problem in the
    weight of the cut piece) or is (c_j - c_i)^2 / 4 for adjacent pieces.
    """
    vals, lens = [], []
    for v, ln in zip(values, lengths):
        if ln <= 0:
            continue
        if vals and v == vals[-1]:
            lens[-1] += ln
        else:
            vals.append(float(v))
            lens.append(float(ln))
    n = len(vals)
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1:
                best = max(best, (vals[j] - vals[i]) ** 2 / 4.0)
                continue
            mid_w = sum(lens[i + 1:j])
            mid_1 = sum(v * l for v, l in zip(vals[i + 1:j], lens[i + 1:j]))
            mid_2 = sum(v * v * l for v, l in zip(vals[i + 1:j], lens[i + 1:j]))
            for full, cut in ((i, j), (j, i)):
                w = mid_w + lens[full]
                s1 = mid_1 + vals[full] * lens[full]
                s2 = mid_2 + vals[full] ** 2 * lens[full]
                m = s1 / w
                v0 = max(s2 / w - m * m, 0.0)
                c = vals[cut]
                g = (c - m) ** 2
                p_max = lens[cut] / (w + lens[cut])
                p = 0.0 if g == 0.0 else min(max((g - v0) / (2.0 * g), 0.0), p_max)
                best = max(best, (1.0 - p) * v0 + p * (1.0 - p) * g, v0)
                best = max(best, (1.0 - p_max) * v0 + p_max * (1.0 - p_max) * g)
    return math.sqrt(best)
