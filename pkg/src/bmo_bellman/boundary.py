"""Boundary function f, the sign pattern of f''' and affine normalizations."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .errors import ClassGateError, PatternError, TransformError
from .geometry import Point


@dataclass(frozen=True)
class Infinite:
    """An infinite endpoint of the real line (sign +1 or -1)."""
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("Infinite.sign must be +1 or -1")

    def __float__(self) -> float:
        return math.inf if self.sign > 0 else -math.inf

    def __repr__(self) -> str:
        return "+inf" if self.sign > 0 else "-inf"


PLUS_INF = Infinite(1)
MINUS_INF = Infinite(-1)

ExtendedReal = Union[float, Infinite]


def is_infinite(x) -> bool:
    return isinstance(x, Infinite)


def ext(x: float) -> ExtendedReal:
    """Turn a float that may be +-inf into an ExtendedReal."""
    if isinstance(x, Infinite):
        return x
    if math.isinf(x):
        return PLUS_INF if x > 0 else MINUS_INF
    return float(x)


@dataclass(frozen=True)
class SignPattern:
    """Points where f''' changes sign: c-points (+ to -), v-points (- to +).

    Interleaved as c0 < v1 < c1 < ... < vN < cN. Only c0 and cN may be
    infinite; with N = 0 the single c0 is +inf (f''' > 0) or -inf (f''' < 0).
    """
    c_points: Tuple[ExtendedReal, ...]
    v_points: Tuple[float, ...] = ()

    def __post_init__(self):
        cs = tuple(ext(c) for c in self.c_points)
        vs = tuple(float(v) for v in self.v_points)
        object.__setattr__(self, "c_points", cs)
        object.__setattr__(self, "v_points", vs)
        if len(cs) != len(vs) + 1:
            raise PatternError(f"need one more c-point than v-points, got {len(cs)} and {len(vs)}")
        for v in vs:
            if not math.isfinite(v):
                raise PatternError("v-points must be finite")
        for k, c in enumerate(cs):
            if is_infinite(c) and 0 < k < len(cs) - 1:
                raise PatternError("only the first and last c-point may be infinite")
        if len(cs) > 1:
            if cs[0] == PLUS_INF or cs[-1] == MINUS_INF:
                raise PatternError("c0 may only be -inf and cN only +inf when N > 0")
        seq = [float(cs[0])]
        for v, c in zip(vs, cs[1:]):
            seq += [v, float(c)]
        if any(not (a < b) for a, b in zip(seq, seq[1:])):
            raise PatternError(f"pattern points are not strictly interleaved: {seq}")

    @property
    def n(self) -> int:
        return len(self.v_points)

    def finite_points(self) -> List[Tuple[float, str]]:
        """Finite pattern points in increasing order, tagged 'c' or 'v'."""
        pts = [(float(c), "c") for c in self.c_points if not is_infinite(c)]
        pts += [(v, "v") for v in self.v_points]
        return sorted(pts)

    def finite_c(self) -> List[float]:
        return [float(c) for c in self.c_points if not is_infinite(c)]

    def sign_at(self, t: float) -> int:
        """Sign f''' is declared to have at t (t off the pattern points)."""
        sign = -1 if self.c_points[0] == MINUS_INF else 1
        for p, kind in self.finite_points():
            if t > p:
                sign = -1 if kind == "c" else 1
        return sign

    def check_separation(self, width: float) -> None:
        """Hard gate: every finite c-point keeps 2*width away from every v-point."""
        for c in self.finite_c():
            for v in self.v_points:
                if abs(c - v) < 2.0 * width * (1.0 - 1e-12):
                    raise ClassGateError(
                        f"c-point {c:.6g} and v-point {v:.6g} are closer than 2*{width:.6g}")


@dataclass(frozen=True)
class BoundaryFunction:
    """f with analytic derivatives f', f'', f''' (all vectorized over numpy arrays).

    eps0 is the growth parameter: f^(r)(t) exp(-|t|/eps0) must stay integrable,
    so improper weighted integrals converge for eps < eps0. Polynomials use
    eps0 = inf. `breakpoints` lists points where some derivative is not smooth;
    quadrature never integrates across them.
    """
    eval_f: Callable
    eval_f1: Callable
    eval_f2: Callable
    eval_f3: Callable
    eps0: float = math.inf
    pattern: Optional[SignPattern] = None
    breakpoints: Tuple[float, ...] = ()
    name: str = "custom"
    params: Tuple = field(default=(), compare=False)

    def with_pattern(self, pattern: SignPattern) -> "BoundaryFunction":
        return BoundaryFunction(self.eval_f, self.eval_f1, self.eval_f2, self.eval_f3,
                                self.eps0, pattern, self.breakpoints, self.name, self.params)

    def require_pattern(self) -> SignPattern:
        if self.pattern is None:
            raise PatternError(f"{self.name}: no sign pattern; run detect_pattern first")
        return self.pattern

    def check_eps(self, eps: float) -> None:
        if not (eps > 0.0):
            raise ClassGateError(f"eps must be positive, got {eps}")
        if not eps < self.eps0:
            raise ClassGateError(f"{self.name}: eps = {eps} must be below eps0 = {self.eps0}")


def derivative_consistency(f: BoundaryFunction, samples: Sequence[float],
                           rel_step: float = 1e-5) -> float:
    """Largest relative mismatch between supplied and finite-difference derivatives.

    Samples within two steps of a breakpoint are skipped.
    """
    pairs = [(f.eval_f, f.eval_f1), (f.eval_f1, f.eval_f2), (f.eval_f2, f.eval_f3)]
    worst = 0.0
    for t in samples:
        h = rel_step * max(1.0, abs(t))
        if any(abs(t - b) <= 2 * h for b in f.breakpoints):
            continue
        for g, dg in pairs:
            fd = (float(g(t + h)) - float(g(t - h))) / (2 * h)
            exact = float(dg(t))
            ref = max(1.0, abs(exact), abs(float(g(t))))
            worst = max(worst, abs(fd - exact) / ref)
    return worst


def growth_check(f: BoundaryFunction) -> List[str]:
    """Advisory check that |f^(r)(t)| exp(-|t|/eps0) is non-increasing at +-K eps0.

    Returns warning strings (also emitted through `warnings`). Infinite eps0
    is probed at the surrogate eps0 = 1, enough for sub-exponential growth.
    """
    e0 = f.eps0 if math.isfinite(f.eps0) else 1.0
    out = []
    for r, g in enumerate((f.eval_f, f.eval_f1, f.eval_f2, f.eval_f3)):
        for sgn in (-1.0, 1.0):
            vals = []
            for k in (10, 20, 30):
                t = sgn * k * e0
                with np.errstate(over="ignore"):
                    vals.append(abs(float(g(t))) * math.exp(-abs(t) / e0))
            if not (vals[1] <= vals[0] * (1 + 1e-9) + 1e-300 and vals[2] <= vals[1] * (1 + 1e-9) + 1e-300):
                msg = f"{f.name}: |f^({r})| exp(-|t|/eps0) not decreasing towards {'+' if sgn > 0 else '-'}inf"
                out.append(msg)
                warnings.warn(msg)
    return out


def pattern_spot_check(f: BoundaryFunction, samples_per_gap: int = 16, reach: float = 10.0) -> List[str]:
    """Advisory: sample f''' between pattern points and report sign mismatches."""
    pat = f.require_pattern()
    pts = [p for p, _ in pat.finite_points()]
    lo = (pts[0] if pts else 0.0) - reach
    hi = (pts[-1] if pts else 0.0) + reach
    edges = [lo] + pts + [hi]
    out = []
    for a, b in zip(edges, edges[1:]):
        ts = np.linspace(a, b, samples_per_gap + 2)[1:-1]
        vals = np.asarray(f.eval_f3(ts), dtype=float)
        for t, val in zip(ts, vals):
            want = pat.sign_at(t)
            if val * want < 0:
                msg = f"{f.name}: f'''({t:.4g}) = {val:.3g} has the wrong sign for the declared pattern"
                out.append(msg)
                warnings.warn(msg)
    return out


def detect_pattern(f3, search_box: Tuple[float, float], grid: int = 4000,
                   expected_n: Optional[int] = None) -> SignPattern:
    """Locate sign changes of f''' on a grid and refine them by bracketing.

    `f3` is a BoundaryFunction or a vectorized callable for f'''. Raises
    PatternError when f''' vanishes on a whole grid cell run (f quadratic on an
    interval) or when the number of v-points differs from `expected_n`.
    """
    g = f3.eval_f3 if isinstance(f3, BoundaryFunction) else f3
    lo, hi = float(search_box[0]), float(search_box[1])
    ts = np.linspace(lo, hi, int(grid) + 1)
    vals = np.asarray(g(ts), dtype=float)
    scale = max(1.0, abs(lo), abs(hi))
    zero_tol = 1e-300
    zero = np.abs(vals) <= zero_tol
    run = 0
    for z in zero:
        run = run + 1 if z else 0
        if run >= 3:
            raise PatternError("f''' vanishes on an interval; the function is quadratic there")
    nz = [(t, v) for t, v, z in zip(ts, vals, zero) if not z]
    if not nz:
        raise PatternError("f''' vanishes on the whole search box")
    points = []
    for (t0, v0), (t1, v1) in zip(nz, nz[1:]):
        if v0 * v1 < 0:
            root = brentq(lambda t: float(g(t)), t0, t1, xtol=1e-12 * scale, rtol=4 * np.finfo(float).eps)
            points.append((root, "c" if v0 > 0 else "v"))
    if not points:
        return SignPattern((PLUS_INF,) if nz[0][1] > 0 else (MINUS_INF,))
    kinds = [k for _, k in points]
    if any(a == b for a, b in zip(kinds, kinds[1:])):
        raise PatternError("sign changes of f''' do not alternate")
    cs: List[ExtendedReal] = [p for p, k in points if k == "c"]
    vs = [p for p, k in points if k == "v"]
    if kinds[0] == "v":
        cs.insert(0, MINUS_INF)
    if kinds[-1] == "v":
        cs.append(PLUS_INF)
    pat = SignPattern(tuple(cs), tuple(vs))
    if expected_n is not None and pat.n != expected_n:
        raise PatternError(f"found {pat.n} v-points, expected {expected_n}")
    return pat


@dataclass(frozen=True)
class AffineTransform:
    """g(t) = a * f(alpha t + beta) + b t^2 + c t + d."""
    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if self.alpha == 0.0:
            raise TransformError("alpha must be non-zero")
        if self.a == 0.0:
            raise TransformError("a must be non-zero")

    def inverse(self) -> "AffineTransform":
        """Transform expressing sign(a) f through g; pushforwards then compose to the identity."""
        a, b, c, d, al, be = self.a, self.b, self.c, self.d, self.alpha, self.beta
        # sign(a) f(s) = (1/|a|) [g(t) - b t^2 - c t - d] with t = (s - beta)/alpha
        ia = 1.0 / abs(a)
        return AffineTransform(
            a=ia,
            b=-ia * b / al ** 2,
            c=-ia * (c / al - 2 * b * be / al ** 2),
            d=-ia * (b * be ** 2 / al ** 2 - c * be / al + d),
            alpha=1.0 / al,
            beta=-be / al,
        )


def affine_pushforward(B_value: float, x: Point, T: AffineTransform,
                       eps: float) -> Tuple[float, Point, float]:
    """Carry a Bellman value of the normalized problem back to the original one.

    `B_value` is B_eps(x; sign(a) f) at the normalized point x with radius eps.
    Returns (B, x_orig, eps_orig) for g = a f(alpha t + beta) + b t^2 + c t + d,
    where x = (alpha y1 + beta, alpha^2 y2 + 2 alpha beta y1 + beta^2) for the
    original point y and eps = |alpha| eps_orig.
    """
    if T.alpha == 0.0:
        raise TransformError("alpha must be non-zero")
    al, be = T.alpha, T.beta
    y1 = (x[0] - be) / al
    y2 = (x[1] - 2.0 * be * x[0] + be * be) / (al * al)
    value = abs(T.a) * B_value + T.b * y2 + T.c * y1 + T.d
    return value, Point(y1, y2), eps / abs(al)
