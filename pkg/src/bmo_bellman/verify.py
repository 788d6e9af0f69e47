"""Checks on a foliation: boundary values, local concavity, Monge-Ampere, optimizers, and a random lower bound."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .boundary import BoundaryFunction
from .candidate import Foliation
from .geometry import Point, StripLocation, classify, segment_in_strip
from .optimizers import bmo_norm, build_optimizer, moments, step_bmo_norm

TOLERANCES: Dict[str, float] = {
    "boundary": 1e-9,
    "concavity": 1e-8,
    "monge_ampere": 1e-4,
    "optimizer_moments": 1e-7,
    "optimizer_value": 1e-6,
    "optimizer_bmo": 1e-6,
    "lower_bound": 1e-6,
}


@dataclass
class Report:
    suite: str
    samples: int
    max_violation: float
    worst_point: Optional[Point]
    tolerance: float
    seed: Optional[int] = None
    details: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.max_violation = float(self.max_violation)
        if self.worst_point is not None:
            self.worst_point = Point(float(self.worst_point[0]), float(self.worst_point[1]))

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def as_dict(self) -> Dict:
        wp = None if self.worst_point is None else [float(self.worst_point[0]), float(self.worst_point[1])]
        return {"suite": self.suite, "samples": self.samples, "max_violation": self.max_violation,
                "worst_point": wp, "tolerance": self.tolerance, "pass": self.passed, "seed": self.seed,
                **self.details}

    def line(self) -> str:
        wp = "-" if self.worst_point is None else f"({self.worst_point[0]:.6g}, {self.worst_point[1]:.6g})"
        return (f"{self.suite:<18} {'PASS' if self.passed else 'FAIL'}  samples={self.samples:<6d} "
                f"max_violation={self.max_violation:.3e} tol={self.tolerance:.1e} worst={wp}")


def _scale(*vals: float) -> float:
    return max([1.0] + [abs(v) for v in vals])


def sample_span(fol: Foliation, pad: float = 5.0):
    """x1-range covering every finite feature of the foliation, padded by pad * eps."""
    pts = []
    for fig in fol.figures:
        pts += [t for t in (fig.lo, fig.hi) if math.isfinite(t)]
    if fol.f.pattern is not None:
        pts += [p for p, _ in fol.f.pattern.finite_points()]
    if not pts:
        pts = [0.0]
    return min(pts) - pad * fol.eps, max(pts) + pad * fol.eps


def sample_in_figure(fig, fol: Foliation, rng: np.random.Generator, span=None) -> Optional[Point]:
    """A random point of the strip claimed by fig, or None if fig misses the span."""
    eps = fol.eps
    lo, hi = span if span is not None else sample_span(fol)
    if fig.kind in ("tangent", "trolleybus"):
        a, b = max(fig.lo, lo), min(fig.hi, hi)
        if not a <= b:
            return None
        for _ in range(50):
            u = rng.uniform(a, b)
            t = rng.uniform()
            w = u - eps if fig.side == "R" else u + eps
            x1 = u + t * (w - u)
            x = Point(x1, (1 - t) * u * u + t * (w * w + eps * eps))
            if fig.kind == "tangent" or not fig.cup.contains(x, tol=-1e-13):
                return x
        return None
    if fig.kind == "cup":
        cup = fig.cup
        a, b = cup.chord(rng.uniform(0.0, cup.ell_max))
        t = rng.uniform()
        return Point(t * a + (1 - t) * b, t * a * a + (1 - t) * b * b)
    if fig.kind == "angle":
        y1 = rng.uniform(-eps, eps)
        y2 = rng.uniform(2 * eps * abs(y1), y1 * y1 + eps * eps)
        x1 = fig.v + y1
        return Point(x1, y2 + 2 * fig.v * x1 - fig.v ** 2)
    return None


def _strip_points(fol: Foliation, rng, n: int, span=None):
    lo, hi = span if span is not None else sample_span(fol)
    x1 = rng.uniform(lo, hi, n)
    h = rng.uniform(0.0, 1.0, n) * fol.eps ** 2
    return [Point(a, a * a + d) for a, d in zip(x1, h)]


def check_boundary(fol: Foliation, f: Optional[BoundaryFunction] = None, n: int = 500,
                   seed: int = 0, tol: Optional[float] = None) -> Report:
    f = f or fol.f
    rng = np.random.default_rng(seed)
    lo, hi = sample_span(fol)
    worst, wp = 0.0, None
    for x1 in rng.uniform(lo, hi, n):
        x = Point(x1, x1 * x1)
        target = float(f.eval_f(x1))
        fig = fol.locate(x)
        # the figure's own formula, not the boundary shortcut in evaluate
        viol = abs(fig.value(x) - target) / _scale(target)
        if viol > worst:
            worst, wp = viol, x
    return Report("boundary", n, worst, wp, TOLERANCES["boundary"] if tol is None else tol, seed)


def _random_segment(fol: Foliation, rng, span):
    eps = fol.eps
    for _ in range(200):
        p = _strip_points(fol, rng, 1, span)[0]
        slope = 2 * p.x1 + rng.normal() * eps
        dx = rng.uniform(-2.0, 2.0) * eps
        q = Point(p.x1 + dx, p.x2 + slope * dx)
        if classify(q, eps) is not StripLocation.OUTSIDE and segment_in_strip(p, q, eps):
            return p, q
    return None


def check_concavity(fol: Foliation, f: Optional[BoundaryFunction] = None, n_segments: int = 1000,
                    seed: int = 0, tol: Optional[float] = None) -> Report:
    """Largest deficit of B along random segments inside the strip."""
    rng = np.random.default_rng(seed)
    span = sample_span(fol)
    ts = np.linspace(0.0, 1.0, 7)[1:-1]
    worst, wp, used = 0.0, None, 0
    for _ in range(n_segments):
        seg = _random_segment(fol, rng, span)
        if seg is None:
            continue
        p, q = seg
        used += 1
        bp, bq = fol.evaluate(p), fol.evaluate(q)
        for t in ts:
            x = Point(p.x1 + t * (q.x1 - p.x1), p.x2 + t * (q.x2 - p.x2))
            bx = fol.evaluate(x)
            deficit = ((1 - t) * bp + t * bq - bx) / _scale(bp, bq, bx)
            if deficit > worst:
                worst, wp = deficit, x
    return Report("concavity", used, worst, wp, TOLERANCES["concavity"] if tol is None else tol, seed)


def _hessian(fol: Foliation, x: Point, h: float) -> np.ndarray:
    e = fol.evaluate
    x1, x2 = x
    c = e(x)
    b11 = (e((x1 + h, x2)) - 2 * c + e((x1 - h, x2))) / h ** 2
    b22 = (e((x1, x2 + h)) - 2 * c + e((x1, x2 - h))) / h ** 2
    b12 = (e((x1 + h, x2 + h)) - e((x1 + h, x2 - h)) - e((x1 - h, x2 + h)) + e((x1 - h, x2 - h))) / (4 * h * h)
    return np.array([[b11, b12], [b12, b22]])


def _stencil_inside(fol: Foliation, fig, x: Point, reach: float) -> bool:
    for d1 in (-reach, 0.0, reach):
        for d2 in (-reach, 0.0, reach):
            y = Point(x.x1 + d1, x.x2 + d2)
            if classify(y, fol.eps) is not StripLocation.INTERIOR:
                return False
            if fol.locate(y) is not fig:
                return False
    margin = 3 * reach * (1 + abs(x.x1))
    d = x.x2 - x.x1 ** 2
    return margin < d < fol.eps ** 2 - margin


def check_monge_ampere(fol: Foliation, f: Optional[BoundaryFunction] = None, n: int = 200,
                       seed: int = 0, h: float = 1e-4, tol: Optional[float] = None) -> Report:
    """det(Hessian)/|Hessian|^2 and the sign of B_x1x1 on the curved figures.

    Second differences at h and 2h are Richardson-combined; only points whose
    whole stencil lies in the interior of one figure count.
    """
    rng = np.random.default_rng(seed)
    span = sample_span(fol)
    curved = [fig for fig in fol.figures if fig.kind in ("tangent", "cup")]
    worst, wp, used = 0.0, None, 0
    if not curved:
        return Report("monge_ampere", 0, 0.0, None, TOLERANCES["monge_ampere"] if tol is None else tol, seed)
    tol_ = TOLERANCES["monge_ampere"] if tol is None else tol
    attempts = unresolved = 0
    while used < n and attempts < 20 * n:
        attempts += 1
        fig = curved[attempts % len(curved)]
        x = sample_in_figure(fig, fol, rng, span)
        if x is None or not _stencil_inside(fol, fig, x, 3 * h):
            continue
        used += 1
        hh = (4 * _hessian(fol, x, h) - _hessian(fol, x, 2 * h)) / 3
        norm = float(np.linalg.norm(hh))
        scale = _scale(fol.evaluate(x))
        # rounding in B spreads to ~8 ulp * scale / h^2 per entry; below this
        # floor the residual would measure noise rather than curvature
        floor = max(1e-6, 64 * np.finfo(float).eps / (h * h * tol_)) * scale
        if norm <= floor:
            unresolved += 1
            continue
        viol = max(abs(float(np.linalg.det(hh))) / norm ** 2, hh[0, 0] / norm)
        if viol > worst:
            worst, wp = viol, x
    return Report("monge_ampere", used, worst, wp, tol_, seed, {"unresolved": unresolved})


def check_optimizers(fol: Foliation, f: Optional[BoundaryFunction] = None, n_per_figure: int = 20,
                     seed: int = 0, resolution: int = 512, tol: Optional[float] = None) -> Report:
    """Moments, value and BMO norm of build_optimizer at points of every figure.

    The violation is the worst ratio of error to tolerance over the three
    checks, so the report passes when it is at most 1.
    """
    f = f or fol.f
    eps = fol.eps
    rng = np.random.default_rng(seed)
    span = sample_span(fol)
    t_mom = TOLERANCES["optimizer_moments"]
    t_val = TOLERANCES["optimizer_value"]
    t_bmo = TOLERANCES["optimizer_bmo"]
    worst, wp, used = 0.0, None, 0
    parts = {"moments": 0.0, "value": 0.0, "bmo": 0.0, "monotone": 0.0}
    for fig in fol.figures:
        for _ in range(n_per_figure):
            x = sample_in_figure(fig, fol, rng, span)
            if x is None:
                continue
            used += 1
            phi = build_optimizer(x, fol)
            m = moments(phi, f)
            b = fol.evaluate(x)
            e_mom = max(abs(m.m1 - x.x1), abs(m.m2 - x.x2)) / (1 + abs(x.x2)) / t_mom
            e_val = abs(m.mf - b) / _scale(b) / t_val
            e_bmo = max(bmo_norm(phi, resolution) / eps - 1.0, 0.0) / t_bmo
            e_mono = 0.0 if phi.is_non_decreasing() else math.inf
            for k, v in zip(parts, (e_mom, e_val, e_bmo, e_mono)):
                parts[k] = max(parts[k], v)
            viol = max(e_mom, e_val, e_bmo, e_mono)
            if viol > worst:
                worst, wp = viol, x
    return Report("optimizers", used, worst, wp, 1.0 if tol is None else tol, seed,
                  {"relative_to_tolerance": parts})


def _two_value_best(x: Point, f: BoundaryFunction, eps: float, grid: int = 4001) -> float:
    """Best <f(phi)> over two-valued non-decreasing steps with moments x."""
    s2 = x.x2 - x.x1 ** 2
    if s2 <= 0:
        return float(f.eval_f(x.x1))
    s = math.sqrt(s2)
    # the jump b - a = s / sqrt(al (1 - al)) must stay within 2 eps
    q = s2 / (4 * eps * eps)
    if q > 0.25:
        return -math.inf
    root = math.sqrt(max(0.25 - q, 0.0))
    lo, hi = 0.5 - root, 0.5 + root

    def val(al):
        al = np.asarray(al)
        a = x.x1 - s * np.sqrt((1 - al) / al)
        b = x.x1 + s * np.sqrt(al / (1 - al))
        return al * f.eval_f(a) + (1 - al) * f.eval_f(b)

    if hi - lo < 1e-15:
        return float(val(0.5))
    al = np.linspace(lo, hi, grid)
    # keep strictly inside so the jump never exceeds 2 eps by rounding
    al = np.clip(al, lo + 1e-15, hi - 1e-15)
    v = val(al)
    k = int(np.argmax(v))
    best = float(v[k])
    a, b = al[max(k - 1, 0)], al[min(k + 1, grid - 1)]
    for _ in range(80):
        m1, m2 = a + (b - a) / 3, b - (b - a) / 3
        if val(m1) < val(m2):
            a = m1
        else:
            b = m2
    return max(best, float(val(0.5 * (a + b))))


def lower_bound_search(x, f: BoundaryFunction, eps: float, budget: int = 2000, seed: int = 0,
                       max_pieces: int = 16) -> float:
    """Largest <f(phi)> found over non-decreasing step functions with moments x and BMO norm <= eps.

    Random steps are moved onto the moments by an affine correction, checked
    with the exact step-function norm, and the best one is then perturbed
    greedily.  Independent of the foliation: a one-sided oracle for B.
    """
    x = Point(float(x[0]), float(x[1]))
    loc = classify(x, eps)
    if loc is StripLocation.OUTSIDE:
        raise ValueError(f"point {tuple(x)} is outside the strip")
    if loc is StripLocation.LOWER:
        return float(f.eval_f(x.x1))
    rng = np.random.default_rng(seed)
    s = math.sqrt(x.x2 - x.x1 ** 2)
    best = _two_value_best(x, f, eps)
    best_vals = best_lens = None

    def correct(vals, lens):
        m = float(np.dot(vals, lens))
        var = float(np.dot(vals * vals, lens)) - m * m
        if var <= 0:
            return None
        return x.x1 + (vals - m) * (s / math.sqrt(var))

    def score(vals, lens):
        v = correct(vals, lens)
        if v is None or step_bmo_norm(v, lens) > eps:
            return None, None
        return float(np.dot(f.eval_f(v), lens)), v

    n_random = budget // 2
    for k in range(n_random):
        n = int(rng.integers(2, max_pieces + 1))
        vals = np.sort(rng.standard_normal(n) * rng.uniform(0.2, 3.0)
                       + rng.standard_exponential(n) * rng.uniform(0, 2) * (rng.uniform() < 0.5))
        lens = rng.dirichlet(np.full(n, rng.uniform(0.3, 3.0)))
        val, v = score(vals, lens)
        if val is not None and val > best:
            best, best_vals, best_lens = val, v, lens
    if best_vals is None:
        return best
    # greedy phase: split a piece now and then, jitter one or all coordinates,
    # grow the step after a success and shrink it after a run of failures
    step, fails = 0.3, 0
    for k in range(budget - n_random):
        vals, lens = best_vals.copy(), best_lens.copy()
        if len(vals) < max_pieces and rng.uniform() < 0.05:
            i = int(rng.integers(len(vals)))
            vals = np.insert(vals, i, vals[i])
            lens = np.insert(lens, i, lens[i] / 2)
            lens[i + 1] /= 2
        if rng.uniform() < 0.5:
            i = int(rng.integers(len(vals)))
            vals[i] += rng.standard_normal() * step * s
            lens[i] *= math.exp(rng.standard_normal() * step)
        else:
            vals += rng.standard_normal(len(vals)) * step * s
            lens *= np.exp(rng.standard_normal(len(lens)) * step)
        vals = np.sort(vals)
        lens /= lens.sum()
        val, v = score(vals, lens)
        if val is not None and val > best:
            best, best_vals, best_lens = val, v, lens
            step, fails = min(step * 1.5, 1.0), 0
        else:
            fails += 1
            if fails >= 30:
                step, fails = max(step * 0.7, 1e-5), 0
    return best


def check_lower_bound(fol: Foliation, f: Optional[BoundaryFunction] = None, n: int = 50,
                      budget: int = 400, seed: int = 0, tol: Optional[float] = None,
                      n_tight: int = 10) -> Report:
    """The random oracle must never beat B by more than the tolerance.

    Where B is attained by at most two values (the lower boundary and the
    cups) the oracle should also come close from below; the largest such gap
    is reported as tight_gap.
    """
    f = f or fol.f
    rng = np.random.default_rng(seed)
    worst, wp = -math.inf, None
    pts = _strip_points(fol, rng, n)
    lo, hi = sample_span(fol)
    tight = [Point(a, a * a) for a in rng.uniform(lo, hi, n_tight)]
    for fig in fol.figures:
        if fig.kind == "cup":
            tight += [sample_in_figure(fig, fol, rng) for _ in range(n_tight)]
    gap = 0.0
    for k, x in enumerate(pts + tight):
        b = fol.evaluate(x)
        lb = lower_bound_search(x, f, fol.eps, budget=budget, seed=seed + k)
        excess = (lb - b) / _scale(b)
        if excess > worst:
            worst, wp = excess, x
        if k >= len(pts):
            gap = max(gap, -excess)
    return Report("lower_bound", len(pts) + len(tight), max(worst, 0.0), wp,
                  TOLERANCES["lower_bound"] if tol is None else tol, seed,
                  {"largest_excess": worst, "tight_gap": gap, "tight_samples": len(tight)})


SUITES = {
    "boundary": check_boundary,
    "concavity": check_concavity,
    "monge_ampere": check_monge_ampere,
    "optimizers": check_optimizers,
    "lower_bound": check_lower_bound,
}


def run_all(fol: Foliation, f: Optional[BoundaryFunction] = None, seed: int = 0,
            suites: Sequence[str] = tuple(SUITES), tolerances: Optional[Dict[str, float]] = None,
            **sizes) -> List[Report]:
    """Every requested suite with its default sample size unless overridden in sizes."""
    tolerances = tolerances or {}
    out = []
    for name in suites:
        fn = SUITES[name]
        kwargs = {k: v for k, v in sizes.get(name, {}).items()}
        out.append(fn(fol, f, seed=seed, tol=tolerances.get(name), **kwargs))
    return out
