"""The global candidate: figures built from a balanced family, point dispatch, evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .boundary import BoundaryFunction, is_infinite
from .cups import CupFamily, eval_cup
from .errors import ConstructionError, DispatchError
from .forces import END_TOL, BalancedFamily, Force, balance_all
from .geometry import Point, StripLocation, classify, u_tangent
from .tangents import FromInfinity, ScreenEnd, TangentCoefficient, eval_tangent, mean_f2, sign_certificate

CLAIM_TOL = 1e-10


@dataclass
class TangentDomain:
    side: str
    lo: float
    hi: float
    coeff: TangentCoefficient
    kind = "tangent"

    @property
    def tag(self) -> str:
        return self.side

    def claims(self, x: Point, eps: float) -> bool:
        u = u_tangent(self.side, x, eps)
        slack = CLAIM_TOL * (1.0 + abs(u))
        return self.lo - slack <= u <= self.hi + slack

    def value(self, x: Point) -> float:
        u = u_tangent(self.side, x, self.coeff.eps)
        return self.coeff.value(u) * (x[0] - u) + float(self.coeff.f.eval_f(u))

    def describe(self) -> Dict:
        a = self.coeff.anchor
        anchor = "infinity" if isinstance(a, FromInfinity) else {"a0": a.a0, "b0": a.b0}
        return {"figure": self.side, "u_range": [self.lo, self.hi], "anchor": anchor}


@dataclass
class CupFigure:
    cup: CupFamily
    kind = "cup"
    tag = "cup"

    @property
    def lo(self) -> float:
        return self.cup.top()[0]

    @property
    def hi(self) -> float:
        return self.cup.top()[1]

    def claims(self, x: Point, eps: float) -> bool:
        return self.cup.contains(x)

    def value(self, x: Point) -> float:
        return eval_cup(x, self.cup)

    def describe(self) -> Dict:
        a, b = self.cup.top()
        return {"figure": "cup", "c": self.cup.origin_c, "a": a, "b": b, "ell": self.cup.ell_max,
                "full": self.cup.full}


@dataclass
class AngleFigure:
    v: float
    alpha1: float
    alpha2: float
    alpha0: float
    m_r: float
    m_l: float
    eps: float
    kind = "angle"
    tag = "angle"

    @property
    def lo(self) -> float:
        return self.v

    @property
    def hi(self) -> float:
        return self.v

    def claims(self, x: Point, eps: float) -> bool:
        x1, x2 = x
        v = self.v
        if abs(x1 - v) > eps * (1.0 + CLAIM_TOL):
            return False
        floor = 2.0 * v * x1 - v * v + 2.0 * eps * abs(v - x1)
        return x2 >= floor - CLAIM_TOL * (1.0 + x1 * x1)

    def value(self, x: Point) -> float:
        return self.alpha1 * x[0] + self.alpha2 * x[1] + self.alpha0

    def describe(self) -> Dict:
        return {"figure": "angle", "v": self.v, "alpha": [self.alpha1, self.alpha2, self.alpha0]}


@dataclass
class TrolleybusFigure:
    side: str
    a0: float
    b0: float
    beta1: float
    beta2: float
    beta0: float
    cup: CupFamily
    kind = "trolleybus"

    @property
    def tag(self) -> str:
        return "tr" + self.side

    @property
    def lo(self) -> float:
        return self.a0

    @property
    def hi(self) -> float:
        return self.b0

    def claims(self, x: Point, eps: float) -> bool:
        u = u_tangent(self.side, x, eps)
        slack = CLAIM_TOL * (1.0 + abs(u))
        return self.a0 - slack <= u <= self.b0 + slack and not self.cup.contains(x, tol=-1e-13)

    def value(self, x: Point) -> float:
        return self.beta1 * x[0] + self.beta2 * x[1] + self.beta0

    def describe(self) -> Dict:
        return {"figure": self.tag, "a0": self.a0, "b0": self.b0, "ell": self.b0 - self.a0,
                "beta": [self.beta1, self.beta2, self.beta0]}


Figure = Union[TangentDomain, CupFigure, AngleFigure, TrolleybusFigure]


def angle_coefficients(v: float, m_r: float, m_l: float, f: BoundaryFunction, eps: float,
                       tol: float = 1e-7) -> Tuple[float, float, float]:
    """(alpha1, alpha2, alpha0) of the linear function on the angle with vertex v."""
    f1 = float(f.eval_f1(v))
    if abs(m_r + m_l - 2.0 * f1) > tol * (1.0 + abs(m_r) + abs(m_l)):
        raise ConstructionError(f"angle at {v}: m_R + m_L = {m_r + m_l:.12g} differs from 2 f'(v) = {2 * f1:.12g}")
    s, dm = m_r + m_l, m_l - m_r
    a2 = dm / (4.0 * eps)
    a1 = s / 2.0 - dm * v / (2.0 * eps)
    a0 = a2 * v * v - s * v / 2.0 + float(f.eval_f(v))
    return a1, a2, a0


def trolleybus_coefficients(a0: float, b0: float, f: BoundaryFunction,
                            tol: float = 1e-8) -> Tuple[float, float, float]:
    """(beta1, beta2, beta0) of the linear function over the chord [a0, b0]."""
    if not a0 < b0:
        raise ValueError("trolleybus needs a0 < b0")
    fa, fb = float(f.eval_f(a0)), float(f.eval_f(b0))
    da, db = float(f.eval_f1(a0)), float(f.eval_f1(b0))
    ell = b0 - a0
    resid = ell * (da + db) - 2.0 * (fb - fa)
    if abs(resid) > tol * (1.0 + abs(fa) + abs(fb)) * max(1.0, ell):
        raise ConstructionError(f"[{a0}, {b0}] does not solve the chord equation (residual {resid:.3g})")
    avg = (db - da) / ell
    b2 = avg / 2.0
    b1 = (b0 * da - a0 * db) / ell
    b0_ = (b0 * fa - a0 * fb) / ell + 0.5 * a0 * b0 * avg
    return b1, b2, b0_


@dataclass
class Foliation:
    figures: List[Figure]
    signature: str
    eps: float
    f: BoundaryFunction
    family: Optional[BalancedFamily] = None

    def locate(self, x) -> Figure:
        x = Point(float(x[0]), float(x[1]))
        loc = classify(x, self.eps)
        if loc is StripLocation.OUTSIDE:
            raise DispatchError(f"point {tuple(x)} is outside the strip")
        if loc is StripLocation.LOWER:
            for fig in self.figures:
                slack = CLAIM_TOL * (1.0 + abs(x.x1))
                if fig.lo - slack <= x.x1 <= fig.hi + slack:
                    return fig
        for fig in self.figures:
            if fig.kind == "cup" and fig.claims(x, self.eps):
                return fig
        for fig in self.figures:
            if fig.kind != "cup" and fig.claims(x, self.eps):
                return fig
        raise DispatchError(f"no figure claims {tuple(x)}")

    def evaluate(self, x) -> float:
        x = Point(float(x[0]), float(x[1]))
        if classify(x, self.eps) is StripLocation.LOWER:
            return float(self.f.eval_f(x.x1))
        return self.locate(x).value(x)

    def evaluate_many(self, pts: Sequence) -> np.ndarray:
        return np.array([self.evaluate(p) for p in pts])

    def tags(self) -> List[str]:
        return [fig.tag for fig in self.figures]

    def describe(self) -> Dict:
        return {"function": self.f.name, "params": list(self.f.params), "eps": self.eps,
                "signature": self.signature, "figures": [fig.describe() for fig in self.figures]}


def _at(v: float, end: float) -> bool:
    return abs(v - end) <= END_TOL * (1.0 + abs(v))


def _coeff(side: str, force: Force, f: BoundaryFunction, eps: float, lo: float, hi: float) -> TangentCoefficient:
    if is_infinite(force.source):
        anchor = FromInfinity()
    else:
        a, b = force.screen
        anchor = ScreenEnd(a, b)
    return TangentCoefficient(side, anchor, eps, f, u_range=(lo, hi))


def build_foliation(family: BalancedFamily, certify: bool = True) -> Foliation:
    """Tangent domains, cups, angles and trolleybuses laid out along the u-axis."""
    f, eps = family.f, family.eps
    forces, vs = family.forces, family.balance_points
    n = len(forces)
    tr = [None] * n
    for j, fo in enumerate(forces):
        if fo.cup is None:
            continue
        a, b = fo.screen
        left_end = j > 0 and _at(vs[j - 1], a)
        right_end = j < n - 1 and _at(vs[j], b)
        if left_end and right_end:
            raise ConstructionError(f"balance points sit at both ends of the screen of {fo.source!r}")
        tr[j] = "R" if left_end else ("L" if right_end else None)

    figures: List[Figure] = []

    def add_tangent(side, force, lo, hi):
        if hi > lo or (math.isinf(lo) and math.isinf(hi)):
            figures.append(TangentDomain(side, lo, hi, _coeff(side, force, f, eps, lo, hi)))

    def add_cup(j):
        fo = forces[j]
        figures.append(CupFigure(fo.cup))
        if tr[j] is not None:
            a0, b0 = fo.screen
            b1, b2, b0_ = trolleybus_coefficients(a0, b0, f)
            figures.append(TrolleybusFigure(tr[j], a0, b0, b1, b2, b0_, fo.cup))

    first = forces[0]
    if is_infinite(first.source) and first.source.sign > 0:
        add_tangent("L", first, -math.inf, math.inf)
    elif not is_infinite(first.source):
        add_tangent("L", first, -math.inf, first.screen[0])
        add_cup(0)
    for j in range(n - 1):
        left, right, v = forces[j], forces[j + 1], vs[j]
        lo = -math.inf if left.cup is None else left.screen[1]
        hi = math.inf if right.cup is None else right.screen[0]
        if tr[j] == "L":
            add_tangent("L", right, lo, hi)
        elif tr[j + 1] == "R":
            add_tangent("R", left, lo, hi)
        else:
            add_tangent("R", left, lo, v)
            m_r = figures[-1].coeff.value(v) if figures and figures[-1].kind == "tangent" else None
            l_coeff = _coeff("L", right, f, eps, v, hi)
            if m_r is None:
                m_r = _coeff("R", left, f, eps, lo, v).value(v)
            m_l = l_coeff.value(v)
            a1, a2, a0 = angle_coefficients(v, m_r, m_l, f, eps)
            figures.append(AngleFigure(v, a1, a2, a0, m_r, m_l, eps))
            if hi > v:
                figures.append(TangentDomain("L", v, hi, l_coeff))
        if right.cup is not None:
            add_cup(j + 1)
    last = forces[-1]
    if is_infinite(last.source) and last.source.sign < 0:
        add_tangent("R", last, -math.inf, math.inf)
    elif not is_infinite(last.source):
        add_tangent("R", last, last.screen[1], math.inf)

    if certify:
        for fig in figures:
            if fig.kind == "tangent" and not sign_certificate(fig.coeff):
                raise ConstructionError(
                    f"{fig.side} tangents on u in [{fig.lo:.6g}, {fig.hi:.6g}] fail the concavity sign test")
    signature = "".join(fig.side for fig in figures if fig.kind == "tangent")
    return Foliation(figures, signature, eps, f, family)


def foliate(f: BoundaryFunction, eps: float, order: str = "LR", certify: bool = True) -> Foliation:
    """Balance the forces of f at width eps and assemble the candidate."""
    return build_foliation(balance_all(f, eps, order=order), certify=certify)


def locate(x: Point, fol: Foliation) -> Figure:
    return fol.locate(x)


def evaluate(x: Point, fol: Foliation, f: Optional[BoundaryFunction] = None) -> float:
    return fol.evaluate(x)
