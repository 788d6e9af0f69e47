"""Closed-form regression suite: each case rebuilds a foliation and compares it with a known formula."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import catalog
from .candidate import foliate
from .cups import grow_cup
from .geometry import u_tangent


@dataclass
class CaseResult:
    name: str
    passed: bool
    error: float
    tolerance: float
    seconds: float
    note: str = ""

    def line(self) -> str:
        return (f"{self.name:<22} {'PASS' if self.passed else 'FAIL'}  error={self.error:.3e} "
                f"tol={self.tolerance:.0e}  {self.seconds:6.2f}s  {self.note}")


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


def exponential() -> tuple:
    eps = 0.5
    fol = foliate(catalog.exp_plus(), eps)
    err = 0.0
    for x1 in (-2.0, 0.0, 3.0):
        exact = math.exp(x1) * math.exp(-eps) / (1 - eps)
        err = max(err, abs(fol.evaluate((x1, x1 * x1 + eps * eps)) - exact) / exact)
    return err, 1e-8, f"signature {fol.signature}"


def cubic() -> tuple:
    f = catalog.cubic(1)
    err = 0.0
    for eps in (0.5, 1.0, 2.0):
        fol = foliate(f, eps)
        for x1 in np.linspace(-3, 3, 50):
            for frac in np.linspace(0, 1, 20):
                x = (x1, x1 * x1 + frac * eps * eps)
                u = u_tangent("L", x, eps)
                exact = (6 * eps ** 2 + 3 * u * u + 6 * eps * u) * (x1 - u) + u ** 3
                err = max(err, _rel(fol.evaluate(x), exact))
    return err, 1e-8, "eps 0.5, 1, 2 on a 50x20 grid"


def quartic_cup() -> tuple:
    err_sym = err_val = 0.0
    for c in (0.0, 0.7):
        f = catalog.quartic_minus(c)
        eps = 1.0
        cup = grow_cup(c, 2 * eps, f, eps)
        err_sym = max(err_sym, float(np.max(np.abs(2 * np.asarray(cup.avals) + np.asarray(cup.ells) - 2 * c))))
        fol = foliate(f, eps)
        for sig in (0.1 * eps, 0.5 * eps, eps):
            a, b = c - sig, c + sig
            for t in (0.0, 0.25, 0.5, 0.9):
                x = (t * a + (1 - t) * b, t * a * a + (1 - t) * b * b)
                err_val = max(err_val, abs(fol.evaluate(x) + sig ** 4))
    # two tolerances, so report the error as a fraction of its own tolerance
    return max(err_sym / 1e-10, err_val / 1e-8), 1.0, f"a+b-2c {err_sym:.1e}, chord values {err_val:.1e}"


def quartic_angle() -> tuple:
    err = 0.0
    for a in (-1.0, 0.0, 2.0):
        for eps in (0.3, 1.0):
            fol = foliate(catalog.quartic_plus(a), eps)
            err = max(err, abs(fol.family.balance_points[0] - a))
    return err, 1e-8, "vertex at (a, a^2)"


def quintic() -> tuple:
    d = 1.0
    f = catalog.quintic(d)
    want = {0.9: "L", 1.2: "LL", 1.5: "LRL"}
    got = {r: foliate(f, math.sqrt(d / r)).signature for r in want}
    lo, hi = math.sqrt(d / 1.5), math.sqrt(d / 1.2)
    while hi - lo > 1e-11:
        mid = 0.5 * (lo + hi)
        if foliate(f, mid).signature == "LRL":
            lo = mid
        else:
            hi = mid
    ratio = d / (0.5 * (lo + hi)) ** 2
    err = abs(ratio - 1614 / 1225)
    if got != want:
        err = math.inf
    return err, 1e-6, f"signatures {got}, threshold {ratio:.10f}"


def _two_exp_vertex(al: float, eps: float) -> float:
    if al == eps:
        return -eps * (eps + 1) / (2 * (1 - eps))
    return al * eps / (al - eps) * math.log(2 * al ** 2 * (1 - eps) / ((al + eps) * (2 * al - al * eps - eps)))


def two_exponential() -> tuple:
    err = 0.0
    bad = []
    for eps in (0.3, 0.5, 0.7):
        thr = eps / (2 - eps)
        if foliate(catalog.two_exp(thr - 1e-3), eps).signature != "L":
            bad.append((eps, "below"))
        for al in (thr + 1e-3, 0.5 * (thr + eps), eps, 2.0):
            fol = foliate(catalog.two_exp(al), eps)
            if fol.signature != "RL":
                bad.append((eps, al))
                continue
            err = max(err, abs(fol.family.balance_points[0] - _two_exp_vertex(al, eps)))
    return (math.inf if bad else err), 1e-7, f"regime mismatches {bad}" if bad else "regimes match"


def square_linear() -> tuple:
    f = catalog.square_linear()
    err = 0.0
    for eps in (0.5, 0.8, 1.5):
        v = foliate(f, eps).family.balance_points[0]
        err = max(err, abs(v / eps * math.exp(v / eps) - (eps - 0.5)))
    for eps in (0.1, 0.3, 0.45):
        v = foliate(f, eps).family.balance_points[0]
        err = max(err, abs(math.exp(v / eps) * (2 * eps ** 2 + eps) - 4 * eps ** 2 - 2 * v * v))
    return err, 1e-9, "vertex equations"


def power() -> tuple:
    err = 0.0
    for eps in (0.5, 1.0, 2.0):
        err = max(err, abs(foliate(catalog.power(3), eps).family.balance_points[0]))
    return err, 1e-9, "vertex at the origin"


CASES: List[Callable] = [exponential, cubic, quartic_cup, quartic_angle, quintic, two_exponential,
                         square_linear, power]


def run_examples(names=None) -> List[CaseResult]:
    out = []
    for case in CASES:
        if names and case.__name__ not in names:
            continue
        t = time.perf_counter()
        try:
            err, tol, note = case()
        except Exception as exc:  # report and keep going
            err, tol, note = math.inf, 0.0, f"{type(exc).__name__}: {exc}"
        out.append(CaseResult(case.__name__, bool(err <= tol), float(err), tol, time.perf_counter() - t, note))
    return out
