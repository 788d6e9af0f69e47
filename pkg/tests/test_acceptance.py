"""The ten acceptance criteria, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line; the lines are printed together in the
terminal summary (and directly when this file is run as a script).
"""
import math
import time

import numpy as np
import pytest

from bmo_bellman import foliate, parse_builtin, run_all
from bmo_bellman.cups import grow_cup
from bmo_bellman.geometry import u_tangent
from bmo_bellman.verify import check_lower_bound

from conftest import ACCEPTANCE_LINES

# every built-in with a three-point eps sweep; the quintic sweep crosses all three regimes
SWEEP = {
    "exp+": (0.3, 0.5, 0.8),
    "exp-": (0.3, 0.5, 0.8),
    "cubic+": (0.5, 1.0, 2.0),
    "cubic-": (0.5, 1.0, 2.0),
    "power(3)": (0.5, 1.0, 2.0),
    "quartic+(0.5)": (0.3, 1.0, 2.0),
    "quartic-(0.5)": (0.3, 1.0, 2.0),
    "quintic(1)": (1 / math.sqrt(0.9), 1 / math.sqrt(1.2), 1 / math.sqrt(1.5)),
    "two-exp(0.5)": (0.3, 0.5, 0.7),
    "square-linear": (0.3, 0.8, 1.5),
}


def record(number, title, passed, detail):
    line = f"criterion {number:>2}  {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


def test_01_exponential():
    t0 = time.perf_counter()
    eps = 0.5
    fol = foliate(parse_builtin("exp+"), eps)
    err = max(abs(fol.evaluate((x1, x1 * x1 + eps * eps)) - math.exp(x1 - eps) / (1 - eps))
              / (math.exp(x1 - eps) / (1 - eps)) for x1 in (-2.0, 0.0, 3.0))
    dt = time.perf_counter() - t0
    record(1, "exponential upper boundary", err <= 1e-8 and dt < 1.0, f"rel err {err:.2e}, {dt:.2f}s")


def test_02_cubic():
    t0 = time.perf_counter()
    f = parse_builtin("cubic+")
    err = 0.0
    for eps in (0.5, 1.0, 2.0):
        fol = foliate(f, eps)
        for x1 in np.linspace(-3, 3, 50):
            for frac in np.linspace(0, 1, 20):
                x = (float(x1), float(x1 * x1 + frac * eps * eps))
                u = u_tangent("L", x, eps)
                exact = (6 * eps ** 2 + 3 * u * u + 6 * eps * u) * (x[0] - u) + u ** 3
                err = max(err, rel(fol.evaluate(x), exact))
    dt = time.perf_counter() - t0
    record(2, "cubic 50x20 grid", err <= 1e-8 and dt < 5.0, f"rel err {err:.2e}, {dt:.2f}s")


def test_03_quartic_cup():
    err_sym = err_val = 0.0
    for c in (0.0, 0.5):
        f = parse_builtin(f"quartic-({c})")
        for eps in (0.5, 1.0):
            cup = grow_cup(c, 2 * eps, f, eps)
            err_sym = max(err_sym, float(np.max(np.abs(2 * cup.avals + cup.ells - 2 * c))))
            fol = foliate(f, eps)
            for sig in (0.1 * eps, 0.5 * eps, eps):
                a, b = c - sig, c + sig
                for t in np.linspace(0, 1, 11):
                    x = (t * a + (1 - t) * b, t * a * a + (1 - t) * b * b)
                    err_val = max(err_val, abs(fol.evaluate(x) + sig ** 4))
    record(3, "quartic cup symmetry and chord values", err_sym <= 1e-10 and err_val <= 1e-8,
           f"|a+b-2c| {err_sym:.2e}, value err {err_val:.2e}")


def test_04_quartic_angle():
    err = 0.0
    for a in (-1.0, 0.0, 2.0):
        for eps in (0.3, 1.0):
            fol = foliate(parse_builtin(f"quartic+({a})"), eps)
            assert fol.tags() == ["R", "angle", "L"]
            err = max(err, abs(fol.family.balance_points[0] - a))
    record(4, "quartic angle vertex", err <= 1e-8, f"max |v - a| {err:.2e}")


def test_05_quintic_regimes():
    d = 1.0
    f = parse_builtin(f"quintic({d})")
    want = {0.9: "L", 1.2: "LL", 1.5: "LRL"}
    got, slowest = {}, 0.0
    for ratio in want:
        t0 = time.perf_counter()
        got[ratio] = foliate(f, math.sqrt(d / ratio)).signature
        slowest = max(slowest, time.perf_counter() - t0)
    lo, hi = math.sqrt(d / 1.5), math.sqrt(d / 1.2)
    while hi - lo > 1e-11:
        mid = 0.5 * (lo + hi)
        if foliate(f, mid).signature == "LRL":
            lo = mid
        else:
            hi = mid
    thr = d / (0.5 * (lo + hi)) ** 2
    err = abs(thr - 1614 / 1225)
    ok = got == want and err <= 1e-6 and slowest < 10.0
    record(5, "quintic regimes and threshold", ok,
           f"signatures {got}, threshold {thr:.10f} (err {err:.1e}), slowest run {slowest:.2f}s")


def two_exp_vertex(al, eps):
    if al == eps:
        return -eps * (eps + 1) / (2 * (1 - eps))
    return al * eps / (al - eps) * math.log(2 * al ** 2 * (1 - eps) / ((al + eps) * (2 * al - al * eps - eps)))


def test_06_two_exponential():
    err, mismatches = 0.0, []
    for eps in (0.3, 0.5, 0.7):
        thr = eps / (2 - eps)
        below = foliate(parse_builtin(f"two-exp({thr - 1e-3})"), eps).signature
        if below != "L":
            mismatches.append((eps, "below", below))
        for al in (thr + 1e-3, 0.5 * (thr + eps), eps, 2.0):
            fol = foliate(parse_builtin(f"two-exp({al!r})"), eps)
            if fol.signature != "RL":
                mismatches.append((eps, al, fol.signature))
                continue
            err = max(err, abs(fol.family.balance_points[0] - two_exp_vertex(al, eps)))
    record(6, "two-exponential regimes and vertex", not mismatches and err <= 1e-7,
           f"vertex err {err:.2e}, regime mismatches {mismatches}")


def test_07_square_linear():
    f = parse_builtin("square-linear")
    err = 0.0
    for eps in (0.5, 0.8, 1.5):
        v = foliate(f, eps).family.balance_points[0]
        err = max(err, abs(v / eps * math.exp(v / eps) - (eps - 0.5)))
    for eps in (0.1, 0.3, 0.45):
        v = foliate(f, eps).family.balance_points[0]
        err = max(err, abs(math.exp(v / eps) * (2 * eps ** 2 + eps) - 4 * eps ** 2 - 2 * v * v))
    record(7, "square-linear vertex equations", err <= 1e-9, f"max residual {err:.2e}")


def test_08_power():
    err = max(abs(foliate(parse_builtin("power(3)"), eps).family.balance_points[0]) for eps in (0.5, 1.0, 2.0))
    record(8, "power vertex at the origin", err <= 1e-9, f"max |v| {err:.2e}")


def test_09_property_suites():
    t0 = time.perf_counter()
    failures, worst = [], {}
    for name, eps_list in SWEEP.items():
        f = parse_builtin(name)
        for eps in eps_list:
            fol = foliate(f, eps)
            for r in run_all(fol, suites=("boundary", "concavity", "monge_ampere", "optimizers")):
                worst[r.suite] = max(worst.get(r.suite, 0.0), r.max_violation / r.tolerance)
                if not r.passed:
                    failures.append(f"{name} eps={eps:.4g} {r.line()}")
    dt = time.perf_counter() - t0
    summary = ", ".join(f"{k} {v:.2f}" for k, v in worst.items())
    record(9, "property suites on every built-in", not failures and dt < 120.0,
           f"worst violation/tolerance: {summary}; {dt:.1f}s; failures {failures}")


def test_10_lower_bound_oracle():
    excess, gap, failures = -math.inf, 0.0, []
    for name, eps_list in SWEEP.items():
        fol = foliate(parse_builtin(name), eps_list[1])
        r = check_lower_bound(fol, n=50, n_tight=10)
        excess = max(excess, r.details["largest_excess"])
        gap = max(gap, r.details["tight_gap"])
        if not r.passed or r.details["tight_gap"] >= 1e-4:
            failures.append(name)
    record(10, "random lower bound one-sided and tight", not failures,
           f"largest excess {excess:.2e} (tol 1e-6), tight gap {gap:.2e} (tol 1e-4), failures {failures}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
