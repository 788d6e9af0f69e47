"""Built-in boundary functions and a loader for piecewise-polynomial f'''."""
from __future__ import annotations

import json
import math
import re
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from .boundary import MINUS_INF, PLUS_INF, BoundaryFunction, SignPattern, detect_pattern
from .errors import ConfigError


def _vec(fn: Callable) -> Callable:
    """Evaluate on scalars or arrays; scalars come back as floats."""
    def wrapped(t):
        arr = np.asarray(t, dtype=float)
        out = fn(arr)
        return float(out) if arr.ndim == 0 else out
    return wrapped


def _make(name, params, f, f1, f2, f3, pattern, eps0=math.inf, breakpoints=()):
    return BoundaryFunction(_vec(f), _vec(f1), _vec(f2), _vec(f3), eps0, pattern,
                            tuple(breakpoints), name, tuple(params))


def exp_plus() -> BoundaryFunction:
    return _make("exp+", (), np.exp, np.exp, np.exp, np.exp, SignPattern((PLUS_INF,)), eps0=1.0)


def exp_minus() -> BoundaryFunction:
    g = lambda t: np.exp(-t)
    return _make("exp-", (), g, lambda t: -np.exp(-t), g, lambda t: -np.exp(-t),
                 SignPattern((MINUS_INF,)), eps0=1.0)


def cubic(sign: int = 1) -> BoundaryFunction:
    s = 1.0 if sign > 0 else -1.0
    return _make("cubic+" if s > 0 else "cubic-", (), lambda t: s * t ** 3, lambda t: 3 * s * t ** 2,
                 lambda t: 6 * s * t, lambda t: 6 * s + 0 * t, SignPattern((PLUS_INF if s > 0 else MINUS_INF,)))


def power(p: float) -> BoundaryFunction:
    """|t|^p; restricted to p >= 3 so that f''' stays bounded near 0."""
    if not p >= 3:
        raise ConfigError(f"power needs p >= 3, got {p}")
    k3 = p * (p - 1) * (p - 2)
    return _make("power", (p,), lambda t: np.abs(t) ** p,
                 lambda t: p * np.sign(t) * np.abs(t) ** (p - 1),
                 lambda t: p * (p - 1) * np.abs(t) ** (p - 2),
                 lambda t: k3 * np.sign(t) * np.abs(t) ** (p - 3),
                 SignPattern((MINUS_INF, PLUS_INF), (0.0,)), breakpoints=(0.0,))


def quartic_plus(a: float) -> BoundaryFunction:
    """t^4/24 - a t^3/6, with f''' = t - a."""
    return _make("quartic+", (a,), lambda t: t ** 4 / 24 - a * t ** 3 / 6, lambda t: t ** 3 / 6 - a * t ** 2 / 2,
                 lambda t: t ** 2 / 2 - a * t, lambda t: t - a, SignPattern((MINUS_INF, PLUS_INF), (a,)))


def quartic_minus(c: float) -> BoundaryFunction:
    """-(t - c)^4, one cup around c."""
    return _make("quartic-", (c,), lambda t: -(t - c) ** 4, lambda t: -4 * (t - c) ** 3,
                 lambda t: -12 * (t - c) ** 2, lambda t: -24 * (t - c), SignPattern((c,)))


def quintic(d: float) -> BoundaryFunction:
    """t^5/60 - d t^3/6, with f''' = t^2 - d (d > 0)."""
    if not d > 0:
        raise ConfigError(f"quintic needs d > 0, got {d}")
    r = math.sqrt(d)
    return _make("quintic", (d,), lambda t: t ** 5 / 60 - d * t ** 3 / 6, lambda t: t ** 4 / 12 - d * t ** 2 / 2,
                 lambda t: t ** 3 / 3 - d * t, lambda t: t ** 2 - d, SignPattern((-r, PLUS_INF), (r,)))


def two_exp(alpha: float) -> BoundaryFunction:
    """f''' = e^t for t >= 0 and -e^{t/alpha} for t < 0, normalized to be C^3."""
    if not alpha > 0:
        raise ConfigError(f"two-exp needs alpha > 0, got {alpha}")
    al = alpha

    def neg(t):
        return np.exp(np.minimum(t, 0.0) / al)

    def pos(t):
        return np.exp(np.maximum(t, 0.0))

    f = lambda t: np.where(t >= 0, pos(t), -al ** 3 * neg(t) + t * t * (1 + al) / 2 + t * (1 + al * al) + 1 + al ** 3)
    f1 = lambda t: np.where(t >= 0, pos(t), -al ** 2 * neg(t) + t * (1 + al) + 1 + al * al)
    f2 = lambda t: np.where(t >= 0, pos(t), -al * neg(t) + 1 + al)
    f3 = lambda t: np.where(t >= 0, pos(t), -neg(t))
    return _make("two-exp", (alpha,), f, f1, f2, f3, SignPattern((MINUS_INF, PLUS_INF), (0.0,)),
                 eps0=1.0, breakpoints=(0.0,))


def square_linear() -> BoundaryFunction:
    """f''' = -t^2 for t <= 0 and t for t > 0 (f, f', f'' vanish at 0)."""
    neg, pos = (lambda t: t <= 0), (lambda t: t > 0)
    f = lambda t: np.where(neg(t), -t ** 5 / 60, t ** 4 / 24)
    f1 = lambda t: np.where(neg(t), -t ** 4 / 12, t ** 3 / 6)
    f2 = lambda t: np.where(neg(t), -t ** 3 / 3, t ** 2 / 2)
    f3 = lambda t: np.where(neg(t), -t ** 2, t)
    return _make("square-linear", (), f, f1, f2, f3, SignPattern((MINUS_INF, PLUS_INF), (0.0,)),
                 breakpoints=(0.0,))


BUILTINS: Dict[str, Tuple[Callable, int]] = {
    "exp+": (exp_plus, 0),
    "exp-": (exp_minus, 0),
    "cubic+": (lambda: cubic(1), 0),
    "cubic-": (lambda: cubic(-1), 0),
    "power": (power, 1),
    "quartic+": (quartic_plus, 1),
    "quartic-": (quartic_minus, 1),
    "quintic": (quintic, 1),
    "two-exp": (two_exp, 1),
    "square-linear": (square_linear, 0),
}

_SPEC = re.compile(r"^\s*([a-z0-9+\-]+?)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def parse_builtin(text: str) -> BoundaryFunction:
    """'quintic(1.5)', 'exp+', 'power(3)' -> BoundaryFunction."""
    m = _SPEC.match(text)
    if not m or m.group(1) not in BUILTINS:
        raise ConfigError(f"unknown boundary function {text!r}; known: {', '.join(sorted(BUILTINS))}")
    name, arg = m.group(1), m.group(2)
    ctor, nargs = BUILTINS[name]
    args = [] if not arg else [a.strip() for a in arg.split(",")]
    if len(args) != nargs:
        raise ConfigError(f"{name} takes {nargs} parameter(s), got {len(args)}")
    try:
        return ctor(*[float(a) for a in args])
    except ValueError as exc:
        raise ConfigError(f"bad parameter in {text!r}: {exc}") from exc


def _pieces_eval(edges: Sequence[float], polys: Sequence[Polynomial]) -> Callable:
    inner = np.asarray(edges[1:-1], dtype=float)

    def fn(t):
        idx = np.searchsorted(inner, t, side="right")
        out = np.zeros_like(t, dtype=float)
        for k, p in enumerate(polys):
            mask = idx == k
            if np.any(mask):
                out = np.where(mask, p(t), out)
        return out
    return fn


def piecewise_polynomial(edges: Sequence[float], coeffs: Sequence[Sequence[float]],
                         anchor: Tuple[float, float, float] = (0.0, 0.0, 0.0),
                         name: str = "piecewise") -> BoundaryFunction:
    """f from a piecewise-polynomial f''' (coefficients in increasing degree).

    `edges` runs from -inf to +inf; f, f', f'' are continued continuously
    from their values `anchor` = (f(0), f'(0), f''(0)).
    """
    edges = [float(e) for e in edges]
    if len(edges) != len(coeffs) + 1 or edges[0] != -math.inf or edges[-1] != math.inf:
        raise ConfigError("edges must run from -inf to +inf with one more entry than pieces")
    if any(not a < b for a, b in zip(edges, edges[1:])):
        raise ConfigError("edges must be increasing")
    p3 = [Polynomial(c) for c in coeffs]
    n = len(p3)
    home = int(np.searchsorted(np.asarray(edges[1:-1]), 0.0, side="right"))
    p2: List[Optional[Polynomial]] = [None] * n
    p1: List[Optional[Polynomial]] = [None] * n
    p0: List[Optional[Polynomial]] = [None] * n

    def settle(k, x, v2, v1, v0):
        p2[k] = p3[k].integ(lbnd=x, k=v2)
        p1[k] = p2[k].integ(lbnd=x, k=v1)
        p0[k] = p1[k].integ(lbnd=x, k=v0)

    f0, f1, f2 = anchor
    settle(home, 0.0, f2, f1, f0)
    for k in range(home + 1, n):
        x = edges[k]
        settle(k, x, p2[k - 1](x), p1[k - 1](x), p0[k - 1](x))
    for k in range(home - 1, -1, -1):
        x = edges[k + 1]
        settle(k, x, p2[k + 1](x), p1[k + 1](x), p0[k + 1](x))
    bps = tuple(edges[1:-1])
    fun = BoundaryFunction(_vec(_pieces_eval(edges, p0)), _vec(_pieces_eval(edges, p1)),
                           _vec(_pieces_eval(edges, p2)), _vec(_pieces_eval(edges, p3)),
                           math.inf, None, bps, name, ())
    return fun


def load_config(path: str) -> BoundaryFunction:
    """Boundary function from a JSON file.

    {"builtin": "quintic(1.5)"} or
    {"edges": [null, 0, null], "f3": [[...], [...]], "anchor": [f0, f1, f2],
     "search_box": [-10, 10]}; null edges mean -inf / +inf.
    """
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return from_config(cfg)


def from_config(cfg: dict) -> BoundaryFunction:
    if "builtin" in cfg:
        return parse_builtin(cfg["builtin"])
    try:
        raw = cfg["edges"]
        edges = [(-math.inf if k == 0 else math.inf) if e is None else float(e) for k, e in enumerate(raw)]
        fun = piecewise_polynomial(edges, cfg["f3"], tuple(cfg.get("anchor", (0.0, 0.0, 0.0))),
                                   cfg.get("name", "piecewise"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed piecewise config: {exc}") from exc
    box = tuple(cfg.get("search_box", (-20.0, 20.0)))
    pattern = detect_pattern(fun.eval_f3, box, expected_n=cfg.get("n"))
    return fun.with_pattern(pattern)
