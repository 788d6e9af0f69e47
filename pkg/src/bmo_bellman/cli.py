"""Command-line front end: bmo-bellman {foliate,eval,optimizer,verify,examples,plot}."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import catalog, verify
from .boundary import BoundaryFunction
from .candidate import Foliation, foliate
from .errors import BellmanError, ConfigError, VerificationError
from .geometry import classify, StripLocation
from .optimizers import bmo_norm, build_optimizer, moments
from .regression import run_examples


@dataclass
class RunConfig:
    function: BoundaryFunction
    eps: float
    order: str = "LR"
    x1_range: Optional[Tuple[float, float]] = None
    n1: int = 41
    n2: int = 11
    seed: int = 0
    tolerances: Dict[str, float] = field(default_factory=dict)
    sizes: Dict[str, Dict] = field(default_factory=dict)


def _function(text) -> BoundaryFunction:
    if isinstance(text, str):
        return catalog.parse_builtin(text)
    if isinstance(text, dict):
        return catalog.from_config(text)
    raise ConfigError("'function' must be a built-in name or a piecewise-polynomial section")


def load_run_config(args) -> RunConfig:
    """Merge the JSON config (if any) with command-line overrides."""
    raw: Dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if args.function:
        raw["function"] = args.function
    if args.eps is not None:
        raw["eps"] = args.eps
    if "function" not in raw or "eps" not in raw:
        raise ConfigError("need a boundary function and eps (--config, or --function and --eps)")
    f = _function(raw["function"])
    if "eps0" in raw:
        f = dataclasses.replace(f, eps0=float(raw["eps0"]))
    try:
        eps = float(raw["eps"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad eps: {raw['eps']!r}") from exc
    grid = raw.get("grid", {})
    cfg = RunConfig(f, eps, order=raw.get("order", "LR"),
                    x1_range=tuple(grid["x1"]) if "x1" in grid else None,
                    n1=int(grid.get("n1", 41)), n2=int(grid.get("n2", 11)),
                    seed=int(raw.get("seed", 0)), tolerances=dict(raw.get("tolerances", {})),
                    sizes=dict(raw.get("verify", {})))
    if args.seed is not None:
        cfg.seed = args.seed
    for item in args.tol_override or []:
        key, sep, val = item.partition("=")
        if not sep or key not in verify.TOLERANCES:
            raise ConfigError(f"bad --tol-override {item!r}; keys: {', '.join(verify.TOLERANCES)}")
        try:
            cfg.tolerances[key] = float(val)
        except ValueError as exc:
            raise ConfigError(f"bad tolerance value in {item!r}") from exc
    if cfg.n1 < 2 or cfg.n2 < 2:
        raise ConfigError("grid resolutions must be at least 2")
    if cfg.order not in ("LR", "RL"):
        raise ConfigError("order must be 'LR' or 'RL'")
    cfg.function.check_eps(cfg.eps)
    return cfg


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _build(cfg: RunConfig, trace: bool) -> Foliation:
    fol = foliate(cfg.function, cfg.eps, order=cfg.order)
    if trace and fol.family is not None:
        for ev in fol.family.trace:
            print("trace:", json.dumps(ev), file=sys.stderr)
    return fol


def cmd_foliate(cfg: RunConfig, args) -> int:
    fol = _build(cfg, args.trace)
    for fig in fol.figures:
        d = fig.describe()
        rest = ", ".join(f"{k}={v}" for k, v in d.items() if k != "figure")
        print(f"{d['figure']:<6} {rest}")
    print(f"signature: {fol.signature}")
    if args.out:
        _emit(json.dumps(fol.describe(), indent=2) + "\n", args.out)
    return 0


def _x1_range(cfg: RunConfig, fol: Foliation) -> Tuple[float, float]:
    return cfg.x1_range if cfg.x1_range is not None else verify.sample_span(fol, pad=2.0)


def cmd_eval(cfg: RunConfig, args) -> int:
    fol = _build(cfg, args.trace)
    lo, hi = _x1_range(cfg, fol)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x1", "x2", "B", "figure"])
    for x1 in np.linspace(lo, hi, cfg.n1):
        x1 = float(x1)
        for frac in np.linspace(0.0, 1.0, cfg.n2):
            x = (x1, x1 * x1 + float(frac) * cfg.eps ** 2)
            w.writerow([repr(x[0]), repr(x[1]), repr(float(fol.evaluate(x))), fol.locate(x).tag])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_optimizer(cfg: RunConfig, args) -> int:
    if args.x1 is None or args.x2 is None:
        raise ConfigError("optimizer needs --x1 and --x2")
    fol = _build(cfg, args.trace)
    x = (args.x1, args.x2)
    if classify(x, cfg.eps) is StripLocation.OUTSIDE:
        raise ConfigError(f"point {x} is outside the strip")
    phi = build_optimizer(x, fol)
    m = moments(phi, cfg.function)
    doc = {"point": list(x), "figure": fol.locate(x).tag, "B": fol.evaluate(x), "pieces": phi.describe(),
           "moments": {"m1": m.m1, "m2": m.m2, "mf": m.mf}, "bmo_norm": bmo_norm(phi), "eps": cfg.eps}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def cmd_verify(cfg: RunConfig, args) -> int:
    fol = _build(cfg, args.trace)
    reports = verify.run_all(fol, seed=cfg.seed, tolerances=cfg.tolerances, **cfg.sizes)
    for r in reports:
        print(r.line())
    if args.out:
        if args.out.endswith(".csv"):
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["suite", "samples", "max_violation", "tolerance", "pass", "worst_x1", "worst_x2", "seed"])
            for r in reports:
                wp = r.worst_point or (math.nan, math.nan)
                w.writerow([r.suite, r.samples, repr(r.max_violation), r.tolerance, r.passed,
                            repr(float(wp[0])), repr(float(wp[1])), r.seed])
            _emit(buf.getvalue(), args.out)
        else:
            _emit(json.dumps([r.as_dict() for r in reports], indent=2) + "\n", args.out)
    if not all(r.passed for r in reports):
        raise VerificationError("verification failed: " + ", ".join(r.suite for r in reports if not r.passed))
    return 0


def cmd_examples(cfg: Optional[RunConfig], args) -> int:
    results = run_examples()
    for r in results:
        print(r.line())
    if args.out:
        _emit(json.dumps([dataclasses.asdict(r) for r in results], indent=2) + "\n", args.out)
    if not all(r.passed for r in results):
        raise VerificationError("example regression failed")
    return 0


def polylines(fol: Foliation, lo: float, hi: float, per_figure: int = 12) -> List[Tuple[str, List]]:
    """Extremal segments, chords and strip boundaries as (label, points) pairs inside [lo, hi]."""
    eps = fol.eps
    out = []
    xs = np.linspace(lo, hi, 200)
    out.append(("lower", [(float(t), float(t * t)) for t in xs]))
    out.append(("upper", [(float(t), float(t * t + eps * eps)) for t in xs]))

    def tangent(side, u):
        w = u - eps if side == "R" else u + eps
        return [(u, u * u), (w, w * w + eps * eps)]

    for fig in fol.figures:
        if fig.kind in ("tangent", "trolleybus"):
            a, b = max(fig.lo, lo + eps), min(fig.hi, hi - eps)
            if a > b:
                continue
            for u in np.linspace(a, b, per_figure):
                out.append((fig.tag, tangent(fig.side, float(u))))
            if fig.kind == "trolleybus":
                out.append((fig.tag, [(fig.a0, fig.a0 ** 2), (fig.b0, fig.b0 ** 2)]))
        elif fig.kind == "cup":
            for ell in np.linspace(0.0, fig.cup.ell_max, per_figure)[1:]:
                a, b = fig.cup.chord(float(ell))
                out.append(("cup", [(a, a * a), (b, b * b)]))
        elif fig.kind == "angle":
            out.append(("angle", tangent("R", fig.v)))
            out.append(("angle", tangent("L", fig.v)))
    for label, pts in out:
        for p in pts:
            # closed strip, up to rounding
            h = p[1] - p[0] ** 2
            assert -1e-9 * (1 + p[0] ** 2) <= h <= eps * eps + 1e-9 * (1 + p[0] ** 2), (label, p)
    return out


_COLORS = {"lower": "#000000", "upper": "#000000", "L": "#1f77b4", "R": "#d62728", "cup": "#2ca02c",
           "angle": "#9467bd", "trL": "#ff7f0e", "trR": "#8c564b"}


def render_svg(lines, width: int = 900, height: int = 600) -> str:
    pts = [p for _, ps in lines for p in ps]
    x_lo, x_hi = min(p[0] for p in pts), max(p[0] for p in pts)
    y_lo, y_hi = min(p[1] for p in pts), max(p[1] for p in pts)
    sx = (width - 40) / max(x_hi - x_lo, 1e-12)
    sy = (height - 40) / max(y_hi - y_lo, 1e-12)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             '<rect width="100%" height="100%" fill="white"/>']
    for label, ps in lines:
        coords = " ".join(f"{20 + (x - x_lo) * sx:.2f},{height - 20 - (y - y_lo) * sy:.2f}" for x, y in ps)
        parts.append(f'<polyline fill="none" stroke="{_COLORS.get(label, "#777")}" stroke-width="1" '
                     f'points="{coords}"><title>{label}</title></polyline>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_plot(cfg: RunConfig, args) -> int:
    fol = _build(cfg, args.trace)
    lo, hi = _x1_range(cfg, fol)
    lines = polylines(fol, lo, hi)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["polyline", "figure", "x1", "x2"])
    for k, (label, ps) in enumerate(lines):
        for x1, x2 in ps:
            w.writerow([k, label, repr(float(x1)), repr(float(x2))])
    _emit(buf.getvalue(), args.out)
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(render_svg(lines))
    return 0


COMMANDS = {"foliate": cmd_foliate, "eval": cmd_eval, "optimizer": cmd_optimizer, "verify": cmd_verify,
            "examples": cmd_examples, "plot": cmd_plot}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bmo-bellman",
                                description="Bellman function of an integral functional on BMO: "
                                            "foliation, evaluation, optimizers and checks.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON run configuration")
        s.add_argument("--function", help="built-in boundary function, e.g. 'quintic(1.5)'")
        s.add_argument("--eps", type=float, help="strip width")
        s.add_argument("--out", help="output file (stdout when omitted)")
        s.add_argument("--trace", action="store_true", help="print the balancing trace to stderr")
        s.add_argument("--seed", type=int)
        s.add_argument("--x1", type=float)
        s.add_argument("--x2", type=float)
        s.add_argument("--tol-override", action="append", metavar="KEY=VAL")
        if name == "plot":
            s.add_argument("--svg", help="also write an SVG rendering here")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = None if args.command == "examples" else load_run_config(args)
        return COMMANDS[args.command](cfg, args)
    except BellmanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
