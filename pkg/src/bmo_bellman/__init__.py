"""Exact Bellman function B_eps(x; f) for integral functionals on BMO, built by balancing forces."""
from .boundary import BoundaryFunction, SignPattern, AffineTransform, affine_pushforward
from .candidate import Foliation, foliate, locate, evaluate
from .catalog import parse_builtin, piecewise_polynomial, load_config
from .cups import grow_cup
from .errors import (BellmanError, ConfigError, ClassGateError, ConstructionError, VerificationError)
from .forces import balance_all
from .geometry import Point, classify
from .optimizers import TestFunction, build_optimizer, moments, bmo_norm, truncate
from .verify import Report, check_boundary, check_concavity, check_monge_ampere, lower_bound_search, run_all

__all__ = [
    "BoundaryFunction", "SignPattern", "AffineTransform", "affine_pushforward",
    "Foliation", "foliate", "locate", "evaluate",
    "parse_builtin", "piecewise_polynomial", "load_config", "grow_cup",
    "BellmanError", "ConfigError", "ClassGateError", "ConstructionError", "VerificationError",
    "balance_all", "Point", "classify",
    "TestFunction", "build_optimizer", "moments", "bmo_norm", "truncate",
    "Report", "check_boundary", "check_concavity", "check_monge_ampere", "lower_bound_search", "run_all",
]
