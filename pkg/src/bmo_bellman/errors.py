"""Exception hierarchy. Each family maps to a distinct CLI exit code."""


class BellmanError(Exception):
    exit_code = 1


class ConfigError(BellmanError):
    exit_code = 2


class ClassGateError(BellmanError):
    """The boundary function violates a hard admissibility condition."""
    exit_code = 3


class PatternError(ClassGateError):
    """Sign pattern of f''' is malformed or does not match the declared count."""


class TransformError(BellmanError):
    exit_code = 2


class ConstructionError(BellmanError):
    """Building cups, forces or the foliation failed."""
    exit_code = 4


class DomainError(ConstructionError):
    """A point lies outside the strip or outside the figure asked to handle it."""


class DivergenceError(ConstructionError):
    """An improper weighted integral does not converge (eps >= eps0)."""


class AccuracyError(ConstructionError):
    """Quadrature could not reach the requested tolerance."""


class BracketError(ConstructionError):
    """Root finder was given an interval without a sign change."""


class ContinuationError(ConstructionError):
    """Cup continuation stalled; `last_ell` is the last good chord length."""

    def __init__(self, msg, last_ell=None):
        super().__init__(msg)
        self.last_ell = last_ell


class SingularJacobianError(ContinuationError):
    pass


class DispatchError(ConstructionError):
    """No figure claims a point, or a figure got a point it does not own."""


class VerificationError(BellmanError):
    exit_code = 5
