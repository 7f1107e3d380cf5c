"""Exception hierarchy shared by the flatspec modules."""


class FlatSpecError(Exception):
    """Base class for all library errors."""


class SurfaceError(FlatSpecError, ValueError):
    """A surface description failed validation."""


class InvalidPolygon(SurfaceError):
    pass


class UnmatchedEdge(SurfaceError):
    pass


class HolonomyMismatch(SurfaceError):
    pass


class BadConeAngle(SurfaceError):
    pass


class EulerMismatch(SurfaceError):
    pass


class NotUnimodular(FlatSpecError, ValueError):
    pass


class NotIncident(FlatSpecError, ValueError):
    pass


class InvalidPath(FlatSpecError, ValueError):
    pass


class ZeroGenerator(FlatSpecError, ValueError):
    pass


class Degenerate(FlatSpecError, ValueError):
    pass


class EmptySpectrum(FlatSpecError, ValueError):
    pass


class BudgetError(FlatSpecError, RuntimeError):
    """Base for computations that ran out of their work budget."""


class CutoffTooLarge(BudgetError):
    def __init__(self, message, nodes=None):
        super().__init__(message)
        self.nodes = nodes


class BudgetExceeded(BudgetError):
    """Raised with whatever partial result was gathered before the budget ran out."""

    def __init__(self, message, partial=None, certified=False):
        super().__init__(message)
        self.partial = [] if partial is None else partial
        self.certified = certified


class NoConvergence(BudgetError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class EccNotBalanced(FlatSpecError, RuntimeError):
    def __init__(self, message, best=None, ecc=None):
        super().__init__(message)
        self.best = best
        self.ecc = ecc
