"""Exception hierarchy.

``DataError`` and its subclasses signal bad input (CLI exit code 2);
``LPFailure`` signals an internal solver failure (CLI exit code 3).
"""

from __future__ import annotations


class DataError(ValueError):
    """Rejected input: malformed files, dimension mismatches, bad configs."""


class DimensionError(DataError):
    pass


class BoundsError(DataError):
    pass


class EmptyDataError(DataError):
    pass


class RankDeficientError(DataError):
    pass


class ConfigError(DataError):
    pass


class LPFailure(RuntimeError):
    """An LP that must be solvable returned Infeasible/Unbounded."""


class UnboundedPolyhedronError(ValueError):
    """Vertex enumeration requested on a polyhedron with a recession direction."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, best_iterate, best_loss: float):
        super().__init__(message)
        self.best_iterate = best_iterate
        self.best_loss = best_loss
