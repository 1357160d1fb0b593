"""
Error types raised by the suris-lab modules.

Every error derives from SurisLabError so the command-line front end can
report it uniformly and exit with status 1.
"""

from typing import Optional


class SurisLabError(Exception):
    """Base class for all suris-lab errors."""


class ParameterError(SurisLabError, ValueError):
    """Invalid construction input (eccentricity above the cap, bad p/q, ...)."""


class DomainError(SurisLabError, ValueError):
    """A quantity left its mathematical domain (arccos argument, modulus)."""


class GridMismatchError(SurisLabError, ValueError):
    """Sampled functions do not live on the grid of the inner product."""


class UnsupportedOrderError(SurisLabError):
    """Derivative order not available for a potential representation."""


class NotAttainableError(SurisLabError):
    """Requested rotation number lies outside the measured rotation interval."""


class NonMonotoneError(SurisLabError):
    """Rotation number is not monotone along the scanned branch."""


class SingularGramError(SurisLabError):
    """Gram matrix of the low modes is numerically singular."""


class PeriodMismatchError(SurisLabError):
    """Potential fails the requested (r/k)-periodicity check."""


class NoConvergenceError(SurisLabError):
    """Orbit solver gave up.

    Attributes:
        best_residual: Smallest sup-norm Frenkel-Kontorova residual reached
        iterations: Total number of iterations spent
    """

    def __init__(self, message: str, best_residual: float = float("nan"),
                 iterations: Optional[int] = None):
        super().__init__(message)
        self.best_residual = best_residual
        self.iterations = iterations
