"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class GaussentError(Exception):
    """Base class; ``category`` is the machine-readable tag used by the CLI."""

    category = "error"


class DomainError(GaussentError, ValueError):
    """An argument lies outside the domain of the operation."""

    category = "precondition"


class InvalidStateError(GaussentError, ValueError):
    """A covariance matrix violates symmetry, finiteness or the uncertainty bound."""

    category = "precondition"


class DynamicsOverflow(GaussentError, ArithmeticError):
    """The fundamental matrix exceeded the configured norm bound."""

    category = "overflow"

    def __init__(self, t_reached: float, norm: float, max_norm: float):
        self.t_reached = float(t_reached)
        self.norm = float(norm)
        self.max_norm = float(max_norm)
        super().__init__(
            f"dynamics overflow at t={self.t_reached:.6g}: "
            f"|Z|={self.norm:.3g} exceeds {self.max_norm:.3g}"
        )


class NotAsymptoticError(GaussentError):
    """A rate fit was requested before the series entered its asymptotic regime.

    ``series`` holds the last series examined, when there is one.
    """

    category = "not_asymptotic"

    def __init__(self, message: str, series=None):
        super().__init__(message)
        self.series = series


class ConfigError(GaussentError):
    """Malformed scenario configuration (parse error or unknown key)."""

    category = "config"
