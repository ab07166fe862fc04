"""Damped oscillator in a thermal bath (Born-Markov master equation).

The Liouvillian

    L rho = -i w [a^dag a, rho]
            + k (n_B + 1) (2 a rho a^dag - a^dag a rho - rho a^dag a)
            + k n_B (2 a^dag rho a - a a^dag rho - rho a a^dag)

keeps Gaussian states Gaussian. The symmetrised moments relax as

    sigma_{a^dag a}(t) = (nu0 + 1/2) cosh(2 r0) e^{-2kt} + (n_B + 1/2)(1 - e^{-2kt})
    |sigma_{aa}(t)|^2  = e^{-4kt} (nu0 + 1/2)^2 sinh^2(2 r0)

and the entropy depends only on ``nu(t) = sqrt(sigma_{a^dag a}^2 - |sigma_aa|^2) - 1/2``.
The oscillator frequency only rotates the phase of ``sigma_aa`` and drops out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .analysis import EntropySeries, Sampling
from .errors import DomainError
from .gaussian import entropy_from_nu


@dataclass(frozen=True)
class QbmeParams:
    omega: float
    k: float
    n_bar: float
    nu0: float = 0.0
    r0: float = 0.0
    phi0: float = 0.0
    alpha0: complex = 0.0

    def __post_init__(self) -> None:
        for name in ("omega", "k", "n_bar", "nu0", "r0", "phi0"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not self.omega > 0:
            raise DomainError(f"omega must be > 0, got {self.omega}")
        if not self.k > 0:
            raise DomainError(f"damping rate k must be > 0, got {self.k}")
        if self.n_bar < 0:
            raise DomainError(f"n_bar must be >= 0, got {self.n_bar}")
        if self.nu0 < 0:
            raise DomainError(f"nu0 must be >= 0, got {self.nu0}")


def _times(t: ArrayLike) -> NDArray[np.float64]:
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise DomainError("times must be finite and >= 0")
    return t


def qbme_second_moments(p: QbmeParams, t: ArrayLike) -> tuple[NDArray[np.float64] | float, NDArray[np.float64] | float]:
    """``(sigma_{a^dag a}(t), sigma_{a^dag a^dag}(t) sigma_{aa}(t))``."""
    t = _times(t)
    decay = np.exp(-2.0 * p.k * t)
    width = p.nu0 + 0.5
    adag_a = width * math.cosh(2.0 * p.r0) * decay + (p.n_bar + 0.5) * (1.0 - decay)
    product = decay**2 * (width * math.sinh(2.0 * p.r0)) ** 2
    if adag_a.ndim == 0:
        return float(adag_a), float(product)
    return adag_a, product


def qbme_nu(p: QbmeParams, t: ArrayLike) -> NDArray[np.float64] | float:
    """Effective thermal occupation ``nu(t)``, clamped at 0 against roundoff."""
    adag_a, product = qbme_second_moments(p, t)
    nu = np.maximum(np.sqrt(np.maximum(np.square(adag_a) - product, 0.0)) - 0.5, 0.0)
    return float(nu) if np.ndim(nu) == 0 else nu


def qbme_entropy_series(p: QbmeParams, grid: ArrayLike) -> EntropySeries:
    """Entropy ``S(nu(t))`` on a sorted, non-negative time grid."""
    t = _times(grid).reshape(-1)
    if t.size == 0:
        raise DomainError("time grid is empty")
    if np.any(np.diff(t) < 0):
        raise DomainError("time grid must be sorted")
    nu = np.atleast_1d(qbme_nu(p, t))
    return EntropySeries(
        times=t,
        det=(nu + 0.5) ** 2,
        entropy=np.atleast_1d(entropy_from_nu(nu)),
        sampling=Sampling.UNIFORM,
        reduced_mode=0,
    )
