"""Gaussian states of bosonic modes and their single-mode entropies.

Conventions used throughout the package:

* phase-space ordering ``(x1, p1, x2, p2, ...)``;
* units with hbar = 1 and ladder operator ``a = (x + i p) / sqrt(2)``, so the
  vacuum covariance is ``diag(1/2, 1/2)``;
* covariance entries ``sigma_xy = <{x, y}>/2 - <x><y>``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, InvalidStateError

_EPS = np.finfo(float).eps

#: Absolute slack allowed below the uncertainty bound before a state is rejected.
UNCERTAINTY_TOL = 1e-9


def symplectic_form(n_modes: int) -> NDArray[np.float64]:
    """Return the block-diagonal symplectic form for ``n_modes`` modes."""
    if n_modes < 1:
        raise DomainError(f"n_modes must be positive, got {n_modes}")
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _roundoff_floor(cov: NDArray[np.float64]) -> float:
    # Absolute uncertainty of quantities quadratic in ``cov`` after rounding.
    scale = float(np.max(np.abs(cov))) if cov.size else 0.0
    return UNCERTAINTY_TOL + 16.0 * _EPS * max(1.0, scale) ** 2


def symplectic_eigenvalues(cov: ArrayLike) -> NDArray[np.float64]:
    """Symplectic eigenvalues of a positive-definite covariance, ascending.

    Computed as the positive eigenvalues of the Hermitian matrix
    ``i sqrt(cov) J sqrt(cov)``, which is better conditioned than ``i J cov``.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    w, v = np.linalg.eigh(cov)
    if w[0] <= 0.0:
        raise InvalidStateError("covariance is not positive definite")
    root = (v * np.sqrt(w)) @ v.T
    herm = 1j * root @ symplectic_form(n) @ root
    ev = np.linalg.eigvalsh(herm)
    return np.sort(ev[n:])


@dataclass(frozen=True)
class GaussianState:
    """First and second moments of an ``n_modes``-mode Gaussian state.

    Arrays are copied and frozen on construction. The state is validated:
    finite entries, symmetric covariance, and every symplectic eigenvalue at
    least 1/2 (up to :data:`UNCERTAINTY_TOL` plus a roundoff floor that grows
    with the size of the entries).
    """

    mean: NDArray[np.float64]
    cov: NDArray[np.float64]

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise InvalidStateError(f"covariance must be 2n x 2n, got shape {cov.shape}")
        if mean.shape[0] != cov.shape[0]:
            raise InvalidStateError(
                f"mean has length {mean.shape[0]}, covariance is {cov.shape[0]}-dimensional"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidStateError("state contains non-finite entries")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise InvalidStateError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        floor = _roundoff_floor(cov)
        if cov.shape[0] == 2:
            # Single mode: the symplectic eigenvalue is sqrt(det).
            det = cov[0, 0] * cov[1, 1] - cov[0, 1] ** 2
            ok = cov[0, 0] > 0.0 and det >= 0.25 - floor
        else:
            try:
                ok = symplectic_eigenvalues(cov)[0] >= 0.5 - floor
            except InvalidStateError:
                ok = False
        if not ok:
            raise InvalidStateError("covariance violates the uncertainty principle")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2

    def symplectic_eigenvalues(self) -> NDArray[np.float64]:
        return symplectic_eigenvalues(self.cov)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GaussianState):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.cov, other.cov)

    __hash__ = None  # type: ignore[assignment]


def squeezer(r: float, phi: float) -> NDArray[np.float64]:
    """Phase-space matrix of the squeezing operator ``S(r, phi)``.

    ``S(r, phi) = exp(r/2 (e^{i phi} a^dag^2 - e^{-i phi} a^2))`` acts on
    ``(x, p)`` as this symmetric symplectic matrix; at ``phi = 0`` it
    stretches ``x`` by ``e^r``.
    """
    c, s = math.cosh(r), math.sinh(r)
    cp, sp = math.cos(phi), math.sin(phi)
    return np.array([[c + s * cp, s * sp], [s * sp, c - s * cp]])


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if not cmath.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value!r}")


def make_single_mode_state(nu: float, r: float = 0.0, phi: float = 0.0, alpha: complex = 0.0) -> GaussianState:
    """Displaced squeezed thermal state ``D(alpha) S(r, phi) rho_nu S^dag D^dag``.

    The covariance is ``(nu + 1/2) S S^T`` with ``S`` from :func:`squeezer`;
    the mean is ``sqrt(2) (Re alpha, Im alpha)``.
    """
    _check_finite(nu=nu, r=r, phi=phi, alpha=alpha)
    if nu < 0:
        raise DomainError(f"thermal occupation nu must be >= 0, got {nu}")
    sq = squeezer(r, phi)
    cov = (nu + 0.5) * sq @ sq.T
    alpha = complex(alpha)
    mean = math.sqrt(2.0) * np.array([alpha.real, alpha.imag])
    return GaussianState(mean, cov)


def vacuum(n_modes: int = 1) -> GaussianState:
    return GaussianState(np.zeros(2 * n_modes), 0.5 * np.eye(2 * n_modes))


def product_state(states: Sequence[GaussianState]) -> GaussianState:
    """Tensor product: concatenated means and block-diagonal covariance."""
    if len(states) == 0:
        raise DomainError("product_state needs at least one factor")
    dim = sum(s.cov.shape[0] for s in states)
    cov = np.zeros((dim, dim))
    start = 0
    for s in states:
        k = s.cov.shape[0]
        cov[start:start + k, start:start + k] = s.cov
        start += k
    return GaussianState(np.concatenate([s.mean for s in states]), cov)


def reduce_mode(state: GaussianState, mode_index: int) -> GaussianState:
    """Partial trace over every mode except ``mode_index``."""
    if not 0 <= mode_index < state.n_modes:
        raise DomainError(f"mode_index {mode_index} out of range for {state.n_modes} modes")
    sl = slice(2 * mode_index, 2 * mode_index + 2)
    return GaussianState(state.mean[sl], state.cov[sl, sl])


def schrodinger_determinant(state: GaussianState) -> float:
    """``sigma_pp sigma_qq - sigma_qp^2`` of a single-mode state, clamped at 1/4."""
    if state.n_modes != 1:
        raise DomainError(f"expected a single-mode state, got {state.n_modes} modes")
    cov = state.cov
    det = float(cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0])
    if det < 0.25 - _roundoff_floor(cov):
        raise InvalidStateError(f"Schrodinger determinant {det} below 1/4")
    return max(det, 0.25)


def reduced_determinant_from_factor(factor: ArrayLike, mode_index: int) -> float:
    """Schrodinger determinant of one mode, given ``cov = factor @ factor.T``.

    With ``B`` the two rows of ``factor`` belonging to the mode, the
    Cauchy-Binet formula gives ``det(B B^T)`` as the sum of squared 2x2 minors
    of ``B``. The minors are of the size of ``sqrt(D)`` rather than ``D``, so
    this loses far less precision than forming the block first when the
    entries of ``factor`` grow exponentially.
    """
    f = np.asarray(factor, dtype=float)
    b0 = f[2 * mode_index]
    b1 = f[2 * mode_index + 1]
    outer = np.outer(b0, b1)
    minors = outer - outer.T
    iu = np.triu_indices(f.shape[1], 1)
    det = float(np.sum(minors[iu] ** 2))
    # Each minor carries an absolute rounding error of about eps * |f|^2.
    scale = max(1.0, float(np.max(np.abs(f)))) ** 2
    if det < 0.25 - UNCERTAINTY_TOL - 16.0 * _EPS * scale:
        raise InvalidStateError(f"Schrodinger determinant {det} below 1/4")
    return max(det, 0.25)


def _thermal_entropy(nu: NDArray[np.float64]) -> NDArray[np.float64]:
    # (nu+1) ln(nu+1) - nu ln nu = ln(1+nu) + nu ln(1 + 1/nu), with the second
    # term split so that neither large nor tiny nu cancels or overflows
    big = nu >= 1.0
    safe = np.where(nu > 0.0, nu, 1.0)
    tail = np.where(big, nu * np.log1p(1.0 / np.where(big, nu, 1.0)), nu * (np.log1p(nu) - np.log(safe)))
    return np.log1p(nu) + tail


def entropy_from_nu(nu: ArrayLike) -> NDArray[np.float64] | float:
    """Von Neumann entropy ``(nu+1) ln(nu+1) - nu ln nu`` of a thermal mode."""
    arr = np.asarray(nu, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("nu must be finite and >= 0")
    out = _thermal_entropy(arr)
    return float(out) if out.ndim == 0 else out


def entropy_from_determinant(det: ArrayLike) -> NDArray[np.float64] | float:
    """Entropy of a single-mode Gaussian state from its Schrodinger determinant.

    ``S = (d+1)/2 ln(d+1) - (d-1)/2 ln(d-1) - ln 2`` with ``d = 2 sqrt(D)``.
    This is :func:`entropy_from_nu` at ``nu = (d - 1)/2 = sqrt(D) - 1/2`` and is
    evaluated in that form, which stays accurate for huge ``D``. Values in
    ``[1/4 - UNCERTAINTY_TOL, 1/4)`` are treated as 1/4.
    """
    arr = np.asarray(det, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.25 - UNCERTAINTY_TOL):
        raise DomainError("determinant must be finite and >= 1/4")
    nu = np.maximum(np.sqrt(np.maximum(arr, 0.25)) - 0.5, 0.0)
    out = _thermal_entropy(nu)
    return float(out) if out.ndim == 0 else out
