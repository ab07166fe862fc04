"""Quadratic Hamiltonians and their linear phase-space flow.

Every model is of the form ``H = sum_i p_i^2 / 2 + x^T K(t) x / 2`` with a
symmetric stiffness matrix ``K(t)``. In the ordering ``(x1, p1, x2, p2, ...)``
the equations of motion are ``z' = A(t) z`` with ``A = J h(t)``, where ``h`` is
the Hamiltonian matrix; ``trace A = 0`` identically.

Periodic models use the Mathieu normal form: an uncoupled oscillator with
stiffness ``alpha - 2 q cos 2t`` (period pi).
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, DynamicsOverflow
from .gaussian import GaussianState, symplectic_form

DEFAULT_STEP = 1e-3
DEFAULT_MAX_NORM = 1e120
_CHUNK = 8192


class ModelKind(str, enum.Enum):
    IHE = "IHE"
    COUPLED_PARAMETRIC = "COUPLED_PARAMETRIC"
    SINGLE_PARAMETRIC = "SINGLE_PARAMETRIC"
    CUSTOM_PERIODIC = "CUSTOM_PERIODIC"


@dataclass(frozen=True)
class QuadraticModel:
    """A (possibly time-periodic) quadratic Hamiltonian.

    Build instances with :func:`ihe`, :func:`coupled_parametric`,
    :func:`single_parametric` or :func:`custom_periodic`; they validate the
    parameters. ``period`` is ``None`` for time-independent models.
    """

    kind: ModelKind
    params: dict = field(hash=False)
    n_modes: int
    period: float | None
    # Stiffness K(t) = k0 + sum_m cos_terms[m] cos(w_m t) + sin_terms[m] sin(w_m t)
    k0: NDArray[np.float64] = field(repr=False, hash=False)
    harmonics: tuple = field(default=(), repr=False, hash=False)

    @property
    def is_periodic(self) -> bool:
        return self.period is not None

    def stiffness(self, t: ArrayLike) -> NDArray[np.float64]:
        """``K(t)``; a scalar ``t`` gives ``(n, n)``, an array gives ``(m, n, n)``."""
        t = np.asarray(t, dtype=float)
        k = np.broadcast_to(self.k0, t.shape + self.k0.shape).copy()
        for omega, c, s in self.harmonics:
            k += np.cos(omega * t)[..., None, None] * c
            k += np.sin(omega * t)[..., None, None] * s
        return k

    def generator(self, t: ArrayLike) -> NDArray[np.float64]:
        """Flow generator ``A(t)`` with the same broadcasting as :meth:`stiffness`."""
        k = self.stiffness(t)
        n = self.n_modes
        a = np.zeros(k.shape[:-2] + (2 * n, 2 * n))
        idx = np.arange(n)
        a[..., 2 * idx, 2 * idx + 1] = 1.0
        a[..., 1::2, 0::2] = -k
        return a


def _finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")


def ihe(omega1_sq: float, lambda_sq: float, coupling: float) -> QuadraticModel:
    """Oscillator ``omega1`` bilinearly coupled to an inverted oscillator.

    ``H = (p1^2 + omega1^2 x1^2)/2 + (p2^2 - Lambda^2 x2^2)/2 + coupling x1 x2``.
    """
    _finite(omega1_sq=omega1_sq, lambda_sq=lambda_sq, coupling=coupling)
    k0 = np.array([[omega1_sq, coupling], [coupling, -lambda_sq]], dtype=float)
    params = {"omega1_sq": omega1_sq, "lambda_sq": lambda_sq, "coupling": coupling}
    return QuadraticModel(ModelKind.IHE, params, 2, None, k0)


def coupled_parametric(omega1_sq: float, omega2_sq: float, q: float, g: float) -> QuadraticModel:
    """Two parametric oscillators joined by a spring ``g (x1 - x2)^2 / 2``.

    Each oscillator alone obeys the Mathieu equation
    ``x'' + (omega_i^2 - 2 q cos 2t) x = 0``. Requires ``g > 0`` and
    ``omega2_sq > omega1_sq``.
    """
    _finite(omega1_sq=omega1_sq, omega2_sq=omega2_sq, q=q, g=g)
    if not g > 0:
        raise DomainError(f"coupling g must be > 0, got {g}")
    if not omega2_sq > omega1_sq:
        raise DomainError(f"need omega2_sq > omega1_sq, got {omega2_sq} <= {omega1_sq}")
    k0 = np.array([[omega1_sq + g, -g], [-g, omega2_sq + g]], dtype=float)
    drive = -2.0 * q * np.eye(2)
    params = {"omega1_sq": omega1_sq, "omega2_sq": omega2_sq, "q": q, "g": g}
    return QuadraticModel(
        ModelKind.COUPLED_PARAMETRIC, params, 2, math.pi, k0,
        ((2.0, drive, np.zeros((2, 2))),),
    )


def single_parametric(alpha: float, q: float) -> QuadraticModel:
    """Mathieu oscillator ``x'' + (alpha - 2 q cos 2t) x = 0``."""
    _finite(alpha=alpha, q=q)
    params = {"alpha": alpha, "q": q}
    return QuadraticModel(
        ModelKind.SINGLE_PARAMETRIC, params, 1, math.pi, np.array([[alpha]], dtype=float),
        ((2.0, np.array([[-2.0 * q]]), np.zeros((1, 1))),),
    )


def custom_periodic(
    k0: ArrayLike,
    period: float,
    cos_terms: Sequence[ArrayLike] = (),
    sin_terms: Sequence[ArrayLike] = (),
) -> QuadraticModel:
    """Stiffness given by a Fourier series with fundamental period ``period``.

    ``K(t) = k0 + sum_m cos_terms[m] cos(2 pi (m+1) t / T) + sin_terms[m] sin(...)``;
    every matrix must be symmetric and of the same size.
    """
    k0 = np.atleast_2d(np.asarray(k0, dtype=float))
    _finite(period=period)
    if not period > 0:
        raise DomainError(f"period must be > 0, got {period}")
    n = k0.shape[0]
    mats = [k0] + [np.atleast_2d(np.asarray(m, dtype=float)) for m in (*cos_terms, *sin_terms)]
    for m in mats:
        if m.shape != (n, n):
            raise DomainError(f"stiffness matrices must all be {n}x{n}, got {m.shape}")
        if not np.all(np.isfinite(m)) or not np.allclose(m, m.T, rtol=0, atol=1e-14):
            raise DomainError("stiffness matrices must be finite and symmetric")
    n_harm = max(len(cos_terms), len(sin_terms))
    zero = np.zeros((n, n))
    harmonics = []
    for m in range(n_harm):
        c = mats[1 + m] if m < len(cos_terms) else zero
        s = mats[1 + len(cos_terms) + m] if m < len(sin_terms) else zero
        harmonics.append((2.0 * math.pi * (m + 1) / period, c, s))
    params = {
        "k0": k0.tolist(),
        "period": period,
        "cos_terms": [np.asarray(c, dtype=float).tolist() for c in cos_terms],
        "sin_terms": [np.asarray(s, dtype=float).tolist() for s in sin_terms],
    }
    return QuadraticModel(ModelKind.CUSTOM_PERIODIC, params, n, float(period), k0, tuple(harmonics))


def flow_generator(model: QuadraticModel, t: float) -> NDArray[np.float64]:
    """``A(t)`` such that ``z' = A(t) z`` reproduces the Heisenberg equations."""
    _finite(t=t)
    return model.generator(t)


# --------------------------------------------------------------------------- #
# Fixed-step RK4 propagation
# --------------------------------------------------------------------------- #

def symplectic_defect(z: NDArray[np.float64]) -> float:
    """``max |Z^T J Z - J|``."""
    j = symplectic_form(z.shape[0] // 2)
    return float(np.max(np.abs(z.T @ j @ z - j)))


@dataclass(frozen=True)
class SymplecticMatrix:
    """Fundamental solution ``Z(t1, t0)`` of the linear flow.

    ``defect`` is ``max |Z^T J Z - J|``. Rounding alone produces a defect of
    order ``eps * |Z|^2``; ``relative_defect`` divides that scale out.
    """

    Z: NDArray[np.float64]
    t0: float
    t1: float

    @property
    def defect(self) -> float:
        return symplectic_defect(self.Z)

    @property
    def relative_defect(self) -> float:
        return self.defect / max(1.0, float(np.max(np.abs(self.Z))) ** 2)


def _step_matrices(model: QuadraticModel, t0: float, n: int, h: float) -> NDArray[np.float64]:
    """One-step RK4 propagators for the steps starting at ``t0 + k h``."""
    ts = t0 + h * np.arange(n)
    a1 = model.generator(ts)
    if model.is_periodic:
        a2 = model.generator(ts + 0.5 * h)
        a3 = model.generator(ts + h)
    else:
        a2 = a3 = a1
    eye = np.eye(a1.shape[-1])
    k1 = a1
    k2 = a2 @ (eye + 0.5 * h * k1)
    k3 = a2 @ (eye + 0.5 * h * k2)
    k4 = a3 @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _tree_product(phis: NDArray[np.float64]) -> NDArray[np.float64]:
    # phis[n-1] @ ... @ phis[0] by pairwise reduction
    while phis.shape[0] > 1:
        if phis.shape[0] % 2:
            tail = phis[-1:]
            phis = phis[:-1]
        else:
            tail = None
        phis = phis[1::2] @ phis[0::2]
        if tail is not None:
            phis = np.concatenate([phis, tail])
    return phis[0]


def _n_steps(t0: float, t1: float, step: float) -> tuple[int, float]:
    _finite(t0=t0, t1=t1, step=step)
    if not step > 0:
        raise DomainError(f"step must be > 0, got {step}")
    if t1 < t0:
        raise DomainError(f"need t1 >= t0, got t0={t0}, t1={t1}")
    n = max(1, math.ceil((t1 - t0) / step - 1e-9))
    return n, (t1 - t0) / n


def propagate_fundamental(
    model: QuadraticModel,
    t0: float,
    t1: float,
    step: float = DEFAULT_STEP,
    max_norm: float = DEFAULT_MAX_NORM,
) -> SymplecticMatrix:
    """Integrate ``Z' = A(t) Z``, ``Z(t0) = I`` with classical RK4.

    The step is shrunk slightly so that an integer number of steps lands on
    ``t1``. Raises :class:`DynamicsOverflow` when ``|Z|`` exceeds ``max_norm``.
    """
    n, h = _n_steps(t0, t1, step)
    dim = 2 * model.n_modes
    z = np.eye(dim)
    if t1 == t0:
        return SymplecticMatrix(z, t0, t1)
    done = 0
    while done < n:
        m = min(_CHUNK, n - done)
        phis = _step_matrices(model, t0 + done * h, m, h)
        z_new = _tree_product(phis) @ z
        norm = float(np.max(np.abs(z_new)))
        if not (norm <= max_norm):
            # Walk the chunk step by step to name the time of failure.
            for k in range(m):
                z = phis[k] @ z
                norm = float(np.max(np.abs(z)))
                if not (norm <= max_norm):
                    raise DynamicsOverflow(t0 + (done + k + 1) * h, norm, max_norm)
        z = z_new
        done += m
    return SymplecticMatrix(z, t0, t1)


def propagate_dense(
    model: QuadraticModel,
    t0: float,
    t1: float,
    step: float = DEFAULT_STEP,
    max_norm: float = DEFAULT_MAX_NORM,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Fundamental matrices at every RK4 grid point of ``[t0, t1]``.

    Returns ``(times, Z)`` with ``Z.shape == (n + 1, 2N, 2N)`` and ``Z[0] = I``.
    """
    n, h = _n_steps(t0, t1, step)
    dim = 2 * model.n_modes
    out = np.empty((n + 1, dim, dim))
    out[0] = np.eye(dim)
    done = 0
    while done < n:
        m = min(_CHUNK, n - done)
        phis = _step_matrices(model, t0 + done * h, m, h)
        for k in range(m):
            out[done + k + 1] = phis[k] @ out[done + k]
        norm = float(np.max(np.abs(out[done + m])))
        if not (norm <= max_norm):
            norms = np.max(np.abs(out[done + 1:done + m + 1]), axis=(1, 2))
            bad = int(np.argmax(~(norms <= max_norm)))
            raise DynamicsOverflow(t0 + (done + bad + 1) * h, float(norms[bad]), max_norm)
        done += m
    times = t0 + h * np.arange(n + 1)
    times[-1] = t1
    return times, out


def evolve_covariance(state: GaussianState, Z: SymplecticMatrix | NDArray[np.float64]) -> GaussianState:
    """Push a Gaussian state through a linear symplectic map."""
    z = Z.Z if isinstance(Z, SymplecticMatrix) else np.asarray(Z, dtype=float)
    if z.shape != state.cov.shape:
        raise DomainError(f"propagator {z.shape} does not match state dimension {state.cov.shape}")
    return GaussianState(z @ state.mean, z @ state.cov @ z.T)


def monodromy(model: QuadraticModel, step: float = DEFAULT_STEP) -> SymplecticMatrix:
    """One-period propagator ``Z(T, 0)`` of a periodic model."""
    if not model.is_periodic:
        raise DomainError(f"{model.kind.value} model has no period")
    return propagate_fundamental(model, 0.0, model.period, step)


# --------------------------------------------------------------------------- #
# Spectra
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class FloquetSpectrum:
    """Floquet (or generator) exponents, sorted by decreasing real part."""

    exponents: NDArray[np.complex128]
    monodromy_eigenvalues: NDArray[np.complex128] | None
    lyapunov_upper: float
    period_used: float | None
    condition: float = 1.0


def _eig_condition(m: NDArray[np.float64]) -> tuple[NDArray[np.complex128], float]:
    w, vl, vr = scipy.linalg.eig(m, left=True, right=True)
    overlaps = np.abs(np.sum(vl.conj() * vr, axis=0))
    with np.errstate(divide="ignore"):
        cond = float(np.max(1.0 / overlaps)) if np.all(overlaps > 0) else math.inf
    return w, cond


def floquet_spectrum(M: SymplecticMatrix | NDArray[np.float64], T: float) -> FloquetSpectrum:
    """Floquet exponents ``log(eig(M)) / T`` (principal branch).

    ``condition`` is the largest eigenvalue condition number of ``M``; it is
    large near parabolic (Jordan-block) monodromies.
    """
    m = M.Z if isinstance(M, SymplecticMatrix) else np.asarray(M, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"monodromy must be square, got shape {m.shape}")
    if not (math.isfinite(T) and T > 0):
        raise DomainError(f"period must be > 0, got {T}")
    eig, cond = _eig_condition(m)
    exps = np.log(eig.astype(complex)) / T
    order = np.lexsort((-exps.imag, -exps.real))
    exps, eig = exps[order], eig[order]
    lyap = max(0.0, float(np.max(exps.real)))
    return FloquetSpectrum(exps, eig, lyap, float(T), cond)


def constant_generator_spectrum(model: QuadraticModel) -> FloquetSpectrum:
    """Eigenvalues of the constant generator of a time-independent model.

    For the IHE model these are the four roots of
    ``(s^2 + omega1^2)(s^2 - Lambda^2) = coupling^2``.
    """
    if model.is_periodic:
        raise DomainError("constant_generator_spectrum needs a time-independent model")
    a = model.generator(0.0)
    eig, cond = _eig_condition(a)
    order = np.lexsort((-eig.imag, -eig.real))
    eig = eig[order].astype(complex)
    lyap = max(0.0, float(np.max(eig.real)))
    return FloquetSpectrum(eig, None, lyap, None, cond)


def normal_mode_parameters(omega1_sq: float, omega2_sq: float, g: float) -> tuple[float, float, float]:
    """Normal-mode stiffnesses ``(alpha_plus, alpha_minus)`` and mixing angle ``theta``.

    ``alpha_pm = (w1^2 + w2^2)/2 + g +- sqrt(g^2 + (w2^2 - w1^2)^2 / 4)`` and
    ``tan(2 theta) = 2 g / (w2^2 - w1^2)``, ``theta`` in ``(0, pi/4)``.
    """
    _finite(omega1_sq=omega1_sq, omega2_sq=omega2_sq, g=g)
    if not g > 0:
        raise DomainError(f"coupling g must be > 0, got {g}")
    delta = omega2_sq - omega1_sq
    if not delta > 0:
        raise DomainError(f"need omega2_sq > omega1_sq, got {omega2_sq} <= {omega1_sq}")
    centre = 0.5 * (omega1_sq + omega2_sq) + g
    root = math.hypot(g, 0.5 * delta)
    theta = 0.5 * math.atan2(2.0 * g, delta)
    return centre + root, centre - root, theta


# --------------------------------------------------------------------------- #
# Mathieu equation
# --------------------------------------------------------------------------- #

_WINDING_PERIODS = 16


@dataclass(frozen=True)
class MathieuSolution:
    """Characteristic exponent and monodromy of a Mathieu equation.

    ``C`` and ``S`` are the solutions with ``C(0) = 1, C'(0) = 0`` and
    ``S(0) = 0, S'(0) = 1``; :meth:`basis` evaluates them at any ``t >= 0``
    through ``Z(k pi + s) = Z(s) M^k``.
    """

    alpha: float
    q: float
    phi: complex
    monodromy: NDArray[np.float64] = field(repr=False)
    step: float = DEFAULT_STEP

    def basis(self, t: float) -> tuple[float, float, float, float]:
        _finite(t=t)
        if t < 0:
            raise DomainError(f"t must be >= 0, got {t}")
        k, s = divmod(t, math.pi)
        model = single_parametric(self.alpha, self.q)
        z_s = propagate_fundamental(model, 0.0, s, self.step).Z if s > 0 else np.eye(2)
        with np.errstate(over="ignore", invalid="ignore"):
            z = z_s @ np.linalg.matrix_power(self.monodromy, int(k))
        norm = float(np.max(np.abs(z)))
        if not norm <= DEFAULT_MAX_NORM:
            raise DynamicsOverflow(t, norm, DEFAULT_MAX_NORM)
        return float(z[0, 0]), float(z[0, 1]), float(z[1, 0]), float(z[1, 1])

    def wronskian(self, t: float) -> float:
        c, s, cd, sd = self.basis(t)
        return c * sd - cd * s


def _rotation_number(times: NDArray[np.float64], zs: NDArray[np.float64], periods: int) -> float:
    """Mean rate at which the phase-plane angle of a solution turns."""
    m = zs[-1]
    z0 = np.array([1.0, 0.0])
    total = 0.0
    for _ in range(periods):
        traj = zs @ z0  # rows are (x, x')
        ang = np.unwrap(np.arctan2(-traj[:, 1], traj[:, 0]))
        total += ang[-1] - ang[0]
        z0 = m @ z0
        z0 = z0 / np.linalg.norm(z0)
    return total / (periods * (times[-1] - times[0]))


def _solve_mathieu(alpha: float, q: float, step: float) -> MathieuSolution:
    times, zs = propagate_dense(single_parametric(alpha, q), 0.0, math.pi, step)
    m = zs[-1]
    eig = np.linalg.eigvals(m).astype(complex)
    # e^{i phi pi} = eigenvalue; candidates are +-phi0 + 2k.
    phi0 = -1j * cmath.log(eig[0]) / math.pi
    rho = _rotation_number(times, zs, _WINDING_PERIODS)
    best = None
    for sign in (1.0, -1.0):
        base = sign * phi0
        k = round((rho - base.real) / 2.0)
        cand = base + 2.0 * k
        dist = abs(cand.real - rho)
        if best is None or dist < best[0]:
            best = (dist, cand)
    phi = complex(best[1].real, abs(best[1].imag))
    return MathieuSolution(float(alpha), float(q), phi, m, step)


def mathieu_solution(alpha: float, q: float, step: float = DEFAULT_STEP) -> MathieuSolution:
    return _solve_mathieu(alpha, q, step)


def mathieu_characteristic_exponent(alpha: float, q: float, step: float = DEFAULT_STEP) -> complex:
    """Characteristic exponent of ``x'' + (alpha - 2 q cos 2t) x = 0``.

    The monodromy over one period pi has eigenvalues ``exp(+-i phi pi)``. The
    real part is resolved to its band (not folded into ``[0, 2)``) with the
    rotation number of a solution, so ``phi(alpha, 0) = sqrt(alpha)``; the
    imaginary part is reported non-negative and is the growth rate per unit
    time of unstable solutions.
    """
    return _solve_mathieu(alpha, q, step).phi


def mathieu_basis(alpha: float, q: float, t: float, step: float = DEFAULT_STEP) -> tuple[float, float, float, float]:
    """``(C, S, C', S')`` of the Mathieu equation at time ``t``."""
    return _solve_mathieu(alpha, q, step).basis(t)


def coupled_lyapunov(model: QuadraticModel, step: float = DEFAULT_STEP) -> float:
    """Upper Lyapunov exponent of coupled parametric oscillators.

    The drive ``-2 q cos 2t`` is proportional to the identity, so the
    orthogonal rotation diagonalising the static stiffness decouples the
    system into Mathieu oscillators with parameters ``(alpha_pm, q)``; the
    exponent is the larger of their ``|Im phi|``.
    """
    if model.kind is not ModelKind.COUPLED_PARAMETRIC:
        raise DomainError(f"coupled_lyapunov needs a COUPLED_PARAMETRIC model, got {model.kind.value}")
    p = model.params
    a_plus, a_minus, _ = normal_mode_parameters(p["omega1_sq"], p["omega2_sq"], p["g"])
    return max(abs(mathieu_characteristic_exponent(a, p["q"], step).imag) for a in (a_plus, a_minus))
