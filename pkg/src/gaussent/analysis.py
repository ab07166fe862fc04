"""Reduced-entropy time series and their asymptotic growth rate.

For a pure two-mode Gaussian state driven by an unstable quadratic
Hamiltonian the Schrodinger determinant of either mode grows like
``C e^{2 lambda t}``, so the reduced entropy approaches a straight line of
slope ``lambda``. :func:`compare_rate` fits that line and sets it against the
upper Lyapunov exponent computed independently from the flow's spectrum.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .dynamics import (
    DEFAULT_MAX_NORM,
    DEFAULT_STEP,
    DynamicsOverflow,
    ModelKind,
    QuadraticModel,
    constant_generator_spectrum,
    coupled_lyapunov,
    floquet_spectrum,
    monodromy,
    propagate_fundamental,
    symplectic_defect,
)
from .errors import DomainError, NotAsymptoticError
from .gaussian import (
    GaussianState,
    entropy_from_determinant,
    reduced_determinant_from_factor,
    symplectic_form,
)

#: Fits need sqrt(D) above this so that S ~ ln(D)/2 + 1 holds to about 1%.
ASYMPTOTIC_SQRT_DET = 10.0
MIN_TAIL_SAMPLES = 8
#: Series stop once the propagator can no longer be certified symplectic.
DEFAULT_DEFECT_TOL = 1e-8
DEFAULT_SAMPLE_DT = 0.1
STABLE_TOL = 1e-8


class Sampling(str, enum.Enum):
    UNIFORM = "UNIFORM"
    PERIOD_MULTIPLES = "PERIOD_MULTIPLES"


@dataclass(frozen=True)
class EntropySeries:
    """Sampled Schrodinger determinant and entropy of one reduced mode.

    ``truncated`` is set when sampling stopped before ``t_max``; the reason is
    ``"overflow"`` (propagator norm bound) or ``"defect"`` (symplectic defect
    of the propagator above tolerance).
    """

    times: NDArray[np.float64]
    det: NDArray[np.float64]
    entropy: NDArray[np.float64]
    sampling: Sampling
    reduced_mode: int
    truncated: bool = False
    truncation_reason: str | None = None
    max_defect: float = 0.0
    global_symplectic_eigenvalues: NDArray[np.float64] = field(
        default_factory=lambda: np.empty((0, 0)), repr=False
    )

    def __post_init__(self) -> None:
        n = len(self.times)
        if not (len(self.det) == n == len(self.entropy)):
            raise DomainError("times, det and entropy must have equal lengths")

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class RateFit:
    """Least-squares line ``S = intercept + slope t`` over ``window``.

    ``half_log_c20`` is the intercept of ``ln(D)/2`` over the same window,
    i.e. the estimate of ``ln(C20)/2`` in ``D ~ C20 e^{2 lambda t}``. The
    entropy intercept exceeds it by about 1 because ``S ~ ln(D)/2 + 1``.
    """

    slope: float
    intercept: float
    window: tuple[int, int]
    residual_rms: float
    half_log_c20: float


def _sample_spacing(model: QuadraticModel) -> float:
    # t_n = 2 pi n when 2 pi is a whole number of periods, else one period.
    ratio = 2.0 * math.pi / model.period
    k = round(ratio)
    return 2.0 * math.pi if k >= 1 and abs(ratio - k) < 1e-9 else model.period


def determinant_series(
    model: QuadraticModel,
    initial: GaussianState,
    t_max: float,
    step: float = DEFAULT_STEP,
    reduced_mode: int = 0,
    sampling: Sampling | str | None = None,
    sample_dt: float = DEFAULT_SAMPLE_DT,
    defect_tol: float = DEFAULT_DEFECT_TOL,
    max_norm: float = DEFAULT_MAX_NORM,
) -> EntropySeries:
    """Evolve ``initial`` and record ``D(t)`` and ``S(t)`` of ``reduced_mode``.

    Periodic models default to samples at multiples of ``2 pi`` (propagated
    with powers of the monodromy); time-independent models and explicit
    ``UNIFORM`` sampling use spacing ``sample_dt``. The covariance is carried
    as ``Z L`` with ``L L^T`` the initial covariance, and ``D`` is formed from
    its minors, which keeps precision while ``D`` grows exponentially.
    """
    if initial.n_modes != model.n_modes:
        raise DomainError(f"initial state has {initial.n_modes} modes, model has {model.n_modes}")
    if not 0 <= reduced_mode < model.n_modes:
        raise DomainError(f"reduced_mode {reduced_mode} out of range")
    if not (math.isfinite(t_max) and t_max > 0):
        raise DomainError(f"t_max must be > 0, got {t_max}")
    if sampling is None:
        sampling = Sampling.PERIOD_MULTIPLES if model.is_periodic else Sampling.UNIFORM
    sampling = Sampling(sampling)

    if sampling is Sampling.PERIOD_MULTIPLES:
        if not model.is_periodic:
            raise DomainError("PERIOD_MULTIPLES sampling needs a periodic model")
        dt = _sample_spacing(model)
    else:
        if not sample_dt > 0:
            raise DomainError(f"sample_dt must be > 0, got {sample_dt}")
        dt = float(sample_dt)
    n_samples = int(math.floor(t_max / dt + 1e-9))

    factor = np.linalg.cholesky(initial.cov)
    j = symplectic_form(model.n_modes)
    dim = 2 * model.n_modes
    z = np.eye(dim)
    step_map = None
    if sampling is Sampling.PERIOD_MULTIPLES:
        m = monodromy(model, step).Z
        step_map = np.linalg.matrix_power(m, round(dt / model.period))
    elif not model.is_periodic:
        step_map = propagate_fundamental(model, 0.0, dt, step).Z

    times, dets, sevs = [], [], []
    max_defect = 0.0
    truncated, reason = False, None
    for k in range(n_samples + 1):
        t = k * dt
        if k > 0:
            if step_map is not None:
                z = step_map @ z
            else:
                try:
                    z = propagate_fundamental(model, t - dt, t, step, max_norm).Z @ z
                except DynamicsOverflow:
                    truncated, reason = True, "overflow"
                    break
            norm = float(np.max(np.abs(z)))
            if not norm <= max_norm:
                truncated, reason = True, "overflow"
                break
            defect = symplectic_defect(z)
            if defect > defect_tol:
                truncated, reason = True, "defect"
                break
            max_defect = max(max_defect, defect)
        b = z @ factor
        times.append(t)
        dets.append(reduced_determinant_from_factor(b, reduced_mode))
        # Nonzero spectra of (i J) B B^T and i B^T J B coincide.
        ev = np.linalg.eigvalsh(1j * (b.T @ j @ b))
        sevs.append(np.sort(ev)[model.n_modes:])
    det = np.asarray(dets)
    return EntropySeries(
        times=np.asarray(times),
        det=det,
        entropy=np.asarray(entropy_from_determinant(det), dtype=float).reshape(-1),
        sampling=sampling,
        reduced_mode=reduced_mode,
        truncated=truncated,
        truncation_reason=reason,
        max_defect=max_defect,
        global_symplectic_eigenvalues=np.asarray(sevs),
    )


def _tail_window(n: int, tail_fraction: float) -> tuple[int, int]:
    if not 0 < tail_fraction <= 1:
        raise DomainError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    return n - max(1, math.ceil(tail_fraction * n)), n


def _line_fit(t: NDArray[np.float64], y: NDArray[np.float64]) -> tuple[float, float, float]:
    design = np.column_stack([np.ones_like(t), t])
    (c, s), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (c + s * t)
    return float(s), float(c), float(np.sqrt(np.mean(resid**2)))


def fit_asymptotic_rate(series: EntropySeries, tail_fraction: float = 0.5, require_asymptotic: bool = True) -> RateFit:
    """Fit ``S(t) ~ intercept + slope t`` on the last ``tail_fraction`` of samples.

    With ``require_asymptotic`` every sample in the window must have
    ``sqrt(D) > 10`` and the window must hold at least 8 samples, otherwise
    :class:`NotAsymptoticError` is raised (the run horizon must grow).
    """
    lo, hi = _tail_window(len(series), tail_fraction)
    t = series.times[lo:hi]
    if require_asymptotic:
        ok = np.sqrt(series.det[lo:hi]) > ASYMPTOTIC_SQRT_DET
        if hi - lo < MIN_TAIL_SAMPLES or not np.all(ok):
            raise NotAsymptoticError(
                f"fit window has {int(np.sum(ok))}/{hi - lo} samples with sqrt(D) > "
                f"{ASYMPTOTIC_SQRT_DET:g}; need all of at least {MIN_TAIL_SAMPLES}"
            )
    elif hi - lo < 2:
        raise NotAsymptoticError("need at least two samples to fit a line")
    slope, intercept, rms = _line_fit(t, series.entropy[lo:hi])
    _, half_log_c20, _ = _line_fit(t, 0.5 * np.log(series.det[lo:hi]))
    return RateFit(slope, intercept, (lo, hi), rms, half_log_c20)


def upper_lyapunov(model: QuadraticModel, step: float = DEFAULT_STEP) -> float:
    """Maximal real Floquet exponent (generator eigenvalue for static models)."""
    if not model.is_periodic:
        return constant_generator_spectrum(model).lyapunov_upper
    if model.kind is ModelKind.COUPLED_PARAMETRIC:
        return coupled_lyapunov(model, step)
    return floquet_spectrum(monodromy(model, step), model.period).lyapunov_upper


@dataclass(frozen=True)
class RateReport:
    """Outcome of :func:`compare_rate`.

    ``flag`` is ``"UNSTABLE"`` when a rate was fitted against a positive
    exponent, or ``"STABLE"`` when the reduced entropy stays bounded, either
    because the exponent vanishes (``reason="lyapunov_zero"``) or because the
    reduced mode never entangles (``reason="unentangled"``).
    """

    flag: str
    lyapunov: float
    fitted_slope: float
    intercept: float
    relative_error: float | None
    half_log_c20: float | None
    t_max_used: float
    series: EntropySeries = field(repr=False)
    fit: RateFit | None = field(repr=False, default=None)
    reason: str | None = None


def compare_rate(
    model: QuadraticModel,
    initial: GaussianState,
    t_max: float,
    step: float = DEFAULT_STEP,
    reduced_mode: int = 0,
    tail_fraction: float = 0.5,
    horizon_cap: float | None = None,
    sampling: Sampling | str | None = None,
    sample_dt: float = DEFAULT_SAMPLE_DT,
    defect_tol: float = DEFAULT_DEFECT_TOL,
    max_norm: float = DEFAULT_MAX_NORM,
    stable_periods: int = 1000,
) -> RateReport:
    """Fit the entropy growth rate and compare it with the upper Lyapunov exponent.

    The horizon doubles from ``t_max`` (up to ``horizon_cap``, default
    ``64 t_max``) until the fit window is asymptotic. Stable models are run
    for at least ``stable_periods`` periods and fitted without the asymptotic
    gate.
    """
    lyap = upper_lyapunov(model, step)
    cap = 64.0 * t_max if horizon_cap is None else float(horizon_cap)
    kwargs = dict(step=step, reduced_mode=reduced_mode, sampling=sampling,
                  sample_dt=sample_dt, defect_tol=defect_tol, max_norm=max_norm)

    if lyap <= STABLE_TOL:
        horizon = max(t_max, stable_periods * model.period) if model.is_periodic else t_max
        series = determinant_series(model, initial, horizon, **kwargs)
        fit = fit_asymptotic_rate(series, tail_fraction, require_asymptotic=False)
        return RateReport("STABLE", lyap, fit.slope, fit.intercept, None, None,
                          horizon, series, fit, "lyapunov_zero")

    horizon = t_max
    while True:
        series = determinant_series(model, initial, horizon, **kwargs)
        # Rounding moves D by about the symplectic defect of the propagator.
        if np.max(np.abs(series.det - 0.25)) < 1e-9 + 10.0 * series.max_defect:
            fit = fit_asymptotic_rate(series, tail_fraction, require_asymptotic=False)
            return RateReport("STABLE", lyap, fit.slope, fit.intercept, None, None,
                              horizon, series, fit, "unentangled")
        try:
            fit = fit_asymptotic_rate(series, tail_fraction)
            break
        except NotAsymptoticError:
            if series.truncated or horizon * 2 > cap:
                raise NotAsymptoticError(
                    f"no asymptotic window up to t={series.times[-1]:.4g} "
                    f"(horizon cap {cap:.4g}, truncated={series.truncated}, "
                    f"reason={series.truncation_reason})",
                    series=series,
                ) from None
            horizon *= 2
    rel = abs(fit.slope - lyap) / lyap
    return RateReport("UNSTABLE", lyap, fit.slope, fit.intercept, rel, fit.half_log_c20,
                      horizon, series, fit)
