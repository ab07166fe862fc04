import math

import numpy as np
import pytest

from gaussent import (
    DomainError,
    EntropySeries,
    NotAsymptoticError,
    Sampling,
    compare_rate,
    coupled_parametric,
    custom_periodic,
    determinant_series,
    entropy_from_determinant,
    fit_asymptotic_rate,
    ihe,
    make_single_mode_state,
    product_state,
    single_parametric,
    upper_lyapunov,
    vacuum,
)
from gaussent.dynamics import propagate_fundamental


def synthetic_series(slope, c20, times):
    det = c20 * np.exp(2 * slope * times)
    return EntropySeries(times, det, np.asarray(entropy_from_determinant(det)), Sampling.UNIFORM, 0)


def test_fit_recovers_exponential_growth():
    times = np.linspace(0, 40, 81)
    fit = fit_asymptotic_rate(synthetic_series(0.4, 2.0, times))
    assert fit.slope == pytest.approx(0.4, rel=1e-6)
    assert fit.half_log_c20 == pytest.approx(0.5 * math.log(2.0), abs=1e-10)
    assert fit.intercept == pytest.approx(0.5 * math.log(2.0) + 1.0, abs=1e-4)
    assert fit.window == (40, 81)


def test_fit_refuses_early_window():
    times = np.linspace(0, 2, 81)
    with pytest.raises(NotAsymptoticError):
        fit_asymptotic_rate(synthetic_series(0.4, 0.25, times))
    fit = fit_asymptotic_rate(synthetic_series(0.4, 0.25, times), require_asymptotic=False)
    assert fit.slope > 0
    with pytest.raises(DomainError):
        fit_asymptotic_rate(synthetic_series(0.4, 2.0, times), tail_fraction=0.0)


def test_series_matches_direct_covariance():
    model = ihe(1.0, 1.0, 0.5)
    init = product_state([make_single_mode_state(0.3, 0.5, 0.2), make_single_mode_state(0.0, -0.2)])
    series = determinant_series(model, init, 3.0, sample_dt=0.5)
    np.testing.assert_allclose(series.times, 0.5 * np.arange(7))
    for t, d in zip(series.times, series.det):
        z = propagate_fundamental(model, 0.0, t).Z
        blk = (z @ init.cov @ z.T)[:2, :2]
        assert d == pytest.approx(np.linalg.det(blk), rel=1e-9)


def test_period_multiples_sampling():
    model = coupled_parametric(1.0, 3.0, 0.2, 0.2)
    series = determinant_series(model, vacuum(2), 20 * math.pi)
    assert series.sampling is Sampling.PERIOD_MULTIPLES
    np.testing.assert_allclose(series.times, 2 * math.pi * np.arange(11))
    uniform = determinant_series(model, vacuum(2), 2 * math.pi, sampling="UNIFORM", sample_dt=math.pi / 4)
    assert uniform.det[-1] == pytest.approx(series.det[1], rel=1e-9)


def test_period_multiples_spacing_falls_back_to_period():
    model = custom_periodic([[1.0, 0.1], [0.1, 2.0]], 2.0, cos_terms=[np.diag([0.3, 0.3])])
    series = determinant_series(model, vacuum(2), 10.0, sampling=Sampling.PERIOD_MULTIPLES)
    np.testing.assert_allclose(series.times, 2.0 * np.arange(6))


def test_series_preconditions():
    model = ihe(1.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        determinant_series(model, vacuum(1), 1.0)
    with pytest.raises(DomainError):
        determinant_series(model, vacuum(2), 1.0, reduced_mode=2)
    with pytest.raises(DomainError):
        determinant_series(model, vacuum(2), 0.0)
    with pytest.raises(DomainError):
        determinant_series(model, vacuum(2), 1.0, sampling=Sampling.PERIOD_MULTIPLES)


def test_truncation_reasons():
    model = ihe(1.0, 1.0, 0.5)
    series = determinant_series(model, vacuum(2), 200.0, sample_dt=1.0)
    assert series.truncated and series.truncation_reason == "defect"
    assert series.max_defect <= 1e-8
    series = determinant_series(model, vacuum(2), 200.0, sample_dt=1.0, max_norm=1e3, defect_tol=1.0)
    assert series.truncated and series.truncation_reason == "overflow"
    periodic = coupled_parametric(1.0, 3.0, 0.2, 0.2)
    series = determinant_series(periodic, vacuum(2), 400.0, sampling="UNIFORM", sample_dt=1.0, max_norm=10.0)
    assert series.truncation_reason == "overflow"


def test_modes_share_entropy_for_pure_states():
    model = coupled_parametric(1.0, 3.0, 0.2, 0.2)
    init = product_state([make_single_mode_state(0.0, 0.4, 1.0, 0.5j), make_single_mode_state(0.0, -0.3)])
    s0 = determinant_series(model, init, 200.0, reduced_mode=0)
    s1 = determinant_series(model, init, 200.0, reduced_mode=1)
    np.testing.assert_allclose(s0.entropy, s1.entropy, atol=1e-9)
    np.testing.assert_allclose(s0.global_symplectic_eigenvalues, 0.5, atol=1e-9)


def test_mixed_initial_state_keeps_symplectic_spectrum():
    model = ihe(1.0, 1.0, 0.5)
    init = product_state([make_single_mode_state(1.0), make_single_mode_state(0.5, 0.3)])
    series = determinant_series(model, init, 5.0)
    np.testing.assert_allclose(series.global_symplectic_eigenvalues, np.tile([1.0, 1.5], (len(series), 1)), rtol=1e-9)


def test_upper_lyapunov_dispatch():
    assert upper_lyapunov(ihe(1.0, 1.0, 0.5)) == pytest.approx(1.25**0.25, rel=1e-12)
    assert upper_lyapunov(single_parametric(1.0, 0.3)) > 0
    assert upper_lyapunov(single_parametric(2.0, 0.3)) == pytest.approx(0.0, abs=1e-9)


def test_compare_rate_extends_horizon():
    model = ihe(1.0, 0.875, 0.5)
    report = compare_rate(model, vacuum(2), 1.0)
    assert report.flag == "UNSTABLE"
    assert report.t_max_used > 1.0
    assert report.relative_error < 0.02
    with pytest.raises(NotAsymptoticError) as info:
        compare_rate(model, vacuum(2), 1.0, horizon_cap=2.0)
    assert info.value.series is not None


def test_compare_rate_unentangled_is_stable():
    report = compare_rate(ihe(1.0, 1.0, 0.0), vacuum(2), 5.0)
    assert report.flag == "STABLE" and report.reason == "unentangled"
    np.testing.assert_allclose(report.series.det, 0.25, atol=1e-12)


def test_compare_rate_stable_model():
    report = compare_rate(coupled_parametric(2.0, 3.5, 0.4, 0.2), vacuum(2), 10.0, stable_periods=100)
    assert report.flag == "STABLE" and report.reason == "lyapunov_zero"
    assert report.relative_error is None
    assert report.t_max_used == pytest.approx(100 * math.pi)
    assert np.max(report.series.det) < 10.0
