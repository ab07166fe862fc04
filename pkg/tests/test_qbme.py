import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from gaussent import (
    DomainError,
    QbmeParams,
    Sampling,
    entropy_from_nu,
    make_single_mode_state,
    qbme_entropy_series,
    qbme_nu,
    qbme_second_moments,
)


def moment_ode(p: QbmeParams, t_eval):
    """Covariance ODE of the Lindblad generator in the (x, p) quadratures."""
    drift = np.array([[-p.k, p.omega], [-p.omega, -p.k]])
    diffusion = 2.0 * p.k * (p.n_bar + 0.5) * np.eye(2)
    cov0 = make_single_mode_state(p.nu0, p.r0, p.phi0).cov

    def rhs(_, y):
        s = y.reshape(2, 2)
        return (drift @ s + s @ drift.T + diffusion).ravel()

    sol = solve_ivp(rhs, (0.0, t_eval[-1]), cov0.ravel(), t_eval=t_eval, method="DOP853", rtol=1e-13, atol=1e-13)
    covs = sol.y.T.reshape(-1, 2, 2)
    adag_a = 0.5 * (covs[:, 0, 0] + covs[:, 1, 1])
    # sigma_aa = (sigma_xx - sigma_pp)/2 + i sigma_xp
    aa = 0.5 * (covs[:, 0, 0] - covs[:, 1, 1]) + 1j * covs[:, 0, 1]
    return adag_a, np.abs(aa) ** 2, np.sqrt(np.linalg.det(covs)) - 0.5


@pytest.mark.parametrize(
    "params",
    [
        QbmeParams(omega=1.0, k=0.5, n_bar=10.0, nu0=1.0, r0=1.0),
        QbmeParams(omega=2.3, k=0.1, n_bar=0.0, nu0=0.0, r0=0.5, phi0=1.0),
        QbmeParams(omega=0.4, k=1.5, n_bar=3.0, nu0=2.0, r0=-0.8, phi0=0.3),
    ],
)
def test_closed_forms_match_moment_ode(params):
    t = np.linspace(0.0, 20.0, 201)
    adag_a, aa2, nu = moment_ode(params, t)
    got_adag_a, got_aa2 = qbme_second_moments(params, t)
    np.testing.assert_allclose(got_adag_a, adag_a, atol=1e-8)
    np.testing.assert_allclose(got_aa2, aa2, atol=1e-8)
    np.testing.assert_allclose(qbme_nu(params, t), nu, atol=1e-8)


def test_frequency_drops_out():
    t = np.linspace(0, 5, 11)
    base = dict(k=0.3, n_bar=2.0, nu0=0.5, r0=0.7, phi0=0.2)
    np.testing.assert_array_equal(qbme_nu(QbmeParams(omega=0.5, **base), t), qbme_nu(QbmeParams(omega=7.0, **base), t))


def test_limits():
    p = QbmeParams(omega=1.0, k=0.5, n_bar=10.0, nu0=1.0, r0=1.0)
    assert qbme_nu(p, 0.0) == pytest.approx(1.0, abs=1e-13)
    assert qbme_nu(p, 200.0) == pytest.approx(10.0, abs=1e-12)
    series = qbme_entropy_series(p, [0.0, 1.0, 200.0])
    assert series.sampling is Sampling.UNIFORM
    assert series.entropy[0] == pytest.approx(2 * math.log(2), abs=1e-12)
    assert series.entropy[-1] == pytest.approx(entropy_from_nu(10.0), abs=1e-12)
    np.testing.assert_allclose(series.det, (np.asarray(qbme_nu(p, series.times)) + 0.5) ** 2)


def test_vacuum_into_zero_temperature_bath_stays_pure():
    p = QbmeParams(omega=1.0, k=0.4, n_bar=0.0)
    np.testing.assert_allclose(qbme_nu(p, np.linspace(0, 10, 21)), 0.0, atol=1e-15)


@pytest.mark.parametrize(
    "kwargs",
    [dict(k=0.0), dict(k=-0.5), dict(n_bar=-1.0), dict(omega=0.0), dict(nu0=-0.1), dict(r0=math.nan)],
)
def test_parameter_validation(kwargs):
    base = dict(omega=1.0, k=0.5, n_bar=1.0)
    with pytest.raises(DomainError):
        QbmeParams(**{**base, **kwargs})


def test_grid_validation():
    p = QbmeParams(omega=1.0, k=0.5, n_bar=1.0)
    with pytest.raises(DomainError):
        qbme_entropy_series(p, [1.0, 0.5])
    with pytest.raises(DomainError):
        qbme_entropy_series(p, [-1.0, 0.5])
    with pytest.raises(DomainError):
        qbme_entropy_series(p, [])
