import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import random_symplectic
from gaussent import (
    DomainError,
    GaussianState,
    InvalidStateError,
    entropy_from_determinant,
    entropy_from_nu,
    make_single_mode_state,
    product_state,
    reduce_mode,
    schrodinger_determinant,
    squeezer,
    symplectic_eigenvalues,
    symplectic_form,
    vacuum,
)
from gaussent.gaussian import reduced_determinant_from_factor


def fock_moments(nu, r, phi, alpha, dim=260):
    """Mean and covariance of D S rho_nu S^dag D^dag in a truncated Fock basis."""
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    ad = a.conj().T
    n = np.arange(dim)
    p_n = nu**n / (nu + 1) ** (n + 1) if nu > 0 else (n == 0).astype(float)
    rho = np.diag(p_n).astype(complex)
    sq = expm(0.5 * r * (np.exp(1j * phi) * ad @ ad - np.exp(-1j * phi) * a @ a))
    disp = expm(alpha * ad - np.conj(alpha) * a)
    u = disp @ sq
    rho = u @ rho @ u.conj().T
    x = (a + ad) / math.sqrt(2)
    p = (a - ad) / (1j * math.sqrt(2))
    ev = lambda op: np.trace(rho @ op).real
    mean = np.array([ev(x), ev(p)])
    cov = np.array(
        [
            [ev(x @ x) - mean[0] ** 2, ev((x @ p + p @ x) / 2) - mean[0] * mean[1]],
            [ev((x @ p + p @ x) / 2) - mean[0] * mean[1], ev(p @ p) - mean[1] ** 2],
        ]
    )
    return mean, cov


@pytest.mark.parametrize(
    "nu, r, phi, alpha",
    [
        (0.0, 0.0, 0.0, 0.0),
        (1.0, 0.0, 0.0, 0.0),
        (0.0, 1.0, 0.0, 0.0),
        (0.5, 0.7, 1.1, 0.0),
        (1.0, 1.0, 0.0, 0.3 - 0.4j),
        (2.0, -0.5, 2.5, 1.0 + 0.5j),
    ],
)
def test_single_mode_state_matches_fock_basis(nu, r, phi, alpha):
    state = make_single_mode_state(nu, r, phi, alpha)
    mean, cov = fock_moments(nu, r, phi, alpha)
    np.testing.assert_allclose(state.mean, mean, atol=1e-6)
    np.testing.assert_allclose(state.cov, cov, atol=1e-6)


def test_vacuum_and_squeezed_closed_form():
    np.testing.assert_array_equal(vacuum().cov, 0.5 * np.eye(2))
    s = make_single_mode_state(0.0, 1.0)
    np.testing.assert_allclose(np.diag(s.cov), [0.5 * math.exp(2), 0.5 * math.exp(-2)], rtol=1e-14)


@given(st.floats(-3, 3), st.floats(-7, 7))
def test_squeezer_is_symplectic(r, phi):
    s = squeezer(r, phi)
    j = symplectic_form(1)
    np.testing.assert_allclose(s.T @ j @ s, j, atol=1e-12 * math.cosh(r) ** 2)
    np.testing.assert_allclose(s, s.T)


@pytest.mark.parametrize("nu", [0.0, 0.3, 1.0, 20.0])
def test_thermal_symplectic_eigenvalue(nu):
    state = make_single_mode_state(nu, 0.8, 0.3)
    np.testing.assert_allclose(state.symplectic_eigenvalues(), [nu + 0.5], rtol=1e-12)
    assert schrodinger_determinant(state) == pytest.approx((nu + 0.5) ** 2, rel=1e-12)


def test_state_validation():
    with pytest.raises(InvalidStateError):
        GaussianState(np.zeros(2), 0.4 * np.eye(2))
    with pytest.raises(InvalidStateError):
        GaussianState(np.zeros(2), np.array([[1.0, 0.2], [0.1, 1.0]]))
    with pytest.raises(InvalidStateError):
        GaussianState(np.zeros(2), np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(InvalidStateError):
        GaussianState(np.zeros(3), np.eye(2))
    with pytest.raises(InvalidStateError):
        GaussianState(np.zeros(4), 0.3 * np.eye(4))
    with pytest.raises(DomainError):
        make_single_mode_state(-0.1)
    with pytest.raises(DomainError):
        make_single_mode_state(0.0, math.inf)


def test_state_is_immutable():
    s = make_single_mode_state(1.0)
    with pytest.raises(ValueError):
        s.cov[0, 0] = 3.0


def test_product_and_reduce_roundtrip():
    a = make_single_mode_state(0.5, 0.3, 0.2, 1 + 1j)
    b = make_single_mode_state(2.0, -0.4)
    ab = product_state([a, b])
    assert ab.n_modes == 2
    assert reduce_mode(ab, 0) == a
    assert reduce_mode(ab, 1) == b
    with pytest.raises(DomainError):
        reduce_mode(ab, 2)


@given(st.integers(0, 10_000), st.integers(1, 3))
def test_global_symplectic_invariance(seed, n_modes):
    rng = np.random.default_rng(seed)
    z = random_symplectic(rng, n_modes)
    nus = rng.uniform(0, 3, n_modes)
    state = product_state([make_single_mode_state(nu, rng.uniform(-1, 1), rng.uniform(0, 6)) for nu in nus])
    moved = GaussianState(z @ state.mean, z @ state.cov @ z.T)
    np.testing.assert_allclose(moved.symplectic_eigenvalues(), np.sort(nus + 0.5), rtol=1e-8)
    if n_modes == 1:
        assert schrodinger_determinant(moved) == pytest.approx(schrodinger_determinant(state), rel=1e-9)


def test_reduced_determinant_from_factor_matches_block(rng):
    z = random_symplectic(rng, 2, scale=1.0)
    cov = z @ (0.5 * np.eye(4)) @ z.T
    factor = z @ np.linalg.cholesky(0.5 * np.eye(4))
    for mode in (0, 1):
        blk = cov[2 * mode:2 * mode + 2, 2 * mode:2 * mode + 2]
        assert reduced_determinant_from_factor(factor, mode) == pytest.approx(np.linalg.det(blk), rel=1e-10)


def test_symplectic_eigenvalues_two_mode_squeezed():
    r = 1.2
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    cov = 0.5 * np.array([[c, 0, s, 0], [0, c, 0, -s], [s, 0, c, 0], [0, -s, 0, c]])
    np.testing.assert_allclose(symplectic_eigenvalues(cov), [0.5, 0.5], atol=1e-12)
    state = GaussianState(np.zeros(4), cov)
    assert schrodinger_determinant(reduce_mode(state, 0)) == pytest.approx(0.25 * c**2)


def test_entropy_values():
    assert entropy_from_nu(0.0) == 0.0
    assert entropy_from_nu(1.0) == pytest.approx(2 * math.log(2), abs=1e-15)
    assert entropy_from_nu(10.0) == pytest.approx(11 * math.log(11) - 10 * math.log(10), rel=1e-15)
    assert entropy_from_determinant(0.25) == 0.0
    np.testing.assert_allclose(entropy_from_nu([0.0, 1.0]), [0.0, 2 * math.log(2)])
    with pytest.raises(DomainError):
        entropy_from_nu(-1e-3)
    with pytest.raises(DomainError):
        entropy_from_determinant(0.2)


@given(st.floats(0.0, 1e4))
def test_entropy_from_determinant_consistent(nu):
    assert entropy_from_determinant((nu + 0.5) ** 2) == pytest.approx(entropy_from_nu(nu), rel=1e-10, abs=1e-12)


def test_entropy_large_determinant_is_log_linear():
    d = 1e40
    assert entropy_from_determinant(d) == pytest.approx(0.5 * math.log(d) + 1.0, rel=1e-12)
