"""Tests for Jacobi functions, H_n and the spectral main term."""

import logging
import math

import pytest
from pydantic import ValidationError

from chlattice.average import make_bump
from chlattice.errors import DomainError
from chlattice.hypgeo import hyp2f1_real
from chlattice.models import BallPoint, SpectralData, SpectralEntry
from chlattice.spectral import (
    H_n,
    H_n_closed,
    H_n_quadrature,
    admissible_window,
    bump_pairing,
    c_j_coefficient,
    check_decay,
    constant_phi,
    decay_profile,
    eigen_from_covolume,
    is_admissible,
    jacobi_phi,
    main_term_A,
    mehler_fock_constant,
    spectral_average_truncated,
)

V = math.pi / 12.0


def test_jacobi_at_zero():
    """Test phi(0) = 1."""
    assert jacobi_phi(1.0, -1.0, 3.0, 0.0) == pytest.approx(1.0)


def test_jacobi_terminating_parameter():
    """Test lambda = -(alpha + beta + 1)^2 gives the constant 1."""
    for x in (0.3, 1.0, 2.5):
        assert jacobi_phi(1.0, 0.0, -4.0, x) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("lam", [0.5, 4.0, 30.0])
@pytest.mark.parametrize("x", [0.2, 0.9, 1.7])
def test_jacobi_half_half_trigonometric_form(lam, x):
    """Test alpha = beta = 1/2 against 2 sin(sqrt(lam) x) / (sqrt(lam) sinh 2x)."""
    root = math.sqrt(lam)
    expected = 2.0 * math.sin(root * x) / (root * math.sinh(2.0 * x))
    value = jacobi_phi(0.5, 0.5, lam, x)
    assert value == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_jacobi_rejects_alpha():
    """Test alpha > -1."""
    with pytest.raises(DomainError):
        jacobi_phi(-1.5, 0.0, 1.0, 0.5)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_H_bottom_of_spectrum(n):
    """Test H_n(-n^2, T) = sinh^(2n) T."""
    for T in (0.5, 2.0, 5.0):
        expected = math.sinh(T) ** (2 * n)
        assert H_n_closed(n, -float(n * n), T) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_H_small_T(n):
    """Test H_n(lambda, T) ~ T^(2n) as T -> 0."""
    T = 1e-3
    assert H_n_closed(n, 4.0, T) / T ** (2 * n) == pytest.approx(1.0, rel=1e-4)


def test_H_quadrature_small_T():
    """Test the integral form near T = 0 for n = 1."""
    T = 1e-3
    assert H_n_quadrature(1, 4.0, T) / T**2 == pytest.approx(1.0, rel=1e-4)


def test_H_quadrature_example():
    """Test (n, lambda, T) = (1, 4, 1)."""
    closed = H_n_closed(1, 4.0, 1.0)
    assert H_n_quadrature(1, 4.0, 1.0) == pytest.approx(closed, rel=1e-6)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("lam", [0.0, 1.0, 4.0, 25.0])
@pytest.mark.parametrize("T", [0.5, 1.0, 2.0])
def test_H_closed_equals_integral_form(n, lam, T):
    """Test the integral representation on the full grid."""
    closed = H_n_closed(n, lam, T)
    quad = H_n_quadrature(n, lam, T)
    assert abs(closed - quad) / max(abs(closed), 1e-30) <= 1e-6


def test_H_negative_lambda_integral_form():
    """Test a discrete eigenvalue with the hyperbolic cosine branch."""
    closed = H_n_closed(2, -2.5, 1.2)
    assert H_n_quadrature(2, -2.5, 1.2) == pytest.approx(closed, rel=1e-8)


def test_H_rejects_lambda_below_bottom():
    """Test lambda >= -n^2."""
    with pytest.raises(DomainError):
        H_n_closed(1, -1.5, 1.0)


def test_H_dispatch_matches_integral_form():
    """Test the dispatcher where a - b is an integer and T is large."""
    value = H_n(2, -1.0, 4.0)
    assert value == pytest.approx(H_n_quadrature(2, -1.0, 4.0), rel=1e-8)


def test_mehler_fock_constant_n1():
    """Test M_1 = 4 sqrt(2) / pi."""
    assert mehler_fock_constant(1) == pytest.approx(4.0 * math.sqrt(2.0) / math.pi)


def test_decay_scaled_profile_bounded():
    """Test |H_n| lambda^((2n+1)/4) against the endpoint envelope."""
    lams = [25.0, 100.0, 400.0, 1600.0]
    assert check_decay(2, 2.0, lams)
    assert all(v >= 0.0 for v in decay_profile(2, 2.0, lams))


def test_decay_profile_rejects_nonpositive_lambda():
    """Test that the profile is only defined for lambda > 0."""
    with pytest.raises(DomainError):
        decay_profile(1, 1.0, [0.0])


def test_c_j_asymptotics():
    """Test F((n+mu)/2, (n-mu)/2, n+1, -sinh^2 T) e^((n-mu)T) -> c_j at T = 8."""
    n, mu, T = 2, 1.5, 8.0
    F = hyp2f1_real((n + mu) / 2, (n - mu) / 2, n + 1, -math.sinh(T) ** 2)
    assert F * math.exp((n - mu) * T) == pytest.approx(c_j_coefficient(n, mu), rel=1e-5)
    assert c_j_coefficient(1, 1.0) == pytest.approx(1.0)


def test_admissible_windows():
    """Test the windows for n = 2, 3."""
    assert admissible_window(2) == [pytest.approx((-4.0, -0.36))]
    windows = admissible_window(3)
    assert windows[1] == pytest.approx((-9.0, -25.0 / 49.0))
    for n in range(2, 7):
        for lo, hi in admissible_window(n):
            assert lo < hi < 0


def test_admissible_window_n1(caplog):
    """Test the n = 1 fallback and its note."""
    with caplog.at_level(logging.INFO, logger="chlattice"):
        assert admissible_window(1) == [(-1.0, 0.0)]
    assert "using the window" in caplog.text
    assert is_admissible(1, -0.5)


def test_windows_are_half_open():
    """Test that the lower end is included and the upper end is not."""
    assert is_admissible(2, -4.0)
    assert not is_admissible(2, -0.36)


def test_main_term_single_eigenvalue():
    """Test A = pi e^(2T) / (4V) for n = 1, lambda = -1."""
    data = eigen_from_covolume(V, 1)
    o = BallPoint.origin(1)
    for T in (1.0, 3.0):
        expected = math.pi * math.exp(2 * T) / (4 * V)
        assert main_term_A(data, 1, T, o, o) == pytest.approx(expected, rel=1e-12)


def test_main_term_empty(caplog):
    """Test that empty data gives 0 with a warning."""
    o = BallPoint.origin(2)
    with caplog.at_level(logging.WARNING, logger="chlattice"):
        assert main_term_A(SpectralData(), 2, 2.0, o, o) == 0.0
    assert "no admissible eigenvalues" in caplog.text


def test_main_term_excludes_out_of_window(caplog):
    """Test that an eigenvalue above the window is dropped."""
    o = BallPoint.origin(2)
    data = SpectralData(entries=[SpectralEntry(lam=-0.1, phi=constant_phi(1.0))])
    with caplog.at_level(logging.WARNING, logger="chlattice"):
        assert main_term_A(data, 2, 2.0, o, o) == 0.0
    assert "outside the admissible window" in caplog.text


def test_main_term_bilinear_and_symmetric():
    """Test scaling by 4 when phi doubles, and z <-> z' symmetry."""

    def phi(x):
        return 1.0 + float(x.coords[0].real)

    def twice(x):
        return 2.0 * phi(x)

    z, w = BallPoint.of(0.3, 0.1j), BallPoint.of(-0.2j, 0.4)
    single = SpectralData(entries=[SpectralEntry(lam=-3.0, phi=phi)])
    doubled = SpectralData(entries=[SpectralEntry(lam=-3.0, phi=twice)])
    base = main_term_A(single, 2, 1.5, z, w)
    assert main_term_A(doubled, 2, 1.5, z, w) == pytest.approx(4 * base)
    assert main_term_A(single, 2, 1.5, w, z) == pytest.approx(base)


def test_main_term_dimension_mismatch():
    """Test that z and z' must lie in CH^n."""
    o = BallPoint.origin(1)
    with pytest.raises(DomainError):
        main_term_A(eigen_from_covolume(V, 2), 2, 1.0, o, o)


def test_spectral_average_empty():
    """Test empty data."""
    o = BallPoint.origin(1)
    bump = make_bump(o, 0.1)
    assert spectral_average_truncated(SpectralData(), bump, 1, 2.0, o) == 0.0


def test_pairing_converges_to_point_value():
    """Test that the phi-h pairing approaches phi(center) as alpha shrinks."""
    center = BallPoint.of(0.2 + 0.1j)

    def phi(x):
        c = x.coords[0]
        return 1.0 + 2.0 * c.real + abs(c) ** 2

    entry = SpectralEntry(lam=-0.5, phi=phi)
    target = phi(center)
    errors = [
        abs(bump_pairing(entry, make_bump(center, a)) - target) for a in (0.1, 0.05)
    ]
    assert errors[1] < errors[0]
    assert errors[1] < 1e-2


def test_truncated_average_tracks_main_term():
    """Test the ratio to A(T) for single-eigenvalue data at large T."""
    o = BallPoint.origin(1)
    data = eigen_from_covolume(V, 1)
    bump = make_bump(o, 0.05)
    value = spectral_average_truncated(data, bump, 1, 6.0, o)
    assert value / main_term_A(data, 1, 6.0, o, o) == pytest.approx(1.0, abs=1e-4)


def test_truncated_average_workers_agree():
    """Test that threaded evaluation of several eigenvalues is deterministic."""
    o = BallPoint.origin(2)
    data = SpectralData(
        entries=[
            SpectralEntry(lam=-4.0, phi=constant_phi(0.5)),
            SpectralEntry(lam=-2.0, phi=constant_phi(0.3)),
        ]
    )
    bump = make_bump(BallPoint.of(0.1, 0.0), 0.1)
    serial = spectral_average_truncated(data, bump, 2, 1.5, o)
    threaded = spectral_average_truncated(data, bump, 2, 1.5, o, workers=2)
    assert threaded == serial


def test_eigen_from_covolume():
    """Test lambda = -n^2 and phi = 1/sqrt(V)."""
    data = eigen_from_covolume(2.0, 2)
    assert data.entries[0].lam == -4.0
    phi0 = data.entries[0].phi(BallPoint.origin(2))
    assert phi0 == pytest.approx(1.0 / math.sqrt(2.0))
    with pytest.raises(DomainError):
        eigen_from_covolume(0.0, 1)


def test_spectral_data_rejects_lambda_below_bottom():
    """Test that data tagged with n refuses lambda < -n^2."""
    entry = SpectralEntry(lam=-2.0, phi=constant_phi(1.0))
    assert SpectralData(entries=[entry], n=2).n == 2
    with pytest.raises(ValidationError):
        SpectralData(entries=[entry], n=1)


def test_main_term_rejects_data_of_other_dimension():
    """Test that data tagged with n cannot be used in another dimension."""
    o = BallPoint.origin(1)
    with pytest.raises(DomainError):
        main_term_A(eigen_from_covolume(V, 2), 1, 1.0, o, o)
