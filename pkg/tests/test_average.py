"""Tests for bump profiles and the two routes to I(T, z, z', alpha)."""

import math

import numpy as np
import pytest
from scipy import integrate

from chlattice.average import (
    averaged_count_direct,
    averaged_count_wave,
    ball_overlap_mass,
    bump_normalization,
    bump_value,
    kernel_constant,
    kernel_K_closed,
    kernel_K_defining,
    make_bump,
    overlap_mass_at,
    wave_constant,
    wave_shell_integral,
    wave_solution,
)
from chlattice.chgeom import make_loxodromic, sphere_volume
from chlattice.errors import DomainError
from chlattice.lattice import (
    count_from_expansion,
    count_lattice_points,
    cyclic_group,
    expand_orbit,
    pingpong_group,
    trivial_group,
)
from chlattice.models import BallPoint, Isometry, WaveConfig


def _point_at(n, d):
    coords = np.zeros(n, dtype=complex)
    coords[0] = math.tanh(d)
    return BallPoint(coords=coords)


@pytest.mark.parametrize("n", [1, 2])
def test_normalization_limit(n):
    """Test that alpha^(2n) c_n(alpha) approaches 1 monotonically."""
    alphas = (0.2, 0.1, 0.05, 0.025)
    gaps = [abs(a ** (2 * n) * bump_normalization(n, a) - 1.0) for a in alphas]
    assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))
    assert gaps[-1] <= 0.01


def test_normalization_rejects_large_alpha():
    """Test the alpha range."""
    with pytest.raises(DomainError):
        bump_normalization(1, 0.6)


def test_bump_mass_by_radial_quadrature():
    """Test that the n=1 bump integrates to 1 in polar coordinates."""
    bump = make_bump(BallPoint.origin(1), 0.1)
    radial, _ = integrate.quad(
        lambda r: bump.c_alpha * float(bump.h1(r / 0.1)) * math.sinh(r) * math.cosh(r),
        0.0,
        0.1,
        epsabs=0,
        epsrel=1e-13,
    )
    assert sphere_volume(1) * radial == pytest.approx(1.0, abs=1e-8)


def test_bump_value_support():
    """Test that h vanishes off the support and is positive at the center."""
    bump = make_bump(BallPoint.of(0.2j), 0.1)
    assert bump_value(bump, bump.center) == pytest.approx(bump.c_alpha * bump.kappa)
    assert bump_value(bump, BallPoint.of(0.5)) == 0.0


def test_overlap_full_and_empty():
    """Test the 0/1 regimes of the overlap mass."""
    T, alpha = 1.5, 0.1
    bump = make_bump(BallPoint.origin(1), alpha)
    assert overlap_mass_at(bump, T - 2 * alpha, T)[0] == 1.0
    assert overlap_mass_at(bump, T + 2 * alpha, T)[0] == 0.0


@pytest.mark.parametrize("n", [1, 2])
def test_overlap_at_the_boundary(n):
    """Test that a bump centered on the sphere is split."""
    bump = make_bump(BallPoint.origin(n), 0.1)
    mass, err = overlap_mass_at(bump, 1.5, 1.5)
    assert 0.0 < mass < 1.0
    assert err < 1e-8


def test_overlap_mass_monotone_in_distance():
    """Test that moving the bump outward lowers its mass inside the ball."""
    bump = make_bump(BallPoint.origin(1), 0.1)
    masses = [overlap_mass_at(bump, D, 1.0)[0] for D in np.linspace(0.85, 1.15, 7)]
    assert masses == sorted(masses, reverse=True)


def test_ball_overlap_mass_uses_translate():
    """Test the isometry form of the overlap mass."""
    bump = make_bump(BallPoint.origin(1), 0.05)
    g = make_loxodromic(1, 0.4)
    zprime = BallPoint.origin(1)
    assert ball_overlap_mass(bump, g, zprime, 1.0) == 1.0
    assert ball_overlap_mass(bump, g, zprime, 0.3) == 0.0
    assert ball_overlap_mass(bump, Isometry.identity(1), zprime, 1.0) == 1.0


def test_direct_route_trivial_group():
    """Test a single full overlap."""
    bump = make_bump(BallPoint.origin(2), 0.05)
    res = averaged_count_direct(trivial_group(2), bump, _point_at(2, 0.3), 1.0)
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert res.translates == 1


@pytest.mark.parametrize("T", [1.25, 1.75, 2.2])
def test_direct_route_between_shells_equals_count(T):
    """Test I = N(T) when no orbit shell lies within alpha of T."""
    G = cyclic_group(1, 0.5)
    o = BallPoint.origin(1)
    bump = make_bump(o, 0.05)
    res = averaged_count_direct(G, bump, o, T)
    assert res.value == pytest.approx(count_lattice_points(G, o, o, T).count, abs=1e-6)


GRID = np.linspace(0.5, 4.0, 20)
GROUPS = {
    "trivial": trivial_group(1),
    "cyclic": cyclic_group(1, 0.5),
    "pingpong": pingpong_group(),
}


@pytest.mark.parametrize("name", list(GROUPS))
def test_direct_route_sandwich(name):
    """Test N(T - alpha) <= I(T) <= N(T + alpha) and I = N(T) away from shells."""
    G = GROUPS[name]
    o = BallPoint.origin(1)
    alpha = 0.05
    bump = make_bump(o, alpha)
    expansion = expand_orbit(G, o, GRID[-1] + alpha)
    for T in GRID:
        value = averaged_count_direct(G, bump, o, T, expansion=expansion).value
        lower = count_from_expansion(expansion, T - alpha).count
        upper = count_from_expansion(expansion, T + alpha).count
        assert lower - 1e-9 <= value <= upper + 1e-9
        if np.all(np.abs(expansion.distances - T) > alpha):
            assert value == pytest.approx(count_from_expansion(expansion, T).count, abs=1e-6)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["cyclic", "pingpong"])
def test_wave_route_matches_direct_on_grid(name):
    """Test |I_wave - I_direct| <= 1e-3 on the 20-point grid."""
    G = GROUPS[name]
    o = BallPoint.origin(1)
    alpha = 0.05
    bump = make_bump(o, alpha)
    expansion = expand_orbit(G, o, GRID[-1] + alpha)
    for T in GRID:
        direct = averaged_count_direct(G, bump, o, T, expansion=expansion).value
        waved = averaged_count_wave(G, bump, o, T, expansion=expansion, workers=2).value
        assert abs(waved - direct) <= 1e-3, T


def test_wave_translate_refines_outer_rule():
    """Test that a coarse starting rule is refined up to the tolerance."""
    G = cyclic_group(1, 0.5)
    o = BallPoint.origin(1)
    bump = make_bump(o, 0.05)
    coarse = WaveConfig(t_quad_points=8, max_t_quad_points=8)
    refined = WaveConfig(t_quad_points=8, max_t_quad_points=512)
    exact = averaged_count_direct(G, bump, o, 1.25).value
    crude = averaged_count_wave(G, bump, o, 1.25, coarse).value
    value = averaged_count_wave(G, bump, o, 1.25, refined).value
    assert abs(value - exact) < abs(crude - exact)
    assert value == pytest.approx(exact, abs=1e-5)


def test_direct_route_rejects_small_expansion():
    """Test that a reused expansion must reach T + alpha."""
    o = BallPoint.origin(1)
    bump = make_bump(o, 0.05)
    expansion = expand_orbit(cyclic_group(1, 0.5), o, 1.0)
    with pytest.raises(DomainError):
        averaged_count_direct(cyclic_group(1, 0.5), bump, o, 1.0, expansion=expansion)


def test_kernel_constants():
    """Test the leading constants for n = 1, 2."""
    assert kernel_constant(1) == pytest.approx(math.sqrt(2.0))
    assert kernel_constant(2) == pytest.approx(-math.sqrt(2.0) / 2.0)
    assert wave_constant(1) == pytest.approx(2.0 * math.sqrt(2.0))


def test_kernel_closed_value():
    """Test K(2, 1) for n = 1."""
    assert kernel_K_closed(1, 2.0, 1.0) == pytest.approx(0.3279, rel=1e-3)


def test_kernel_rejects_singular_end():
    """Test the t <= T - 1e-8 guard."""
    with pytest.raises(DomainError):
        kernel_K_closed(1, 2.0, 2.0 - 1e-9)
    with pytest.raises(DomainError):
        kernel_K_defining(2, 2.0, 2.0)


def test_kernel_n1_has_no_derivative():
    """Test that the defining form equals the closed form for n = 1."""
    for T, t in [(2.0, 1.0), (0.6, 0.3), (4.0, 3.5)]:
        closed = kernel_K_closed(1, T, t)
        assert abs(kernel_K_defining(1, T, t) - closed) <= 1e-10 * abs(closed)


@pytest.mark.parametrize(
    "n,T,t,tol", [(2, 2.0, 0.7, 1e-6), (3, 1.5, 0.4, 1e-5), (4, 3.0, 1.5, 1e-5)]
)
def test_kernel_identity(n, T, t, tol):
    """Test the iterated derivative against the closed kernel."""
    closed = kernel_K_closed(n, T, t)
    assert abs(kernel_K_defining(n, T, t) - closed) <= tol * abs(closed)


def test_kernel_defining_dimension_limit():
    """Test the supported dimension range of the defining form."""
    with pytest.raises(DomainError):
        kernel_K_defining(5, 2.0, 1.0)


def test_wave_solution_before_arrival_is_zero():
    """Test finite propagation speed."""
    bump = make_bump(_point_at(1, 1.0), 0.1)
    assert wave_solution(1, bump, 0.5, BallPoint.origin(1)) == 0.0


def test_wave_solution_matches_dense_quadrature():
    """Test u(t, 0) for a bump at the origin, n = 1."""
    alpha, t = 0.1, 0.05
    bump = make_bump(BallPoint.origin(1), alpha)

    def smooth(r):
        # cosh^2 t - cosh^2 r = sinh(t + r) sinh(t - r)
        gap = t - r
        ratio = 1.0 if gap == 0 else gap / math.sinh(gap)
        return (
            bump.c_alpha
            * float(bump.h1(r / alpha))
            * math.sinh(r)
            * math.cosh(r)
            * math.sqrt(ratio / math.sinh(t + r))
        )

    inner, _ = integrate.quad(
        smooth, 0.0, t, weight="alg", wvar=(0.0, -0.5), epsabs=0, epsrel=1e-12
    )
    expected = sphere_volume(1) * inner / (2.0 * math.pi)
    assert wave_solution(1, bump, t, BallPoint.origin(1)) == pytest.approx(expected, rel=1e-6)


def test_wave_solution_sums_bumps():
    """Test linearity in the initial data."""
    o = BallPoint.origin(1)
    b1 = make_bump(_point_at(1, 0.3), 0.1)
    b2 = make_bump(_point_at(1, 0.6), 0.1)
    both = wave_solution(1, [b1, b2], 0.8, o)
    assert both == pytest.approx(wave_solution(1, b1, 0.8, o) + wave_solution(1, b2, 0.8, o))


def test_wave_solution_dimension_check():
    """Test that data and observation point must share n."""
    with pytest.raises(DomainError):
        wave_solution(2, make_bump(BallPoint.origin(1), 0.1), 0.5, BallPoint.origin(1))


def test_shell_integral_support():
    """Test that W vanishes before the wave reaches the bump."""
    bump = make_bump(_point_at(1, 0.4), 0.1)
    W = wave_shell_integral(bump, np.array([0.2, 0.3, 0.45, 0.6]), 0.4, WaveConfig())
    assert W[0] == 0.0
    assert W[1] == 0.0
    assert W[2] > 0.0
    assert W[3] > 0.0


def test_wave_solution_depends_on_distance_only():
    """Test u(t, z') for two bumps at the same distance from z'."""
    o = BallPoint.origin(1)
    b1 = make_bump(BallPoint.of(math.tanh(0.4)), 0.1)
    b2 = make_bump(BallPoint.of(1j * math.tanh(0.4)), 0.1)
    expected = wave_solution(1, b2, 0.45, o)
    assert wave_solution(1, b1, 0.45, o) == pytest.approx(expected, rel=1e-12)


def test_wave_route_trivial_full_overlap():
    """Test the wave route for one fully covered bump, n = 1."""
    o = BallPoint.origin(1)
    bump = make_bump(_point_at(1, 0.3), 0.05)
    res = averaged_count_wave(trivial_group(1), bump, o, 1.0)
    assert res.value == pytest.approx(1.0, abs=1e-4)


def test_wave_route_matches_direct_on_partial_overlap():
    """Test route equality when the bump straddles the sphere, n = 1."""
    o = BallPoint.origin(1)
    bump = make_bump(_point_at(1, 1.0), 0.1)
    direct = averaged_count_direct(trivial_group(1), bump, o, 1.02)
    waved = averaged_count_wave(trivial_group(1), bump, o, 1.02)
    assert 0.0 < direct.value < 1.0
    assert waved.value == pytest.approx(direct.value, abs=1e-3)


def test_wave_route_cyclic_between_shells():
    """Test I_wave = N(T) for a cyclic group with T between shells."""
    G = cyclic_group(1, 0.5)
    o = BallPoint.origin(1)
    bump = make_bump(o, 0.05)
    res = averaged_count_wave(G, bump, o, 1.25, workers=2)
    assert res.value == pytest.approx(5.0, abs=1e-3)
    assert res.translates == 5


@pytest.mark.slow
def test_wave_route_n2_trivial_group():
    """Test the wave route in CH^2 for one bump inside the ball."""
    o = BallPoint.origin(2)
    bump = make_bump(_point_at(2, 0.3), 0.1)
    res = averaged_count_wave(trivial_group(2), bump, o, 1.0)
    assert res.value == pytest.approx(1.0, abs=1e-2)
