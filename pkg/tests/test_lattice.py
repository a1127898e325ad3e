"""Tests for orbit enumeration and lattice point counts."""

import itertools
import math

import numpy as np
import pytest

from chlattice.chgeom import apply_matrix, distance, distances, inverse_matrix
from chlattice.errors import DomainError
from chlattice.lattice import (
    MODULAR_COVOLUME,
    count_from_expansion,
    count_lattice_points,
    cyclic_group,
    enumerate_orbit,
    expand_orbit,
    fuchsian_embed,
    modular_group,
    pingpong_group,
    trivial_group,
)
from chlattice.models import BallPoint
from chlattice.spectral import eigen_from_covolume, main_term_A


def test_trivial_group_orbit_is_base_point():
    """Test that the trivial group has a single orbit point."""
    orbit = list(enumerate_orbit(trivial_group(2), BallPoint.of(0.1, 0.2j), 3.0))
    assert len(orbit) == 1
    assert orbit[0].word_length == 0


def test_trivial_group_count():
    """Test N = 1 when d(z, z') = 0.3 < T = 1."""
    z = BallPoint.origin(1)
    zprime = BallPoint.of(math.tanh(0.3))
    res = count_lattice_points(trivial_group(1), z, zprime, 1.0)
    assert res.count == 1
    assert res.words_expanded == 1
    assert not res.truncated
    assert res.certified


def test_count_below_min_distance_is_zero():
    """Test N = 0 when T is smaller than every orbit distance."""
    z = BallPoint.origin(1)
    zprime = BallPoint.of(math.tanh(0.3))
    assert count_lattice_points(trivial_group(1), z, zprime, 0.2).count == 0


def test_cyclic_orbit_distances():
    """Test that <g> has orbit points at k * ell on both sides."""
    ell, R = 0.5, 2.2
    orbit = list(enumerate_orbit(cyclic_group(1, ell), BallPoint.origin(1), R))
    d = sorted(distance(BallPoint.origin(1), p.point) for p in orbit)
    expected = sorted([0.0] + [k * ell for k in range(1, 5) for _ in range(2)])
    assert len(orbit) == 2 * math.floor(R / ell) + 1
    assert np.allclose(d, expected, atol=1e-9)
    lengths = sorted([0] + [k for k in range(1, 5) for _ in range(2)])
    assert sorted(p.word_length for p in orbit) == lengths


def test_cyclic_count():
    """Test N(2.2) = 9 for ell = 0.5."""
    o = BallPoint.origin(1)
    res = count_lattice_points(cyclic_group(1, 0.5), o, o, 2.2)
    assert res.count == 9
    assert not res.truncated


def test_count_is_strict_inequality():
    """Test that points at distance exactly T are excluded away from the boundary tolerance."""
    G = cyclic_group(1, 0.5)
    o = BallPoint.origin(1)
    assert count_lattice_points(G, o, o, 1.0 + 1e-6).count == 5
    assert count_lattice_points(G, o, o, 1.0 - 1e-6).count == 3


def test_count_monotone_in_T():
    """Test that N(T) is nondecreasing."""
    G = pingpong_group(max_word_length=6)
    o = BallPoint.origin(1)
    expansion = expand_orbit(G, o, 4.0)
    counts = [count_from_expansion(expansion, T).count for T in np.linspace(0.5, 4.0, 15)]
    assert counts == sorted(counts)


def test_count_from_expansion_rejects_larger_T():
    """Test that an expansion cannot answer beyond its radius."""
    expansion = expand_orbit(cyclic_group(1, 0.5), BallPoint.origin(1), 2.0)
    with pytest.raises(DomainError):
        count_from_expansion(expansion, 3.0)


def test_truncation_is_flagged():
    """Test that a live frontier at max_word_length marks the result truncated."""
    G = cyclic_group(1, 0.5, max_word_length=2)
    o = BallPoint.origin(1)
    res = count_lattice_points(G, o, o, 3.0)
    assert res.truncated
    assert not res.certified
    assert res.count == 5


def _brute_force_count(G, R):
    gens = [g.matrix for g in G.generators]
    gens += [inverse_matrix(m) for m in gens]
    inverse = {0: 2, 1: 3, 2: 0, 3: 1}
    origin = np.zeros(1, dtype=complex)
    found = [origin]
    for length in range(1, G.max_word_length + 1):
        for word in itertools.product(range(4), repeat=length):
            if any(inverse[a] == b for a, b in zip(word, word[1:])):
                continue
            m = np.eye(2, dtype=complex)
            for letter in word:
                m = m @ gens[letter]
            found.append(apply_matrix(m, origin))
    pts = np.array(found)
    d = distances(origin, pts)
    inside = pts[d < R]
    unique = []
    for p in inside:
        if all(np.max(np.abs(p - q)) > 1e-9 for q in unique):
            unique.append(p)
    return len(unique)


def test_pingpong_matches_brute_force():
    """Test BFS counting against all reduced words up to length 8."""
    G = pingpong_group(max_word_length=8)
    o = BallPoint.origin(1)
    assert count_lattice_points(G, o, o, 4.0).count == _brute_force_count(G, 4.0)


def test_workers_do_not_change_the_expansion():
    """Test that parallel expansion is deterministic."""
    G = pingpong_group(max_word_length=7)
    o = BallPoint.of(0.1 + 0.05j)
    serial = expand_orbit(G, o, 4.5)
    parallel = expand_orbit(G, o, 4.5, workers=4)
    assert np.array_equal(serial.points, parallel.points)
    assert np.array_equal(serial.distances, parallel.distances)
    assert serial.words_expanded == parallel.words_expanded


def test_fuchsian_embed_of_S_is_half_turn():
    """Test that S acts on the disk as z -> -z."""
    s = fuchsian_embed(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert np.allclose(s.matrix, np.diag([-1j, 1j]))


def test_fuchsian_embed_rejects_bad_determinant():
    """Test the SL(2, R) check."""
    with pytest.raises(DomainError):
        fuchsian_embed(np.array([[2.0, 0.0], [0.0, 1.0]]))


def test_modular_stabilizer_at_origin():
    """Test that the image of i is fixed by S, so two elements share each orbit point."""
    o = BallPoint.origin(1)
    res = count_lattice_points(modular_group(), o, o, 1.0)
    assert res.stabilizer_order == 2
    assert res.group_count == 2 * res.count


@pytest.mark.slow
def test_modular_growth_against_main_term():
    """Test N_group(T) / A(T) for the modular group approaches 1."""
    o = BallPoint.origin(1)
    data = eigen_from_covolume(MODULAR_COVOLUME, 1)
    expansion = expand_orbit(modular_group(), o, 4.5)
    assert not expansion.truncated
    ratios = []
    for T in (3.0, 3.5, 4.0, 4.5):
        res = count_from_expansion(expansion, T)
        ratios.append(res.group_count / main_term_A(data, 1, T, o, o))
    assert 0.7 <= ratios[-1] <= 1.3
    assert abs(ratios[-1] - 1.0) <= abs(ratios[0] - 1.0) + 0.05
