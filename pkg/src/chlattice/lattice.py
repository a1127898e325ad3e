"""Orbit enumeration for discrete isometry groups and the count N(T, z, z').

The group is explored breadth first over reduced words, one word length per
level. A child is the parent multiplied on the right by a generator, so the
orbit points of consecutive prefixes of a word stay within one generator
displacement of each other. Group elements are told apart by where they send
a generic witness point; orbit points of z' are merged within dedup_tol.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from .chgeom import (
    apply_matrix,
    distances,
    inverse_matrix,
    make_loxodromic,
    make_rotation,
    translation_matrix,
)
from .config import TOL
from .errors import DomainError
from .models import BallPoint, CountResult, GroupSpec, Isometry, OrbitPoint

logger = logging.getLogger(__name__)

# Hyperbolic offset of the witness point from z'
WITNESS_SHIFT = 0.0731
# Hash cell for witness images; distinct elements land far apart
WITNESS_CELL = 1e-10
# Candidate children handled per worker task
CHUNK = 4096

# Area pi/3 of the modular surface rescaled to curvature -4
MODULAR_COVOLUME = math.pi / 12.0

_CAYLEY = np.array([[1.0, -1.0j], [1.0, 1.0j]])
_CAYLEY_INV = np.linalg.inv(_CAYLEY)


class OrbitExpansion(BaseModel):
    """Distinct orbit points of z' near a center, with enumeration counters."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    points: np.ndarray
    word_lengths: np.ndarray
    distances: np.ndarray
    radius_bound: float
    words_expanded: int
    pruned: int
    truncated: bool
    stabilizer_order: int


class _PointHash:
    """Grid hash over real coordinates with a neighbour-cell lookup."""

    def __init__(self, cell: float, n: int) -> None:
        self.cell = cell
        self.buckets: dict[tuple[int, ...], list[int]] = {}
        self.points: list[np.ndarray] = []
        self.offsets = list(itertools.product((-1, 0, 1), repeat=2 * n))

    def keys(self, coords: np.ndarray) -> np.ndarray:
        real = np.concatenate([coords.real, coords.imag], axis=-1)
        return np.floor(real / self.cell).astype(np.int64)

    def find(self, key: np.ndarray, point: np.ndarray) -> Optional[int]:
        base = tuple(int(k) for k in key)
        for offset in self.offsets:
            cell = tuple(b + o for b, o in zip(base, offset))
            for idx in self.buckets.get(cell, ()):
                if np.max(np.abs(self.points[idx] - point)) <= self.cell:
                    return idx
        return None

    def add(self, key: np.ndarray, point: np.ndarray) -> int:
        idx = len(self.points)
        self.points.append(point)
        self.buckets.setdefault(tuple(int(k) for k in key), []).append(idx)
        return idx


def _generator_table(G: GroupSpec) -> tuple[np.ndarray, np.ndarray]:
    mats = [g.matrix for g in G.generators]
    k = len(mats)
    inverse_of = np.full(k, -2, dtype=np.int64)
    if G.include_inverses and k:
        mats += [inverse_matrix(m) for m in mats]
        inverse_of = np.concatenate([np.arange(k, 2 * k), np.arange(k)])
    if not mats:
        return np.zeros((0, G.n + 1, G.n + 1), dtype=complex), inverse_of
    return np.stack(mats), inverse_of


def _witness_point(base: np.ndarray) -> np.ndarray:
    n = base.size
    direction = np.exp(1j * (0.37 + 1.13 * np.arange(n))) / math.sqrt(n)
    local = math.tanh(WITNESS_SHIFT) * direction
    return apply_matrix(translation_matrix(base), local)


def prune_margin(G: GroupSpec, base: BallPoint) -> float:
    """2 * max displacement of a generator at the base point."""
    if G.prune_margin is not None:
        return G.prune_margin
    gens, _ = _generator_table(G)
    if gens.shape[0] == 0:
        return 0.0
    images = apply_matrix(gens, base.coords)
    return 2.0 * float(np.max(distances(base.coords, images)))


def _expand_chunk(
    frontier: np.ndarray,
    gens: np.ndarray,
    parents: np.ndarray,
    choices: np.ndarray,
    base: np.ndarray,
    witness: np.ndarray,
    center: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    mats = frontier[parents] @ gens[choices]
    orbit = apply_matrix(mats, base)
    return mats, orbit, apply_matrix(mats, witness), distances(center, orbit)


def expand_orbit(
    G: GroupSpec,
    zprime: BallPoint,
    radius_bound: float,
    *,
    center: Optional[BallPoint] = None,
    workers: int = 1,
) -> OrbitExpansion:
    """Breadth-first orbit expansion of z' around `center` (default z')."""
    if not radius_bound > 0:
        raise DomainError(f"radius bound must be positive, got {radius_bound}")
    if zprime.n != G.n:
        raise DomainError(f"base point lies in CH^{zprime.n}, group acts on CH^{G.n}")
    center = center if center is not None else zprime
    if center.n != G.n:
        raise DomainError(f"center lies in CH^{center.n}, group acts on CH^{G.n}")

    gens, inverse_of = _generator_table(G)
    base = zprime.coords
    ctr = center.coords
    witness = _witness_point(base)
    limit = radius_bound + prune_margin(G, zprime)

    elements = _PointHash(WITNESS_CELL, G.n)
    elements.add(elements.keys(witness), witness)
    orbit = _PointHash(G.dedup_tol, G.n)
    orbit.add(orbit.keys(base), base)
    word_lengths = [0]
    dists = [float(distances(ctr, base))]

    frontier = np.eye(G.n + 1, dtype=complex)[None]
    last = np.array([-1])
    words_expanded = 1
    stabilizer = 1
    pruned = 0
    k = gens.shape[0]

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for level in range(1, G.max_word_length + 1):
            if frontier.shape[0] == 0 or k == 0:
                frontier = frontier[:0]
                break
            parents = np.repeat(np.arange(frontier.shape[0]), k)
            choices = np.tile(np.arange(k), frontier.shape[0])
            prev = last[parents]
            reduced = (prev < 0) | (choices != inverse_of[np.maximum(prev, 0)])
            parents, choices = parents[reduced], choices[reduced]

            spans = [(s, min(s + CHUNK, parents.size)) for s in range(0, parents.size, CHUNK)]
            args = [
                (frontier, gens, parents[a:b], choices[a:b], base, witness, ctr)
                for a, b in spans
            ]
            if pool is not None:
                parts = list(pool.map(lambda p: _expand_chunk(*p), args))
            else:
                parts = [_expand_chunk(*p) for p in args]
            if not parts:
                frontier = frontier[:0]
                break
            mats = np.concatenate([p[0] for p in parts])
            points = np.concatenate([p[1] for p in parts])
            witnesses = np.concatenate([p[2] for p in parts])
            child_d = np.concatenate([p[3] for p in parts])

            keep = child_d <= limit
            pruned += int(np.count_nonzero(~keep))
            survivors = np.flatnonzero(keep)
            witness_keys = elements.keys(witnesses[survivors])
            orbit_keys = orbit.keys(points[survivors])

            fresh = []
            for j, idx in enumerate(survivors):
                if elements.find(witness_keys[j], witnesses[idx]) is not None:
                    continue
                elements.add(witness_keys[j], witnesses[idx])
                words_expanded += 1
                fresh.append(idx)
                slot = orbit.find(orbit_keys[j], points[idx])
                if slot is None:
                    orbit.add(orbit_keys[j], points[idx])
                    word_lengths.append(level)
                    dists.append(float(child_d[idx]))
                elif slot == 0:
                    stabilizer += 1

            frontier = mats[fresh]
            last = choices[fresh]
    finally:
        if pool is not None:
            pool.shutdown()

    truncated = frontier.shape[0] > 0
    if truncated:
        logger.warning(
            "orbit enumeration hit max_word_length=%d with %d live words",
            G.max_word_length,
            frontier.shape[0],
        )
    return OrbitExpansion(
        points=np.array(orbit.points, dtype=complex).reshape(-1, G.n),
        word_lengths=np.array(word_lengths, dtype=np.int64),
        distances=np.array(dists),
        radius_bound=radius_bound,
        words_expanded=words_expanded,
        pruned=pruned,
        truncated=truncated,
        stabilizer_order=stabilizer,
    )


def enumerate_orbit(
    G: GroupSpec,
    zprime: BallPoint,
    radius_bound: float,
    *,
    center: Optional[BallPoint] = None,
    workers: int = 1,
) -> Iterator[OrbitPoint]:
    """Stream the orbit points of z' within radius_bound of the center."""
    expansion = expand_orbit(G, zprime, radius_bound, center=center, workers=workers)
    for point, length, d in zip(
        expansion.points, expansion.word_lengths, expansion.distances
    ):
        if d <= radius_bound + TOL.boundary_tol:
            yield OrbitPoint(point=BallPoint(coords=point), word_length=int(length))


def count_from_expansion(expansion: OrbitExpansion, T: float) -> CountResult:
    """N(T) from an expansion whose radius bound is at least T."""
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    if T > expansion.radius_bound + TOL.boundary_tol:
        raise DomainError(f"T = {T} exceeds the expansion radius {expansion.radius_bound}")
    d = expansion.distances
    strict = int(np.count_nonzero(d < T))
    boundary = int(np.count_nonzero((d >= T) & (d < T + TOL.boundary_tol)))
    if boundary:
        logger.info(
            "%d orbit point(s) within %.0e of T=%g counted inside",
            boundary,
            TOL.boundary_tol,
            T,
        )
    if expansion.truncated:
        logger.warning("count at T=%g is a lower bound (truncated enumeration)", T)
    count = strict + boundary
    return CountResult(
        count=count,
        words_expanded=expansion.words_expanded,
        pruned=expansion.pruned,
        truncated=expansion.truncated,
        stabilizer_order=expansion.stabilizer_order,
        group_count=count * expansion.stabilizer_order,
    )


def count_lattice_points(
    G: GroupSpec,
    z: BallPoint,
    zprime: BallPoint,
    T: float,
    *,
    workers: int = 1,
) -> CountResult:
    """N(T, z, z') = #{orbit points p of z' : d(z, p) < T}."""
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    expansion = expand_orbit(G, zprime, T, center=z, workers=workers)
    return count_from_expansion(expansion, T)


def fuchsian_embed(m: np.ndarray) -> Isometry:
    """Conjugate an SL(2, R) matrix into an isometry of CH^1 via the Cayley map."""
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2):
        raise DomainError(f"expected a 2x2 matrix, got shape {m.shape}")
    det = float(np.linalg.det(m))
    if abs(det - 1.0) > TOL.form_tol:
        raise DomainError(f"det m = {det:.15g}, expected 1")
    return Isometry(matrix=_CAYLEY @ m @ _CAYLEY_INV)


def trivial_group(n: int) -> GroupSpec:
    return GroupSpec(n=n, generators=[], max_word_length=1)


def cyclic_group(n: int, ell: float, max_word_length: int = 64) -> GroupSpec:
    return GroupSpec(
        n=n,
        generators=[make_loxodromic(n, ell)],
        include_inverses=True,
        max_word_length=max_word_length,
    )


def pingpong_group(ell: float = 1.5, max_word_length: int = 8) -> GroupSpec:
    """Two translations of length ell along perpendicular diameters of CH^1.

    The pair plays ping-pong once cosh(ell) > sqrt(2).
    """
    g1 = make_loxodromic(1, ell)
    rot = make_rotation(1, [math.pi / 2.0]).matrix
    g2 = Isometry(matrix=rot @ g1.matrix @ inverse_matrix(rot))
    return GroupSpec(
        n=1, generators=[g1, g2], include_inverses=True, max_word_length=max_word_length
    )


def modular_group(max_word_length: int = 600) -> GroupSpec:
    """PSL(2, Z) generated by S and T, acting on CH^1."""
    s = fuchsian_embed(np.array([[0.0, -1.0], [1.0, 0.0]]))
    t = fuchsian_embed(np.array([[1.0, 1.0], [0.0, 1.0]]))
    return GroupSpec(
        n=1, generators=[s, t], include_inverses=True, max_word_length=max_word_length
    )
