"""Ball model of complex hyperbolic space CH^n.

The metric is ds^2 = |dz|^2 / (1 - |z|^2) + |<z, dz>|^2 / (1 - |z|^2)^2, with
curvature pinched in [-4, -1]. Along a radius d(0, t) = atanh(t), and the
volume element in geodesic polar coordinates is sinh^(2n-1) r cosh r dr dw.
"""

import math
from typing import Optional, Sequence

import numpy as np

from .config import TOL
from .errors import DomainError, NumericalError
from .models import BallPoint, Isometry, PolarPoint, form_matrix


def _sinh2_distance(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sinh^2 d(z, w) for broadcastable coordinate arrays (last axis = n).

    |1 - <z,w>|^2 - (1 - |z|^2)(1 - |w|^2)
        = |z - w|^2 - (|z|^2 |w|^2 - |<z,w>|^2)
    keeps small distances accurate.
    """
    inner = np.sum(z * np.conj(w), axis=-1)
    nz = np.sum(np.abs(z) ** 2, axis=-1)
    nw = np.sum(np.abs(w) ** 2, axis=-1)
    diff = np.sum(np.abs(z - w) ** 2, axis=-1)
    lagrange = nz * nw - np.abs(inner) ** 2
    return (diff - lagrange) / ((1.0 - nz) * (1.0 - nw))


def distances(z: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distances from one coordinate vector to each row of `points`."""
    s2 = _sinh2_distance(np.asarray(z, dtype=complex), np.asarray(points, dtype=complex))
    if np.any(s2 < -1e-12 * (1.0 + np.abs(s2))):
        raise NumericalError("negative squared distance; points left the ball")
    return np.arcsinh(np.sqrt(np.clip(s2, 0.0, None)))


def distance(z: BallPoint, w: BallPoint) -> float:
    """Geodesic distance, arccosh sqrt(|1 - <z,w>|^2 / ((1 - |z|^2)(1 - |w|^2)))."""
    if z.n != w.n:
        raise DomainError(f"dimension mismatch: {z.n} vs {w.n}")
    return float(distances(z.coords, w.coords))


def apply_matrix(g: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Projective action on raw coordinates; g and coords broadcast."""
    coords = np.asarray(coords, dtype=complex)
    n = coords.shape[-1]
    ones = np.ones(coords.shape[:-1] + (1,), dtype=complex)
    lifted = np.concatenate([coords, ones], axis=-1)
    v = (g @ lifted[..., None])[..., 0]
    s = v[..., n]
    if np.any(s == 0):
        raise NumericalError("isometry sent a point to infinity")
    return v[..., :n] / s[..., None]


def apply_isometry(g: Isometry, z: BallPoint) -> BallPoint:
    """u / s where g (z; 1) = (u; s)."""
    if g.n != z.n:
        raise DomainError(f"isometry acts on CH^{g.n}, point is in CH^{z.n}")
    return BallPoint(coords=apply_matrix(g.matrix, z.coords))


def compose(g: Isometry, h: Isometry) -> Isometry:
    """g after h."""
    return Isometry(matrix=g.matrix @ h.matrix)


def inverse_matrix(g: np.ndarray) -> np.ndarray:
    """J g* J, the inverse of a form-preserving matrix."""
    j = form_matrix(g.shape[-1] - 1)
    return j @ np.conj(np.swapaxes(g, -1, -2)) @ j


def isometry_inverse(g: Isometry) -> Isometry:
    return Isometry(matrix=inverse_matrix(g.matrix))


def make_loxodromic(n: int, ell: float) -> Isometry:
    """Translation by ell along the geodesic through 0 in the first axis."""
    if n < 1:
        raise DomainError("dimension must be at least 1")
    if not ell > 0:
        raise DomainError(f"translation length must be positive, got {ell}")
    g = np.eye(n + 1, dtype=complex)
    g[0, 0] = g[n, n] = math.cosh(ell)
    g[0, n] = g[n, 0] = math.sinh(ell)
    return Isometry(matrix=g)


def make_rotation(n: int, thetas: Sequence[float]) -> Isometry:
    """diag(e^{i theta_1}, ..., e^{i theta_n}, 1), fixing the origin."""
    if len(thetas) != n:
        raise DomainError(f"expected {n} angles, got {len(thetas)}")
    diag = np.append(np.exp(1j * np.asarray(thetas, dtype=float)), 1.0 + 0j)
    return Isometry(matrix=np.diag(diag))


def translation_matrix(a: np.ndarray) -> np.ndarray:
    """Boost taking the origin to `a` along the complex line through 0 and a."""
    a = np.asarray(a, dtype=complex)
    n = a.size
    rho = float(np.sqrt(np.sum(np.abs(a) ** 2)))
    g = np.eye(n + 1, dtype=complex)
    if rho == 0.0:
        return g
    if rho >= 1.0:
        raise DomainError("translation target must lie inside the ball")
    r = math.atanh(rho)
    e = a / rho
    g[:n, :n] += (math.cosh(r) - 1.0) * np.outer(e, np.conj(e))
    g[:n, n] = math.sinh(r) * e
    g[n, :n] = math.sinh(r) * np.conj(e)
    g[n, n] = math.cosh(r)
    return g


def translation_to(a: BallPoint) -> Isometry:
    return Isometry(matrix=translation_matrix(a.coords))


def random_isometry(n: int, rng: np.random.Generator, max_shift: float = 0.8) -> Isometry:
    """Unitary rotation followed by a boost to a random point."""
    gauss = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(gauss)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    k = np.eye(n + 1, dtype=complex)
    k[:n, :n] = q
    direction = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    direction /= np.linalg.norm(direction)
    target = math.tanh(rng.uniform(0.0, max_shift)) * direction
    return Isometry(matrix=translation_matrix(target) @ k)


def sphere_volume(n: int) -> float:
    """Volume of the unit sphere S^(2n-1), 2 pi^n / Gamma(n)."""
    return 2.0 * math.pi**n / math.gamma(n)


def ball_volume_element(n: int, r: np.ndarray) -> np.ndarray:
    """Radial density sinh^(2n-1) r cosh r."""
    r = np.asarray(r, dtype=float)
    return np.sinh(r) ** (2 * n - 1) * np.cosh(r)


def volume_ball(n: int, T: float) -> float:
    """pi^n sinh^(2n) T / Gamma(n+1)."""
    if not T > 0:
        raise DomainError(f"radius must be positive, got {T}")
    return math.pi**n * math.sinh(T) ** (2 * n) / math.gamma(n + 1)


def omega_to_complex(omega: np.ndarray) -> np.ndarray:
    """(x1, y1, ..., xn, yn) -> (x1 + i y1, ..., xn + i yn)."""
    omega = np.asarray(omega, dtype=float)
    return omega[..., 0::2] + 1j * omega[..., 1::2]


def complex_to_omega(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    out = np.empty(u.shape[:-1] + (2 * u.shape[-1],), dtype=float)
    out[..., 0::2] = u.real
    out[..., 1::2] = u.imag
    return out


def polar_to_ball(p: PolarPoint, center: Optional[BallPoint] = None) -> BallPoint:
    """x = tanh(r) omega, moved to `center` when one is given."""
    if p.r > TOL.max_polar_radius:
        raise DomainError(f"r = {p.r} exceeds {TOL.max_polar_radius}")
    local = math.tanh(p.r) * omega_to_complex(p.omega)
    if center is not None:
        local = apply_matrix(translation_matrix(center.coords), local)
    try:
        return BallPoint(coords=local)
    except ValueError as exc:
        raise DomainError(f"r = {p.r} is indistinguishable from the boundary") from exc


def ball_to_polar(z: BallPoint, center: Optional[BallPoint] = None) -> PolarPoint:
    """Inverse of polar_to_ball; the direction at r = 0 is the first axis."""
    coords = z.coords
    if center is not None:
        back = inverse_matrix(translation_matrix(center.coords))
        coords = apply_matrix(back, coords)
    rho = float(np.sqrt(np.sum(np.abs(coords) ** 2)))
    if rho == 0.0:
        omega = np.zeros(2 * z.n)
        omega[0] = 1.0
        return PolarPoint(r=0.0, omega=omega)
    return PolarPoint(r=math.atanh(rho), omega=complex_to_omega(coords / rho))
