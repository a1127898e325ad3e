"""Jacobi functions, the kernel H_n(lambda, T) and discrete-spectrum main terms.

Only the point masses of the spectral function are modeled: the truncated
average keeps the discrete eigenvalues and drops the continuous spectrum.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np

from .average import bump_density
from .errors import DegenerateConnectionError, DomainError, NumericalError
from .hypgeo import hyp2f1, hyp2f1_real
from .models import BallPoint, BumpProfile, SpectralData, SpectralEntry
from .quad import Singularity, integrate_1d, integrate_ball, pointwise

logger = logging.getLogger(__name__)

# Largest |Im| tolerated on a value that is real in exact arithmetic
IMAG_RESIDUE = 1e-10
# Ratio |H| lambda^((2n+1)/4) / envelope accepted by the decay check
DECAY_SLACK = 1.5

Window = tuple[float, float]


def jacobi_phi(alpha: float, beta: float, lam: float, x: float) -> float:
    """Jacobi function phi_lambda^(alpha, beta)(x).

    F((rho - i sqrt(lam))/2, (rho + i sqrt(lam))/2, alpha + 1, -sinh^2 x).

    rho = alpha + beta + 1. For lam < 0 the square root is i sqrt|lam| and all
    parameters are real.
    """
    if not alpha > -1:
        raise DomainError(f"alpha = {alpha} must exceed -1")
    if x < 0:
        raise DomainError(f"x = {x} must be nonnegative")
    rho = alpha + beta + 1.0
    if lam >= 0:
        root = 1j * math.sqrt(lam)
        a, b = (rho - root) / 2.0, (rho + root) / 2.0
    else:
        mu = math.sqrt(-lam)
        a, b = complex((rho - mu) / 2.0), complex((rho + mu) / 2.0)
    value = hyp2f1(a, b, alpha + 1.0, -math.sinh(x) ** 2)
    if abs(value.imag) > IMAG_RESIDUE * max(1.0, abs(value.real)):
        raise NumericalError(f"Jacobi function has imaginary residue {value.imag:.3e}")
    return value.real


def _check_h_args(n: int, lam: float, T: float) -> None:
    if n < 1:
        raise DomainError("dimension must be at least 1")
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    if lam < -n * n:
        raise DomainError(f"lambda = {lam} is below -n^2 = {-n * n}")


def H_n_closed(n: int, lam: float, T: float) -> float:
    """sinh^(2n) T F((n - i sqrt(lam))/2, (n + i sqrt(lam))/2, n + 1, -sinh^2 T)."""
    _check_h_args(n, lam, T)
    return math.sinh(T) ** (2 * n) * jacobi_phi(float(n), -1.0, lam, T)


def mehler_fock_constant(n: int) -> float:
    """Gamma(n+1) 2^(n+1/2) / (sqrt(pi) Gamma(n+1/2))."""
    return math.exp(
        math.lgamma(n + 1)
        + (n + 0.5) * math.log(2.0)
        - 0.5 * math.log(math.pi)
        - math.lgamma(n + 0.5)
    )


def H_n_quadrature(n: int, lam: float, T: float, tol: float = 1e-12) -> float:
    """H_n(lambda, T) from its integral representation in t.

    M_n cosh^(1/2) T times the integral over [0, T] of
    (cosh T - cosh t)^(n-1/2) F(-1/2, 3/2, n+1/2, (cosh T - cosh t)/(2 cosh T))
    against cos(sqrt(lam) t), or cosh(sqrt|lam| t) when lam < 0.
    """
    _check_h_args(n, lam, T)
    C = math.cosh(T)
    if lam >= 0:
        root = math.sqrt(lam)

        def wave(t: float) -> float:
            return math.cos(root * t)
    else:
        root = math.sqrt(-lam)

        def wave(t: float) -> float:
            return math.cosh(root * t)

    def integrand(t: float) -> float:
        gap = max(C - math.cosh(t), 0.0)
        return gap ** (n - 0.5) * hyp2f1_real(-0.5, 1.5, n + 0.5, gap / (2.0 * C)) * wave(t)

    res = integrate_1d(integrand, 0.0, T, tol=tol, singular=Singularity.RIGHT)
    return mehler_fock_constant(n) * math.sqrt(C) * res.value


def H_n(n: int, lam: float, T: float) -> float:
    """Closed form where the hypergeometric engine reaches, quadrature otherwise."""
    try:
        return H_n_closed(n, lam, T)
    except DegenerateConnectionError:
        logger.debug("H_%d(%g, %g): degenerate connection, using the integral form", n, lam, T)
        return H_n_quadrature(n, lam, T)


def decay_envelope(n: int, T: float) -> float:
    """Bound on |H_n(lambda, T)| lambda^((2n+1)/4) for large lambda."""
    return (
        mehler_fock_constant(n)
        * math.sqrt(math.cosh(T))
        * math.gamma(n + 0.5)
        * math.sinh(T) ** (n - 0.5)
    )


def decay_profile(n: int, T: float, lams: Sequence[float]) -> list[float]:
    """|H_n(lambda, T)| lambda^((2n+1)/4) for each lambda > 0."""
    out = []
    for lam in lams:
        if not lam > 0:
            raise DomainError(f"decay profile needs lambda > 0, got {lam}")
        out.append(abs(H_n_quadrature(n, lam, T)) * lam ** ((2 * n + 1) / 4.0))
    return out


def admissible_window(n: int) -> list[Window]:
    """Half-open intervals [lo, hi) of eigenvalues with a meaningful main term."""
    if n < 1:
        raise DomainError("dimension must be at least 1")
    if n == 1:
        logger.info("n = 1: using the window [-1, 0)")
        return [(-1.0, 0.0)]
    shrink = ((2 * n - 1) / (2 * n + 1)) ** 2
    windows = [(-float(n * n), -((n - 1) ** 2) * shrink)]
    if n > 2:
        windows.append((-float(n * n), -((n - 2) ** 2) * shrink))
    return windows


def is_admissible(n: int, lam: float) -> bool:
    return any(lo <= lam < hi for lo, hi in admissible_window(n))


def _admissible_entries(S: SpectralData, n: int) -> list[SpectralEntry]:
    if S.n is not None and S.n != n:
        raise DomainError(f"spectral data belongs to CH^{S.n}, not CH^{n}")
    kept = []
    for entry in S.entries:
        if not is_admissible(n, entry.lam):
            logger.warning(
                "eigenvalue %g lies outside the admissible window; excluded", entry.lam
            )
            continue
        if entry.mu == 0:
            logger.warning("eigenvalue 0 carries no main term; excluded")
            continue
        kept.append(entry)
    if not kept:
        logger.warning("no admissible eigenvalues; main term is 0")
    return kept


def c_j_coefficient(n: int, mu: float) -> float:
    """Gamma(n+1) Gamma(mu) 2^(n-mu) / (Gamma((n+mu)/2) Gamma(1+(n+mu)/2)).

    Leading coefficient of F((n+mu)/2, (n-mu)/2, n+1, -sinh^2 T) e^((n-mu)T).
    """
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu}")
    half = (n + mu) / 2.0
    return math.exp(
        math.lgamma(n + 1)
        + math.lgamma(mu)
        + (n - mu) * math.log(2.0)
        - math.lgamma(half)
        - math.lgamma(1.0 + half)
    )


def main_term_A(S: SpectralData, n: int, T: float, z: BallPoint, zprime: BallPoint) -> float:
    """Discrete-spectrum main term A(T, z, z').

    (pi/2)^n sum_j 2^(-mu) Gamma(mu) e^((n+mu)T) phi_j(z) phi_j(z')
    / (Gamma((n+mu)/2) Gamma(1+(n+mu)/2)), evaluated in log space.
    """
    if z.n != n or zprime.n != n:
        raise DomainError(f"points must lie in CH^{n}")
    total = 0.0
    for entry in _admissible_entries(S, n):
        mu = entry.mu
        half = (n + mu) / 2.0
        log_coef = (
            n * math.log(math.pi / 2.0)
            - mu * math.log(2.0)
            + math.lgamma(mu)
            + (n + mu) * T
            - math.lgamma(half)
            - math.lgamma(1.0 + half)
        )
        total += math.exp(log_coef) * entry.phi(z) * entry.phi(zprime)
    return total


def bump_pairing(entry: SpectralEntry, B: BumpProfile, tol: float = 1e-9) -> float:
    """Integral of phi_j h over the bump support."""
    density = bump_density(B)
    phi = pointwise(entry.phi)

    def f(points: np.ndarray) -> np.ndarray:
        return density(points) * phi(points)

    res = integrate_ball(f, B.center, B.alpha, B.n, tol=tol, vectorized=True)
    if res.flagged:
        logger.warning("eigenfunction pairing for lambda=%g is flagged", entry.lam)
    return res.value


def spectral_average_truncated(
    S: SpectralData,
    B: BumpProfile,
    n: int,
    T: float,
    zprime: BallPoint,
    *,
    workers: int = 1,
) -> float:
    """(pi^n / Gamma(n+1)) sum_j H_n(lambda_j, T) phi_j(z') integral(phi_j h)."""
    if B.n != n or zprime.n != n:
        raise DomainError(f"bump and point must lie in CH^{n}")
    entries = _admissible_entries(S, n)

    def term(entry: SpectralEntry) -> float:
        return H_n(n, entry.lam, T) * entry.phi(zprime) * bump_pairing(entry, B)

    if workers > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(term, entries))
    else:
        parts = [term(e) for e in entries]
    return math.pi**n / math.gamma(n + 1) * sum(parts)


def constant_phi(value: float) -> Callable[[BallPoint], float]:
    def phi(_: BallPoint) -> float:
        return value

    return phi


def eigen_from_covolume(covolume: float, n: int) -> SpectralData:
    """Bottom of the spectrum of a finite-covolume group: lambda = -n^2, phi = 1/sqrt(V)."""
    if not covolume > 0:
        raise DomainError(f"covolume must be positive, got {covolume}")
    entry = SpectralEntry(lam=-float(n * n), phi=constant_phi(1.0 / math.sqrt(covolume)))
    return SpectralData(entries=[entry], covolume=covolume, n=n)


def check_decay(
    n: int, T: float, lams: Sequence[float], slack: Optional[float] = None
) -> bool:
    """True when every scaled |H_n| stays below slack times the envelope."""
    bound = (slack or DECAY_SLACK) * decay_envelope(n, T)
    return all(v <= bound for v in decay_profile(n, T, lams))
