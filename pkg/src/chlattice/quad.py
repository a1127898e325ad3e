"""Numerical integration and differentiation shared by every module."""

import logging
import math
from enum import Enum
from functools import lru_cache
from typing import Any, Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import comb, roots_legendre

from .chgeom import apply_matrix, ball_volume_element, sphere_volume, translation_matrix
from .config import FD_LEVELS, FD_STEP, TOL
from .errors import DomainError, NumericalError
from .models import BallPoint, QuadResult

logger = logging.getLogger(__name__)

# Subinterval cap handed to scipy's adaptive integrator
QUAD_LIMIT = 200
# Radial node counts tried by integrate_ball before giving up
MAX_RADIAL_NODES = 512
# Sample count for the Monte Carlo sphere rule (n >= 4)
MC_SAMPLES = 4096


class Singularity(str, Enum):
    """Endpoints carrying an inverse-square-root singularity."""

    NONE = "none"
    LEFT = "left"
    RIGHT = "right"
    BOTH = "both"


class DerivativeResult(NamedTuple):
    value: Any
    est_error: Any


@lru_cache(maxsize=64)
def _legendre(k: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(k)
    return x, w


def gauss_legendre(k: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """k-point Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _legendre(k)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def richardson_derivative(
    func: Callable[[np.ndarray], Any],
    x: Any,
    order: int,
    *,
    step: Any = FD_STEP,
    levels: int = FD_LEVELS,
    strict: bool = True,
    stall_rtol: float = 1e-6,
) -> DerivativeResult:
    """order-th derivative by central differences and Richardson extrapolation.

    `func` maps a 1-d array of abscissae to values. `x` and `step` may be arrays;
    each entry is differentiated with its own step.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    scalar = np.ndim(x) == 0
    if order < 0:
        raise DomainError("derivative order must be nonnegative")
    if order == 0:
        values = np.asarray(func(xs))
        zeros = np.zeros(xs.shape)
        return DerivativeResult(values[0], 0.0) if scalar else DerivativeResult(values, zeros)

    h0 = np.broadcast_to(np.asarray(step, dtype=float), xs.shape)
    k = np.arange(order + 1)
    offsets = order / 2.0 - k
    weights = (-1.0) ** k * comb(order, k)

    table: list[list[np.ndarray]] = []
    for level in range(levels):
        h = h0 / 2.0**level
        pts = xs[:, None] + offsets[None, :] * h[:, None]
        vals = np.asarray(func(pts.ravel())).reshape(pts.shape)
        row = [vals @ weights / h**order]
        for j in range(1, level + 1):
            prev = row[j - 1]
            row.append(prev + (prev - table[level - 1][j - 1]) / (4.0**j - 1.0))
        table.append(row)

    diagonal = [table[i][i] for i in range(levels)]
    value = diagonal[-1]
    if levels == 1:
        est = np.zeros(xs.shape)
    else:
        est = np.abs(diagonal[-1] - diagonal[-2])
        if strict and levels >= 3:
            previous = np.abs(diagonal[-2] - diagonal[-3])
            stalled = (est >= previous) & (est > stall_rtol * (np.abs(value) + 1e-300))
            if np.any(stalled):
                raise NumericalError(
                    "Richardson extrapolation did not reduce the error estimate"
                )
    if scalar:
        return DerivativeResult(value[0], float(est[0]))
    return DerivativeResult(value, est)


def _substitute(
    f: Callable[[float], float],
    a: float,
    b: float,
    singular: Singularity,
    points: Optional[Sequence[float]],
) -> tuple[Callable[[float], float], float, float, Optional[list[float]]]:
    width = b - a
    inner = [p for p in (points or ()) if a < p < b]

    if singular is Singularity.RIGHT:
        def g(u: float) -> float:
            return 2.0 * u * f(b - u * u)

        return g, 0.0, math.sqrt(width), [math.sqrt(b - p) for p in inner]
    if singular is Singularity.LEFT:
        def g(u: float) -> float:
            return 2.0 * u * f(a + u * u)

        return g, 0.0, math.sqrt(width), [math.sqrt(p - a) for p in inner]
    if singular is Singularity.BOTH:
        def g(theta: float) -> float:
            return width * math.sin(2.0 * theta) * f(a + width * math.sin(theta) ** 2)

        mapped = [math.asin(math.sqrt((p - a) / width)) for p in inner]
        return g, 0.0, 0.5 * math.pi, mapped
    return f, a, b, inner


def integrate_1d(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = TOL.quad_tol,
    *,
    singular: Singularity = Singularity.NONE,
    points: Optional[Sequence[float]] = None,
    limit: int = QUAD_LIMIT,
) -> QuadResult:
    """Adaptive Gauss-Kronrod quadrature of f over [a, b].

    Declared inverse-square-root endpoint singularities are removed by an
    algebraic substitution (t = b - u^2, t = a + u^2, or a sin^2 map for both
    ends) before adaptive subdivision.
    """
    if not a < b:
        raise DomainError(f"empty interval [{a}, {b}]")
    g, lo, hi, mapped = _substitute(f, a, b, Singularity(singular), points)
    out = integrate.quad(
        g,
        lo,
        hi,
        epsabs=tol,
        epsrel=tol,
        limit=limit,
        points=sorted(mapped) if mapped else None,
        full_output=1,
    )
    value, abserr, info = out[0], out[1], out[2]
    if len(out) > 3:
        allowed = 1e3 * max(tol, tol * abs(value))
        if not np.isfinite(abserr) or abserr > allowed:
            raise NumericalError(f"adaptive quadrature failed: {out[3]}")
        logger.debug("quad accepted with warning: %s", out[3])
    return QuadResult(
        value=float(value),
        est_error=float(abserr),
        evaluations=max(int(info["neval"]), 1),
    )


def _sphere_rule(n: int, rng_seed: int) -> tuple[np.ndarray, np.ndarray, bool]:
    """Unit directions in C^n and weights summing to vol(S^(2n-1)).

    Directions are (sqrt(u_1) e^{i t_1}, ..., sqrt(u_n) e^{i t_n}) with u uniform
    on the simplex and t uniform, which is the uniform measure on the sphere.
    """
    vol = sphere_volume(n)
    if n == 1:
        m = 64
        theta = 2.0 * math.pi * np.arange(m) / m
        return np.exp(1j * theta)[:, None], np.full(m, vol / m), False
    if n in (2, 3):
        phases = 16 if n == 2 else 8
        gl = 12 if n == 2 else 8
        theta = 2.0 * math.pi * np.arange(phases) / phases
        if n == 2:
            s, ws = gauss_legendre(gl, 0.0, 1.0)
            moduli = np.stack([s, 1.0 - s], axis=-1)
            mod_w = ws
        else:
            s, ws = gauss_legendre(gl, 0.0, 1.0)
            v, wv = gauss_legendre(gl, 0.0, 1.0)
            ss, vv = np.meshgrid(s, v, indexing="ij")
            moduli = np.stack(
                [ss.ravel(), ((1.0 - ss) * vv).ravel(), ((1.0 - ss) * (1.0 - vv)).ravel()],
                axis=-1,
            )
            mod_w = (np.outer(ws * 2.0 * (1.0 - s), wv)).ravel()
        grids = np.meshgrid(*([theta] * n), indexing="ij")
        angle = np.stack([g.ravel() for g in grids], axis=-1)
        dirs = np.sqrt(moduli)[:, None, :] * np.exp(1j * angle)[None, :, :]
        weights = np.outer(mod_w, np.full(angle.shape[0], 1.0 / angle.shape[0]))
        return dirs.reshape(-1, n), vol * weights.ravel(), False

    rng = np.random.default_rng(rng_seed)
    gauss = rng.standard_normal((MC_SAMPLES, 2 * n))
    gauss /= np.linalg.norm(gauss, axis=1, keepdims=True)
    dirs = gauss[:, 0::2] + 1j * gauss[:, 1::2]
    return dirs, np.full(MC_SAMPLES, vol / MC_SAMPLES), True


def pointwise(f: Callable[[BallPoint], float]) -> Callable[[np.ndarray], np.ndarray]:
    """Lift a BallPoint function to rows of a coordinate array."""

    def vectorized(points: np.ndarray) -> np.ndarray:
        return np.array([f(BallPoint.model_construct(coords=p)) for p in points], dtype=float)

    return vectorized


def integrate_ball(
    f: Callable[..., Any],
    center: BallPoint,
    T: float,
    n: int,
    tol: float = 1e-8,
    *,
    vectorized: bool = False,
    radial_points: int = 32,
    rng_seed: int = 0,
) -> QuadResult:
    """Integral of f over the geodesic ball B(center, T) against d(mu).

    Radial Gauss-Legendre nodes carry the weight sinh^(2n-1) r cosh r; the
    radial rule is doubled until two successive values agree to tol.
    """
    if center.n != n:
        raise DomainError(f"center lies in CH^{center.n}, expected n={n}")
    if not T > 0:
        raise DomainError(f"radius must be positive, got {T}")
    f_vec = f if vectorized else pointwise(f)
    dirs, sphere_w, monte_carlo = _sphere_rule(n, rng_seed)
    if monte_carlo:
        logger.debug("Monte Carlo sphere rule with %d samples (n=%d)", dirs.shape[0], n)
    lift = translation_matrix(center.coords)

    evaluations = 0

    def radial(k: int) -> tuple[float, float]:
        nonlocal evaluations
        r, wr = gauss_legendre(k, 0.0, T)
        wr = wr * ball_volume_element(n, r)
        local = np.tanh(r)[:, None, None] * dirs[None, :, :]
        points = apply_matrix(lift, local.reshape(-1, n))
        values = np.asarray(f_vec(points), dtype=float).reshape(k, dirs.shape[0])
        evaluations += values.size
        per_direction = wr @ values
        total = float(per_direction @ sphere_w)
        stderr = 0.0
        if monte_carlo:
            samples = per_direction * sphere_w.sum()
            stderr = float(np.std(samples, ddof=1) / math.sqrt(samples.size))
        return total, stderr

    k = radial_points
    previous, _ = radial(k)
    while True:
        k *= 2
        current, stderr = radial(k)
        radial_err = abs(current - previous)
        if radial_err <= tol * max(1.0, abs(current)) or k >= MAX_RADIAL_NODES:
            break
        previous = current

    flagged = False
    if radial_err > tol * max(1.0, abs(current)):
        flagged = True
        logger.warning("radial rule did not settle: error %.3e at %d nodes", radial_err, k)
    if monte_carlo and stderr > tol:
        flagged = True
        logger.warning("Monte Carlo standard error %.3e exceeds tolerance %.1e", stderr, tol)
    return QuadResult(
        value=current,
        est_error=max(radial_err, stderr),
        evaluations=evaluations,
        flagged=flagged,
    )
