"""Smoothed lattice counts I(T, z, z', alpha).

Two routes compute the same number:

* direct: sum over orbit points of the bump mass inside the ball B(z', T),
* wave: integrate the explicit wave solution u(t, z') started from the
  automorphic bump data against the kernel in t.

Both reduce to one-dimensional integrals because the bump is radial. For a
point x at distance r from one center and distance D between the centers,
cosh d(x, p) = cosh r cosh D |1 - tanh r tanh D w_1|, where w_1 is the
component of the direction of x along the direction of p.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .chgeom import apply_isometry, ball_volume_element, distance, distances, sphere_volume
from .config import FD_LEVELS, MAX_KERNEL_DIMENSION, TOL
from .errors import DomainError, NumericalError
from .hypgeo import hyp2f1_real
from .lattice import OrbitExpansion, expand_orbit
from .models import BallPoint, BumpProfile, GroupSpec, Isometry, RouteResult, WaveConfig
from .quad import gauss_legendre, integrate_1d, richardson_derivative

logger = logging.getLogger(__name__)

# Exponent k of the cap profile (1 - t^2)^k
PROFILE_POWER = 3
# Nodes per piece for the |w_1|^2 integral of the overlap fraction
OVERLAP_U_POINTS = 48
# Wave-route shell integrals are evaluated this many t-nodes at a time
WAVE_BATCH = 16
# Kernel derivative step as a fraction of the distance cosh T - cosh t to the singularity
KERNEL_STEP_FRACTION = 0.1


def profile_kappa(n: int, power: int = PROFILE_POWER) -> float:
    """Constant making kappa (1 - |x|^2)^k a unit-mass density on R^(2n)."""
    return math.gamma(n + power + 1) / (math.gamma(power + 1) * math.pi**n)


def bump_normalization(n: int, alpha: float, power: int = PROFILE_POWER) -> float:
    """c_n(alpha) such that c_n(alpha) h1(d(x, center) / alpha) has unit mass."""
    if not 0 < alpha <= 0.5:
        raise DomainError(f"alpha = {alpha} must lie in (0, 0.5]")
    kappa = profile_kappa(n, power)

    def radial(t: float) -> float:
        shell = math.sinh(alpha * t) ** (2 * n - 1) * math.cosh(alpha * t)
        return kappa * (1.0 - t * t) ** power * shell

    res = integrate_1d(radial, 0.0, 1.0, tol=1e-14)
    mass = alpha * sphere_volume(n) * res.value
    if not mass > 0:
        raise NumericalError("bump profile integrates to zero")
    return 1.0 / mass


def make_bump(center: BallPoint, alpha: float, power: int = PROFILE_POWER) -> BumpProfile:
    n = center.n
    return BumpProfile(
        center=center,
        alpha=alpha,
        power=power,
        kappa=profile_kappa(n, power),
        c_alpha=bump_normalization(n, alpha, power),
    )


def bump_value(B: BumpProfile, x: BallPoint) -> float:
    """h(x) = c_n(alpha) h1(d(x, center) / alpha), zero off the support."""
    d = distance(x, B.center)
    if d >= B.alpha:
        return 0.0
    return float(B.c_alpha * B.h1(d / B.alpha))


def bump_density(B: BumpProfile) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized h over rows of ball coordinates."""

    def density(points: np.ndarray) -> np.ndarray:
        d = distances(B.center.coords, points)
        return B.c_alpha * B.h1(d / B.alpha)

    return density


def _inside_fraction(n: int, r: np.ndarray, D: float, R: float) -> np.ndarray:
    """Share of the sphere S(o, r) inside B(p, R) where d(o, p) = D."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    A = np.tanh(r) * math.tanh(D)
    beta = math.cosh(R) / (np.cosh(r) * math.cosh(D))
    out = np.where(beta > 1.0, 1.0, 0.0)
    live = A > 1e-14
    if not np.any(live):
        return out
    A, beta = A[live], beta[live]

    if n == 1:
        kappa = (1.0 + A * A - beta * beta) / (2.0 * A)
        out[live] = np.arccos(np.clip(kappa, -1.0, 1.0)) / math.pi
        return out

    kink = np.minimum((np.abs(beta - 1.0) / A) ** 2, 1.0)
    full = np.where(beta >= 1.0, 1.0 - (1.0 - kink) ** (n - 1), 0.0)
    w, ww = gauss_legendre(OVERLAP_U_POINTS, 0.0, 1.0)
    span = 1.0 - kink
    u = kink[:, None] + span[:, None] * w[None, :] ** 2
    du = 2.0 * span[:, None] * w[None, :] * ww[None, :]
    root = np.sqrt(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = (1.0 + A[:, None] ** 2 * u - beta[:, None] ** 2) / (2.0 * A[:, None] * root)
    frac = np.arccos(np.clip(np.nan_to_num(kappa, nan=1.0), -1.0, 1.0)) / math.pi
    density = (n - 1) * (1.0 - u) ** (n - 2)
    out[live] = full + np.sum(du * density * frac, axis=1)
    return out


def overlap_mass_at(B: BumpProfile, D: float, T: float) -> tuple[float, float]:
    """Bump mass inside B(z', T) when d(z', bump center) = D, with an error bar."""
    alpha = B.alpha
    if D <= T - alpha:
        return 1.0, 0.0
    if D >= T + alpha:
        return 0.0, 0.0
    n = B.n
    scale = B.c_alpha * sphere_volume(n)

    def integrand(r: float) -> float:
        frac = _inside_fraction(n, np.array([r]), D, T)[0]
        return float(scale * B.h1(r / alpha) * ball_volume_element(n, r) * frac)

    res = integrate_1d(integrand, 0.0, alpha, tol=1e-12, points=[abs(T - D)])
    return min(max(res.value, 0.0), 1.0), res.est_error


def ball_overlap_mass(B: BumpProfile, g: Isometry, zprime: BallPoint, T: float) -> float:
    """Integral of h over {x : d(g x, z') < T}."""
    D = distance(zprime, apply_isometry(g, B.center))
    return overlap_mass_at(B, D, T)[0]


def _orbit_for(
    G: GroupSpec,
    B: BumpProfile,
    zprime: BallPoint,
    T: float,
    workers: int,
    expansion: Optional[OrbitExpansion],
) -> OrbitExpansion:
    radius = T + B.alpha
    if expansion is None:
        return expand_orbit(G, zprime, radius, center=B.center, workers=workers)
    if expansion.radius_bound + TOL.boundary_tol < radius:
        raise DomainError(
            f"expansion radius {expansion.radius_bound} is below T + alpha = {radius}"
        )
    return expansion


def averaged_count_direct(
    G: GroupSpec,
    B: BumpProfile,
    zprime: BallPoint,
    T: float,
    *,
    workers: int = 1,
    expansion: Optional[OrbitExpansion] = None,
) -> RouteResult:
    """I(T, z, z', alpha) as a sum of overlap masses over the orbit."""
    orbit = _orbit_for(G, B, zprime, T, workers, expansion)
    value = 0.0
    err = 0.0
    translates = 0
    for D in orbit.distances:
        if D >= T + B.alpha:
            continue
        mass, mass_err = overlap_mass_at(B, float(D), T)
        value += mass
        err += mass_err
        translates += 1
    if orbit.truncated:
        logger.warning("direct route at T=%g is a lower bound (truncated enumeration)", T)
    return RouteResult(
        value=value, est_error=err, truncated=orbit.truncated, translates=translates
    )


def kernel_constant(n: int) -> float:
    """(-1)^(n-1) Gamma(n - 1/2) sqrt(2) / sqrt(pi)."""
    return (-1.0) ** (n - 1) * math.gamma(n - 0.5) * math.sqrt(2.0 / math.pi)


def wave_constant(n: int) -> float:
    """(-1)^(n-1) pi^(n-1/2) 2^(n+1/2) / Gamma(n - 1/2)."""
    return (-1.0) ** (n - 1) * math.pi ** (n - 0.5) * 2.0 ** (n + 0.5) / math.gamma(n - 0.5)


def _check_kernel_args(T: float, t: float) -> None:
    if not 0 < t < T:
        raise DomainError(f"need 0 < t < T, got t={t}, T={T}")
    if t > T - TOL.kernel_margin:
        raise DomainError(f"t = {t} is within {TOL.kernel_margin:g} of the singularity at T")


def kernel_K_closed(n: int, T: float, t: float) -> float:
    """c1_n cosh^(-1/2) T cosh t (cosh^2 T - cosh^2 t)^(-1/2)."""
    _check_kernel_args(T, t)
    C = math.cosh(T)
    s = math.cosh(t)
    return kernel_constant(n) * s / math.sqrt(C * (C - s) * (C + s))


def _kernel_seed(n: int, C: float, s: np.ndarray) -> np.ndarray:
    """(C - s)^(n - 3/2) F(-1/2, 3/2, n - 1/2, (C - s) / (2C))."""
    gap = C - np.asarray(s, dtype=float)
    return np.array(
        [
            g ** (n - 1.5) * hyp2f1_real(-0.5, 1.5, n - 0.5, g / (2.0 * C))
            for g in np.ravel(gap)
        ]
    ).reshape(np.shape(gap))


def kernel_K_defining(n: int, T: float, t: float, *, levels: int = FD_LEVELS) -> float:
    """(d / (sinh t dt))^(n-1) of the kernel seed, by extrapolated differences.

    With s = cosh t the operator is d/ds, so the derivative is taken in s.
    """
    if not 1 <= n <= MAX_KERNEL_DIMENSION:
        raise DomainError(f"n = {n} outside 1..{MAX_KERNEL_DIMENSION}")
    _check_kernel_args(T, t)
    C = math.cosh(T)
    s = math.cosh(t)
    if n == 1:
        return float(_kernel_seed(1, C, np.array([s]))[0])
    step = KERNEL_STEP_FRACTION * (C - s)
    res = richardson_derivative(
        lambda xs: _kernel_seed(n, C, xs), s, n - 1, step=step, levels=levels
    )
    return float(res.value)


def _sphere_bump_mean(
    B: BumpProfile, rho: np.ndarray, D: float, cfg: WaveConfig
) -> np.ndarray:
    """Integral of h over the sphere of radius rho about z', d(z', center) = D."""
    n = B.n
    alpha = B.alpha
    vol = sphere_volume(n)
    rho = np.asarray(rho, dtype=float)
    if D < 1e-14:
        return vol * B.c_alpha * B.h1(rho / alpha)

    P = np.cosh(rho) * math.cosh(D)
    A = np.tanh(rho) * math.tanh(D)
    beta = math.cosh(alpha) / P
    out = np.zeros_like(rho)
    live = (rho > max(D - alpha, 0.0)) & (rho < D + alpha) & (A > 1e-14)
    if not np.any(live):
        return out
    P, A, beta = P[live], A[live], beta[live]

    theta_x, theta_w = gauss_legendre(cfg.angular_quad_points, 0.0, 1.0)

    if n == 1:
        u = np.ones((A.size, 1))
        du = np.ones((A.size, 1))
    else:
        kink = np.minimum((np.abs(beta - 1.0) / A) ** 2, 1.0)
        lo = np.where(beta >= 1.0, 0.0, kink)
        mid = np.where(beta >= 1.0, kink, lo)
        wa, wwa = gauss_legendre(cfg.angular_quad_points // 2, 0.0, 1.0)
        wb, wwb = gauss_legendre(cfg.angular_quad_points, 0.0, 1.0)
        u_a = lo[:, None] + (mid - lo)[:, None] * wa[None, :]
        du_a = (mid - lo)[:, None] * wwa[None, :]
        span = 1.0 - mid
        u_b = mid[:, None] + span[:, None] * wb[None, :] ** 2
        du_b = 2.0 * span[:, None] * wb[None, :] * wwb[None, :]
        u = np.concatenate([u_a, u_b], axis=1)
        du = np.concatenate([du_a, du_b], axis=1) * (n - 1) * (1.0 - u) ** (n - 2)

    root = np.sqrt(u)
    Ab = A[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = (1.0 + Ab**2 * u - beta[:, None] ** 2) / (2.0 * Ab * root)
    theta_max = np.arccos(np.clip(np.nan_to_num(kappa, nan=1.0), -1.0, 1.0))

    theta = theta_max[..., None] * theta_x
    gap = 1.0 - 2.0 * (Ab * root)[..., None] * np.cos(theta) + (Ab**2 * u)[..., None]
    cosh_d = P[:, None, None] * np.sqrt(np.clip(gap, 0.0, None))
    d = np.arccosh(np.clip(cosh_d, 1.0, None))
    arc = np.sum(B.h1(d / alpha) * theta_w, axis=-1) * theta_max / math.pi
    out[live] = vol * B.c_alpha * np.sum(du * arc, axis=-1)
    return out


def wave_shell_integral(
    B: BumpProfile, t: np.ndarray, D: float, cfg: WaveConfig
) -> np.ndarray:
    """W(t) = integral of h(x) / sqrt(cosh^2 t - cosh^2 d(z', x)) over d(z', x) < t.

    With cosh^2 rho = cosh^2 t - v^2 the inverse square root cancels against
    the Jacobian and W = integral of sinh^(2n-2) rho S(rho) dv.
    """
    n = B.n
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    inner = max(D - B.alpha, 0.0)
    outer = D + B.alpha
    live = t > inner
    if not np.any(live):
        return out
    c2 = np.cosh(t[live]) ** 2
    v_hi = np.sqrt(c2 - math.cosh(inner) ** 2)
    v_lo = np.sqrt(np.clip(c2 - math.cosh(outer) ** 2, 0.0, None))
    x, w = gauss_legendre(cfg.radial_quad_points, 0.0, 1.0)
    v = v_lo[:, None] + (v_hi - v_lo)[:, None] * x[None, :]
    wv = (v_hi - v_lo)[:, None] * w[None, :]
    cosh_rho = np.sqrt(np.clip(c2[:, None] - v**2, 1.0, None))
    rho = np.arccosh(cosh_rho)
    sinh2 = cosh_rho**2 - 1.0
    S = _sphere_bump_mean(B, rho.ravel(), D, cfg).reshape(rho.shape)
    out[live] = np.sum(wv * sinh2 ** (n - 1) * S, axis=1)
    return out


def _shell_in_s(
    B: BumpProfile, Ds: Sequence[float], cfg: WaveConfig
) -> Callable[[np.ndarray], np.ndarray]:
    """sum over D of W as a function of s = cosh t, extended by zero below s = 1."""

    def W(s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        ok = s > 1.0
        t = np.arccosh(s[ok])
        acc = np.zeros_like(t)
        for start in range(0, t.size, WAVE_BATCH):
            chunk = t[start : start + WAVE_BATCH]
            for D in Ds:
                acc[start : start + WAVE_BATCH] += wave_shell_integral(B, chunk, D, cfg)
        out[ok] = acc
        return out

    return W


def _u_values(
    B: BumpProfile, s: np.ndarray, Ds: Sequence[float], cfg: WaveConfig
) -> tuple[np.ndarray, np.ndarray]:
    n = B.n
    res = richardson_derivative(
        _shell_in_s(B, Ds, cfg),
        np.asarray(s, dtype=float),
        n - 1,
        step=cfg.fd_step,
        levels=cfg.richardson_levels,
        strict=False,
    )
    scale = (2.0 * math.pi) ** (-n)
    return scale * np.asarray(res.value), scale * np.asarray(res.est_error)


def wave_solution(
    n: int,
    f: Union[BumpProfile, Sequence[BumpProfile]],
    t: float,
    zprime: BallPoint,
    cfg: Optional[WaveConfig] = None,
) -> float:
    """u(t, z') for bump initial data (one bump or a finite sum of bumps)."""
    cfg = cfg or WaveConfig()
    bumps = [f] if isinstance(f, BumpProfile) else list(f)
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if any(b.n != n or b.n != zprime.n for b in bumps):
        raise DomainError("initial data, observation point and n disagree on dimension")
    s = np.array([math.cosh(t)])
    total = 0.0
    err = 0.0
    for bump in bumps:
        D = distance(zprime, bump.center)
        value, est = _u_values(bump, s, [D], cfg)
        total += float(value[0])
        err += float(est[0])
    if err > cfg.tol * max(1.0, abs(total)) and n > 1:
        logger.warning("wave solution at t=%g has elevated error estimate %.2e", t, err)
    return total


def _wave_translate(
    B: BumpProfile, D: float, T: float, cfg: WaveConfig
) -> tuple[float, float]:
    """Contribution of one bump translate at distance D from z' to the wave route."""
    n = B.n
    alpha = B.alpha
    if D - alpha >= T:
        return 0.0, 0.0
    C = math.cosh(T)
    v_max = math.sqrt(C - 1.0)
    cuts = {0.0, v_max}
    for tb in (D - alpha, D + alpha):
        if 0.0 < tb < T:
            cuts.add(math.sqrt(C - math.cosh(tb)))
    edges = sorted(cuts)
    # u vanishes for t <= D - alpha, that is v >= sqrt(C - cosh(D - alpha))
    v_dead = math.sqrt(C - math.cosh(D - alpha)) if D - alpha > 0 else v_max

    def integral(points: int) -> tuple[float, float]:
        nodes, weights = [], []
        for a, b in zip(edges, edges[1:]):
            if a >= v_dead:
                continue
            x, w = gauss_legendre(points, a, b)
            nodes.append(x)
            weights.append(w)
        if not nodes:
            return 0.0, 0.0
        v = np.concatenate(nodes)
        w = np.concatenate(weights)
        seed = np.array([hyp2f1_real(-0.5, 1.5, n - 0.5, vv * vv / (2.0 * C)) for vv in v])
        g = 2.0 * v ** (2 * n - 2) * seed * w
        u, u_err = _u_values(B, C - v * v, [D], cfg)
        return float(g @ u), float(np.abs(g) @ u_err)

    # Cancels the sign (-1)^(n-1) carried by the printed constant c_n
    factor = (-1.0) ** (n - 1) * wave_constant(n) * math.sqrt(C)
    scale = abs(factor)

    points = cfg.t_quad_points
    coarse, _ = integral(max(points // 2, 2))
    fine, fine_err = integral(points)
    while scale * abs(fine - coarse) > cfg.tol * max(1.0, scale * abs(fine)):
        if points >= cfg.max_t_quad_points:
            logger.debug(
                "translate at D=%g, T=%g: t-quadrature stopped at %d nodes (gap %.2e)",
                D,
                T,
                points,
                scale * abs(fine - coarse),
            )
            break
        points *= 2
        coarse = fine
        fine, fine_err = integral(points)
    return factor * fine, scale * (abs(fine - coarse) + fine_err)


def averaged_count_wave(
    G: GroupSpec,
    B: BumpProfile,
    zprime: BallPoint,
    T: float,
    cfg: Optional[WaveConfig] = None,
    *,
    workers: int = 1,
    expansion: Optional[OrbitExpansion] = None,
) -> RouteResult:
    """I(T, z, z', alpha) through the explicit solution of the wave equation."""
    cfg = cfg or WaveConfig()
    orbit = _orbit_for(G, B, zprime, T, workers, expansion)
    Ds = [float(D) for D in orbit.distances if D < T + B.alpha]
    if workers > 1 and len(Ds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda D: _wave_translate(B, D, T, cfg), Ds))
    else:
        parts = [_wave_translate(B, D, T, cfg) for D in Ds]
    value = sum(p[0] for p in parts)
    err = sum(p[1] for p in parts)
    if orbit.truncated:
        logger.warning("wave route at T=%g is a lower bound (truncated enumeration)", T)
    return RouteResult(
        value=value, est_error=err, truncated=orbit.truncated, translates=len(Ds)
    )
