"""Identity battery run by `chlattice verify`.

Every check recomputes both sides of a known identity independently and
records the largest residual against its tolerance.
"""

import cmath
import logging
import math
from typing import Callable

import numpy as np

from . import average
from .chgeom import volume_ball
from .errors import ChLatticeError
from .hypgeo import (
    connection_overlap_residual,
    derivative_identity_residual,
    gauss_2f1,
    quadratic_transformation_residual,
)
from .models import BallPoint, CheckResult, HypParams, VerifyReport
from .quad import integrate_ball
from .spectral import DECAY_SLACK, H_n_closed, H_n_quadrature, decay_envelope, decay_profile

logger = logging.getLogger(__name__)

KERNEL_T = (1.0, 2.0, 3.0, 4.0, 5.0)
KERNEL_POINTS_PER_T = 4
H_GRID_N = (1, 2, 3)
H_GRID_LAMBDA = (0.0, 1.0, 4.0, 25.0)
H_GRID_T = (0.5, 1.0, 2.0)
ALPHAS = (0.2, 0.1, 0.05, 0.025)
OVERLAP_DRAWS = 200
DECAY_LAMBDAS = (25.0, 100.0, 400.0, 1600.0)
# Up to 4y(1 - y) = 0.9996, where only the 1 - z route reaches
QUADRATIC_Y = (0.05, 0.15, 0.3, 0.4, 0.45, 0.49)


def kernel_grid() -> list[tuple[float, float]]:
    """20 (T, t) pairs with 0.2 <= t <= T - 0.2."""
    pairs = []
    for T in KERNEL_T:
        for t in np.linspace(0.2, T - 0.2, KERNEL_POINTS_PER_T):
            pairs.append((T, float(t)))
    return pairs


def check_kernel_identity() -> CheckResult:
    worst = 0.0
    passed = True
    for n in (1, 2, 3, 4):
        tol = 1e-6 if n <= 2 else 1e-5
        for T, t in kernel_grid():
            closed = average.kernel_K_closed(n, T, t)
            defining = average.kernel_K_defining(n, T, t)
            rel = abs(defining - closed) / abs(closed)
            worst = max(worst, rel)
            if rel > tol:
                passed = False
                logger.debug("kernel mismatch n=%d T=%g t=%g rel=%.3e", n, T, t, rel)
    return CheckResult(
        name="kernel_identity",
        passed=passed,
        max_residual=worst,
        tolerance=1e-5,
        detail="n = 1..4, 1e-6 for n <= 2",
    )


def check_integral_representation() -> CheckResult:
    worst = 0.0
    for n in H_GRID_N:
        for lam in H_GRID_LAMBDA:
            for T in H_GRID_T:
                closed = H_n_closed(n, lam, T)
                quad = H_n_quadrature(n, lam, T)
                worst = max(worst, abs(closed - quad) / max(abs(closed), 1e-30))
    return CheckResult(
        name="integral_representation",
        passed=worst <= 1e-6,
        max_residual=worst,
        tolerance=1e-6,
    )


def check_bump_normalization() -> CheckResult:
    worst = 0.0
    passed = True
    for n in (1, 2):
        gaps = [abs(a ** (2 * n) * average.bump_normalization(n, a) - 1.0) for a in ALPHAS]
        monotone = all(later < earlier for earlier, later in zip(gaps, gaps[1:]))
        passed = passed and monotone and gaps[-1] <= 0.01
        worst = max(worst, gaps[-1])
    return CheckResult(
        name="bump_normalization",
        passed=passed,
        max_residual=worst,
        tolerance=0.01,
        detail=f"alpha^(2n) c_n(alpha) -> 1 over alpha = {list(ALPHAS)}",
    )


def check_ball_volume() -> CheckResult:
    worst = 0.0
    for n in (1, 2):
        origin = BallPoint.origin(n)
        for T in H_GRID_T:
            res = integrate_ball(
                lambda pts: np.ones(len(pts)), origin, T, n, tol=1e-10, vectorized=True
            )
            exact = volume_ball(n, T)
            worst = max(worst, abs(res.value - exact) / exact)
    return CheckResult(
        name="ball_volume", passed=worst <= 1e-6, max_residual=worst, tolerance=1e-6
    )


def overlap_draws(
    count: int = OVERLAP_DRAWS, seed: int = 7
) -> list[tuple[HypParams, float]]:
    """Random real (a, b, c, x) with |a|, |b| <= 3, c in (0.5, 5), x in (-0.9, -0.1).

    Draws with a - b within 0.05 of an integer are redrawn; the connection
    formula has no logarithmic case.
    """
    rng = np.random.default_rng(seed)
    draws: list[tuple[HypParams, float]] = []
    while len(draws) < count:
        a = float(rng.uniform(-3.0, 3.0))
        b = float(rng.uniform(-3.0, 3.0))
        c = float(rng.uniform(0.5, 5.0))
        x = float(rng.uniform(-0.9, -0.1))
        if abs(a - b - round(a - b)) <= 0.05:
            continue
        draws.append((HypParams(a=a, b=b, c=c), x))
    return draws


def check_connection_overlap() -> CheckResult:
    worst = max(connection_overlap_residual(p, x) for p, x in overlap_draws())
    return CheckResult(
        name="connection_overlap",
        passed=worst <= 1e-8,
        max_residual=worst,
        tolerance=1e-8,
        detail=f"{OVERLAP_DRAWS} random draws on x in (-0.9, -0.1)",
    )


def check_equal_parameters() -> CheckResult:
    worst = 0.0
    for a, b in ((0.5, 0.7), (-1.3, 2.0), (complex(0.4, 0.6), 1.5)):
        p = HypParams(a=a, b=b, c=b)
        for z in (0.5, -0.7, -3.0, complex(0.2, 0.3)):
            value = gauss_2f1(p, z).value
            exact = cmath.exp(-a * cmath.log(1.0 - z))
            worst = max(worst, abs(value - exact) / abs(exact))
    return CheckResult(
        name="equal_parameter_closed_form",
        passed=worst <= 1e-12,
        max_residual=worst,
        tolerance=1e-12,
    )


def check_quadratic_transformation() -> CheckResult:
    worst = 0.0
    for a in (0.3, -0.4):
        for c in (1.2, 2.5):
            for y in QUADRATIC_Y:
                worst = max(worst, quadratic_transformation_residual(a, c, y))
    return CheckResult(
        name="quadratic_transformation",
        passed=worst <= 1e-10,
        max_residual=worst,
        tolerance=1e-10,
    )


def check_derivative_identity() -> CheckResult:
    worst = 0.0
    for n in (2, 3, 4):
        for m in range(1, n):
            p = HypParams(a=-0.5, b=1.5, c=n - 0.5 + m)
            for y in (0.1, 0.25, 0.4):
                worst = max(worst, derivative_identity_residual(p, m, y))
    return CheckResult(
        name="derivative_identity", passed=worst <= 1e-6, max_residual=worst, tolerance=1e-6
    )


def check_decay() -> CheckResult:
    n, T = 2, 2.0
    envelope = decay_envelope(n, T)
    worst = max(decay_profile(n, T, DECAY_LAMBDAS)) / envelope
    return CheckResult(
        name="high_frequency_decay",
        passed=worst <= DECAY_SLACK,
        max_residual=worst,
        tolerance=DECAY_SLACK,
        detail="|H_n| lambda^((2n+1)/4) relative to the endpoint envelope",
    )


BATTERY: tuple[Callable[[], CheckResult], ...] = (
    check_kernel_identity,
    check_integral_representation,
    check_bump_normalization,
    check_ball_volume,
    check_connection_overlap,
    check_equal_parameters,
    check_quadratic_transformation,
    check_derivative_identity,
    check_decay,
)


def run_battery() -> VerifyReport:
    """Run every check; a numerical failure inside a check fails that check only."""
    checks = []
    for check in BATTERY:
        name = check.__name__.removeprefix("check_")
        try:
            result = check()
        except ChLatticeError as exc:
            logger.warning("check %s raised: %s", name, exc)
            result = CheckResult(
                name=name, passed=False, max_residual=math.inf, tolerance=0.0, detail=str(exc)
            )
        status = "pass" if result.passed else "FAIL"
        logger.info("%s: %s (max residual %.3e)", result.name, status, result.max_residual)
        checks.append(result)
    return VerifyReport(checks=checks, passed=all(c.passed for c in checks))
