"""Gauss hypergeometric engine with complex parameters.

Evaluation routes:

* series: the defining power series, used for |z| <= 0.95 and for
  terminating parameter sets at any z,
* pfaff: F(a, b, c, z) = (1 - z)^(-a) F(a, c - b, c, z / (z - 1)),
* connection: the two-term formula relating arguments z and 1/z,
  used on the negative real axis x <= -1,
* one_minus_z: the two-term formula relating z and 1 - z, reached when
  z is close to +1 and neither the series nor Pfaff applies.
"""

import cmath
import logging
import math
from typing import Optional

from .config import DEGENERATE_PFAFF_MAX_ARG, FD_LEVELS, PFAFF_MAX_ARG, SERIES_MAX_ARG, TOL
from .errors import DegenerateConnectionError, DomainError, NumericalError
from .models import Branch, EvalReport, HypParams, is_nonpositive_integer
from .quad import richardson_derivative

logger = logging.getLogger(__name__)

EPS = 2.220446049250313e-16
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# B_2k / (2k (2k - 1)), k = 1..8
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
# Arguments are shifted up to this real part before the asymptotic series
_STIRLING_MIN = 15.0
# Relative accuracy of log_gamma, folded into connection-formula error bars
_LOG_GAMMA_REL = 1e-13

_Result = tuple[complex, float, int, Branch]


def log_gamma(z: complex) -> complex:
    """log Gamma(z) from the Stirling series plus upward recursion.

    Off the real axis this is the analytic branch. On the negative real axis
    the imaginary part is the principal one: 0 where Gamma > 0, pi where
    Gamma < 0.
    """
    z = complex(z)
    if is_nonpositive_integer(z):
        raise DomainError(f"Gamma has a pole at z = {z.real:g}")
    negative_real = z.imag == 0 and z.real < 0
    sign_flips = math.ceil(-z.real) if negative_real else 0

    shift = 0j
    while z.real < _STIRLING_MIN:
        shift += cmath.log(z)
        z += 1.0

    w = 1.0 / z
    w2 = w * w
    series = 0j
    power = w
    for coef in _STIRLING:
        series += coef * power
        power *= w2
    value = (z - 0.5) * cmath.log(z) - z + HALF_LOG_2PI + series - shift
    if negative_real:
        return complex(value.real, math.pi if sign_flips % 2 else 0.0)
    return value


def gamma(z: complex) -> complex:
    return cmath.exp(log_gamma(z))


def rgamma(z: complex) -> complex:
    """1 / Gamma(z), zero at the poles."""
    if is_nonpositive_integer(z):
        return 0j
    return cmath.exp(-log_gamma(z))


def pochhammer(a: complex, k: int) -> complex:
    """Rising factorial (a)_k."""
    if k < 0:
        raise DomainError("Pochhammer index must be nonnegative")
    result = 1.0 + 0j
    for j in range(k):
        result *= a + j
    return result


def _is_integer(x: complex, tol: float = 0.0) -> bool:
    x = complex(x)
    return abs(x.imag) <= tol and abs(x.real - round(x.real)) <= tol


def _terminating_degree(a: complex, b: complex) -> Optional[int]:
    degrees = [int(-round(complex(p).real)) for p in (a, b) if is_nonpositive_integer(p)]
    return min(degrees) if degrees else None


def _series(a: complex, b: complex, c: complex, z: complex) -> tuple[complex, float, int]:
    degree = _terminating_degree(a, b)
    limit = degree if degree is not None else TOL.series_max_terms
    if limit > TOL.series_max_terms:
        raise NumericalError(f"terminating series of degree {limit} exceeds the term cap")

    term = 1.0 + 0j
    total = 1.0 + 0j
    abs_sum = 1.0
    quiet = 0
    k = 0
    while k < limit:
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        k += 1
        total += term
        abs_sum += abs(term)
        if degree is None:
            if abs(term) < TOL.series_rel * abs(total):
                quiet += 1
                if quiet == 2:
                    break
            else:
                quiet = 0

    if degree is None and quiet < 2:
        raise NumericalError(
            f"series for F({a}, {b}, {c}, {z}) did not converge in {k} terms"
        )

    tail = 0.0
    if degree is None:
        az = abs(z)
        tail = abs(term) * az / (1.0 - az) if az < 1 else abs(term)
    return total, tail + 4.0 * EPS * abs_sum, k


def _pfaff(a: complex, b: complex, c: complex, z: complex) -> _Result:
    w = z / (z - 1.0)
    value, err, terms = _series(a, c - b, c, w)
    prefactor = cmath.exp(-a * cmath.log(1.0 - z))
    return prefactor * value, abs(prefactor) * err, terms, Branch.PFAFF


def _inside(a: complex, b: complex, c: complex, z: complex) -> _Result:
    """Series or Pfaff, whichever has the smaller admissible argument; 1 - z last."""
    if _terminating_degree(a, b) is not None:
        value, err, terms = _series(a, b, c, z)
        return value, err, terms, Branch.SERIES

    az = abs(z)
    aw = abs(z / (z - 1.0))
    if az <= SERIES_MAX_ARG and az <= aw:
        value, err, terms = _series(a, b, c, z)
        return value, err, terms, Branch.SERIES
    if aw <= PFAFF_MAX_ARG:
        return _pfaff(a, b, c, z)
    if az <= SERIES_MAX_ARG:
        value, err, terms = _series(a, b, c, z)
        return value, err, terms, Branch.SERIES
    if z.imag == 0 and z.real >= 1.0:
        raise DomainError(f"z = {z.real:g} lies on the branch cut [1, inf)")
    if abs(1.0 - z) <= SERIES_MAX_ARG:
        return _one_minus_z(a, b, c, z)
    raise DomainError(f"z = {z} is outside the supported domain of F")


def _gamma_ratio(num: tuple[complex, ...], den: tuple[complex, ...]) -> complex:
    if any(is_nonpositive_integer(d) for d in den):
        return 0j
    log_value = sum(log_gamma(x) for x in num) - sum(log_gamma(x) for x in den)
    return cmath.exp(log_value)


def _one_minus_z(a: complex, b: complex, c: complex, z: complex) -> _Result:
    """Two-term formula relating arguments z and 1 - z, for z near +1."""
    s = c - a - b
    if _is_integer(s):
        raise DegenerateConnectionError(
            f"c - a - b = {s} is an integer; the logarithmic case is not supported"
        )
    y = 1.0 - z
    coef1 = _gamma_ratio((c, s), (c - a, c - b))
    coef2 = _gamma_ratio((c, -s), (a, b)) * cmath.exp(s * cmath.log(y))

    total = 0j
    err = 0.0
    terms = 0
    for coef, p, q, r in ((coef1, a, b, 1.0 - s), (coef2, c - a, c - b, 1.0 + s)):
        if coef == 0:
            continue
        inner, inner_err, inner_terms = _series(p, q, r, y)
        piece = coef * inner
        total += piece
        err += abs(coef) * inner_err + _LOG_GAMMA_REL * abs(piece)
        terms += inner_terms
    return total, err + 4.0 * EPS * abs(total), terms, Branch.ONE_MINUS_Z


def _connection(a: complex, b: complex, c: complex, x: float) -> _Result:
    if _is_integer(a - b):
        raise DegenerateConnectionError(
            f"a - b = {a - b} is an integer; the logarithmic case is not supported"
        )
    inv = 1.0 / x
    log_mx = math.log(-x)

    coef1 = _gamma_ratio((c, b - a), (b, c - a))
    coef2 = _gamma_ratio((c, a - b), (a, c - b))

    total = 0j
    err = 0.0
    terms = 0
    for coef, p, q, r in (
        (coef1, a, a - c + 1.0, a - b + 1.0),
        (coef2, b, b - c + 1.0, b - a + 1.0),
    ):
        if coef == 0:
            continue
        inner, inner_err, inner_terms, _ = _inside(p, q, r, complex(inv))
        scale = coef * cmath.exp(-p * log_mx)
        piece = scale * inner
        total += piece
        err += abs(scale) * inner_err + _LOG_GAMMA_REL * abs(piece)
        terms += inner_terms
    return total, err + 4.0 * EPS * abs(total), terms, Branch.CONNECTION


def _hyp2f1(a: complex, b: complex, c: complex, z: complex) -> _Result:
    if z == 0:
        return 1.0 + 0j, 0.0, 0, Branch.SERIES
    if _terminating_degree(a, b) is not None:
        value, err, terms = _series(a, b, c, z)
        return value, err, terms, Branch.SERIES
    if z.imag == 0 and z.real <= -1.0:
        try:
            return _connection(a, b, c, z.real)
        except DegenerateConnectionError:
            w = abs(z / (z - 1.0))
            if w > DEGENERATE_PFAFF_MAX_ARG:
                raise
            logger.debug("degenerate connection at a-b=%s, using Pfaff (w=%.4f)", a - b, w)
            return _pfaff(a, b, c, z)
    return _inside(a, b, c, z)


def _report(result: _Result) -> EvalReport:
    value, err, terms, branch = result
    return EvalReport(value=value, est_error=err, terms_used=terms, branch=branch)


def gauss_2f1(p: HypParams, z: complex) -> EvalReport:
    """F(a, b, c, z) for |z| < 1 off the cut, or z real and negative."""
    return _report(_hyp2f1(p.a, p.b, p.c, complex(z)))


def gauss_2f1_neg_axis(p: HypParams, x: float) -> EvalReport:
    """F(a, b, c, x) for real x < 0 through the 1/x connection formula.

    Terminating parameter sets are summed as polynomials. A non-terminating
    set with a - b an integer raises DegenerateConnectionError.
    """
    x = float(x)
    if not x < 0:
        raise DomainError(f"x = {x} must be negative")
    if _terminating_degree(p.a, p.b) is not None:
        value, err, terms = _series(p.a, p.b, p.c, complex(x))
        return _report((value, err, terms, Branch.SERIES))
    return _report(_connection(p.a, p.b, p.c, x))


def hyp2f1(a: complex, b: complex, c: complex, z: complex) -> complex:
    """Bare value of F(a, b, c, z) for internal callers."""
    if is_nonpositive_integer(c):
        raise DomainError(f"c = {c} is zero or a negative integer")
    return _hyp2f1(complex(a), complex(b), complex(c), complex(z))[0]


def hyp2f1_real(a: float, b: float, c: float, x: float) -> float:
    """F for real parameters and argument; the imaginary residue is dropped."""
    return hyp2f1(a, b, c, x).real


def derivative_identity_residual(
    p: HypParams,
    m: int,
    y: float,
    *,
    step: float = 1e-2,
    levels: int = FD_LEVELS,
) -> float:
    """|d^m/dy^m [y^(c-1) F(a,b,c,y)] - (c-m)_m y^(c-m-1) F(a,b,c-m,y)|."""
    if m < 0:
        raise DomainError("derivative order must be nonnegative")
    if m == 0:
        return 0.0
    if not 0.0 < y < 1.0:
        raise DomainError(f"y = {y} must lie in (0, 1)")
    if is_nonpositive_integer(p.c - m):
        raise DomainError(f"c - m = {p.c - m} is zero or a negative integer")

    h0 = min(step, 0.25 * min(y, 1.0 - y) / m)
    if h0 < 1e-6:
        raise NumericalError(f"finite-difference step underflows at y = {y}")

    a, b, c = p.a, p.b, p.c

    def weighted(ys):
        return [cmath.exp((c - 1.0) * math.log(t)) * hyp2f1(a, b, c, t) for t in ys]

    lhs = richardson_derivative(weighted, y, m, step=h0, levels=levels)
    rhs = (
        pochhammer(c - m, m)
        * cmath.exp((c - m - 1.0) * math.log(y))
        * hyp2f1(a, b, c - m, y)
    )
    return abs(lhs.value - rhs)


def quadratic_transformation_residual(a: float, c: float, y: float) -> float:
    """Relative gap in F(a,1-a,c,y) = (1-y)^(c-1) F((c-a)/2,(c+a-1)/2,c,4y(1-y))."""
    if not 0.0 < y < 0.5:
        raise DomainError(f"y = {y} must lie in (0, 1/2)")
    left = hyp2f1(a, 1.0 - a, c, y)
    right = (1.0 - y) ** (c - 1.0) * hyp2f1(
        (c - a) / 2.0, (c + a - 1.0) / 2.0, c, 4.0 * y * (1.0 - y)
    )
    return abs(left - right) / max(abs(left), 1e-300)


def connection_overlap_residual(p: HypParams, x: float) -> float:
    """Relative gap between the direct route and the 1/x connection at x in (-1, 0)."""
    direct = gauss_2f1(p, x).value
    connected = gauss_2f1_neg_axis(p, x).value
    return abs(direct - connected) / max(abs(direct), 1e-300)
