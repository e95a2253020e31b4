"""
Quadrature rules
Adaptive Gauss-Kronrod through scipy's quad_vec, fixed Gauss-Legendre rules,
and the s^2 substitution that removes square-root endpoint singularities.
"""
import logging
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy.integrate import quad_vec

from settings import QUADRATURE
from stokes_errors import QuadratureNotConverged

logger = logging.getLogger(__name__)

# f(t, 1 - t) -> complex array; the second argument is passed exactly
SegmentIntegrand = Callable[[np.ndarray, np.ndarray], np.ndarray]


def adaptive_gauss_kronrod(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                           abs_tol: float = None, rel_tol: float = None,
                           limit: int = None) -> Tuple[complex, float]:
    """
    Globally adaptive G7/K15 integration of a vectorised complex integrand

    Args:
        f: Vectorised integrand on real nodes
        a, b: Interval
        abs_tol, rel_tol: Stopping tolerances on the summed error estimate
        limit: Cap on the number of subintervals

    Returns:
        (integral, error estimate)

    Raises:
        QuadratureNotConverged when the subinterval cap or round-off stops
        the refinement first
    """
    abs_tol = QUADRATURE['abs_tol'] if abs_tol is None else abs_tol
    rel_tol = QUADRATURE['rel_tol'] if rel_tol is None else rel_tol
    limit = QUADRATURE['limit'] if limit is None else limit

    def parts(x):
        value = complex(np.asarray(f(np.array([x])), dtype=complex).ravel()[0])
        return np.array([value.real, value.imag])

    result, error, info = quad_vec(parts, a, b, epsabs=abs_tol, epsrel=rel_tol, limit=limit,
                                   norm='2', quadrature='gk15', full_output=True)
    if info.status != 0:
        raise QuadratureNotConverged(float(error), int(info.intervals.shape[0]))
    return complex(result[0], result[1]), float(error)


def integrate_sqrt_endpoints(f: SegmentIntegrand, singular_start: bool, singular_end: bool,
                             abs_tol: float = None, rel_tol: float = None,
                             limit: int = None) -> complex:
    """
    Integrate f over [0, 1] where f may behave like sqrt(t) at t=0 and/or
    sqrt(1-t) at t=1. The substitutions t = s^2 and 1 - t = s^2 make the
    integrand smooth; both ends singular splits the interval at 1/2.
    """
    kwargs = {'abs_tol': abs_tol, 'rel_tol': rel_tol, 'limit': limit}

    def from_start(s):
        t = s * s
        return f(t, 1.0 - t) * (2.0 * s)

    def from_end(s):
        omt = s * s
        return f(1.0 - omt, omt) * (2.0 * s)

    if singular_start and singular_end:
        half = np.sqrt(0.5)
        left, _ = adaptive_gauss_kronrod(from_start, 0.0, half, **kwargs)
        right, _ = adaptive_gauss_kronrod(from_end, 0.0, half, **kwargs)
        return left + right
    if singular_start:
        return adaptive_gauss_kronrod(from_start, 0.0, 1.0, **kwargs)[0]
    if singular_end:
        return adaptive_gauss_kronrod(from_end, 0.0, 1.0, **kwargs)[0]
    return adaptive_gauss_kronrod(lambda t: f(t, 1.0 - t), 0.0, 1.0, **kwargs)[0]


@lru_cache(maxsize=32)
def gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]"""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=32)
def sqrt_endpoint_rule(n: int, singular_start: bool, singular_end: bool) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Fixed rule on [0, 1] with the same substitutions as integrate_sqrt_endpoints

    Returns:
        (t, 1 - t, weights); used for vectorised scans over parameter grids
    """
    s, w = gauss_legendre(n)
    if singular_start and singular_end:
        half = np.sqrt(0.5)
        s_half = half * s
        w_half = half * w * 2.0 * s_half
        t_left = s_half ** 2
        omt_right = s_half ** 2
        t = np.concatenate([t_left, 1.0 - omt_right])
        omt = np.concatenate([1.0 - t_left, omt_right])
        return t, omt, np.concatenate([w_half, w_half])
    if singular_start:
        t = s ** 2
        return t, 1.0 - t, w * 2.0 * s
    if singular_end:
        omt = s ** 2
        return 1.0 - omt, omt, w * 2.0 * s
    return s, 1.0 - s, w
