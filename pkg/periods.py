"""
Periods
Contour integrals of e^{i theta} sqrt(p_a) around short trajectories, their
arc-length counterparts and the period ratio of tree graphs.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma

from core_algebra import (
    Potential, branch_at, branch_at_turning_point, continue_branch, local_stokes_directions, path_increments,
    segment_sqrt_p,
)
from quadrature import integrate_sqrt_endpoints
from stokes_errors import NotActuallyShort, SheetMismatch
from trajectory_tracer import ShortTrajectory, refine_short_trajectory, trace

logger = logging.getLogger(__name__)

SHEET_TOL = 1e-8


@dataclass(frozen=True)
class Period:
    potential: Potential
    endpoints: Tuple[int, int]
    value: complex
    abs_value: float
    path: str = 'short_trajectory'

    def to_dict(self) -> dict:
        return {
            'endpoints': list(self.endpoints),
            'value': [self.value.real, self.value.imag],
            'abs_value': self.abs_value,
            'path': self.path,
        }


def find_short_trajectory(pot: Potential, tp0: int, tp1: int) -> Optional[ShortTrajectory]:
    """Trace the three Stokes lines from tp0 and confirm one that lands on tp1"""
    location = pot.roots[tp0]
    for direction in local_stokes_directions(pot, location):
        traj = trace(pot, location, float(direction))
        if traj.hit == tp1:
            try:
                return refine_short_trajectory(pot, (tp0, tp1), traj)
            except NotActuallyShort as e:
                logger.debug(f"Stokes line {tp0}->{tp1} is a near miss: {e}")
    return None


def _segment_abs_integral(pot: Potential, tp0: int, tp1: int) -> float:
    """Integral of |sqrt(p_a)| |dz| along the straight segment between two turning points"""
    start, end = pot.roots[tp0], pot.roots[tp1]
    integral = integrate_sqrt_endpoints(
        lambda t, omt: np.abs(segment_sqrt_p(pot, start, end, t, omt, 1, tp0, tp1)).astype(complex),
        singular_start=True, singular_end=True,
    )
    return float(abs(end - start) * integral.real)


def segment_period(pot: Potential, tp0: int, tp1: int,
                   short: Optional[ShortTrajectory] = None) -> Period:
    """
    Period of the closed contour around two turning points, twice the
    integral between them

    Args:
        pot: Potential
        tp0, tp1: Turning-point indices
        short: Confirmed short trajectory between them; traced when omitted

    Returns:
        Period; along a short trajectory the value is purely imaginary and
        abs_value is its arc-length measure. Without a short trajectory the
        straight segment is used and recorded in `path`.
    """
    if tp0 == tp1:
        return Period(pot, (tp0, tp1), 0j, 0.0, path='degenerate')
    if short is None:
        short = find_short_trajectory(pot, tp0, tp1)
    if short is not None:
        value = 2.0 * short.value
        if short.endpoints != (tp0, tp1):
            value = -value
        return Period(pot, (tp0, tp1), complex(value), 2.0 * short.abs_value)

    logger.info(f"No short trajectory {tp0}->{tp1} for a={pot.a:.6g}; using the straight segment")
    increments, _ = path_increments(
        branch_at_turning_point(pot, tp0, 1), [pot.roots[tp0], pot.roots[tp1]])
    return Period(pot, (tp0, tp1), complex(2.0 * increments.sum()),
                  2.0 * _segment_abs_integral(pot, tp0, tp1), path='segment')


def loop_period(pot: Potential, contour: Sequence[complex]) -> complex:
    """
    Integral of e^{i theta} sqrt(p_a) around a closed polyline

    The branch starts principal at the first vertex; a loop enclosing an odd
    number of turning points returns on the other sheet.

    Raises:
        SheetMismatch when the continued root does not return to its start value
    """
    points = [complex(z) for z in contour]
    if points[0] != points[-1]:
        points.append(points[0])
    ctx = branch_at(pot, points[0])
    continued = continue_branch(ctx, points)
    initial, final = ctx.base_value, continued.final_value
    if abs(final - initial) > SHEET_TOL * abs(initial):
        raise SheetMismatch(initial, final)
    increments, _ = path_increments(ctx, points)
    return complex(increments.sum())


def ellipse_contour(z0: complex, z1: complex, margin: float, n: int = 256) -> np.ndarray:
    """Closed polygon around the segment [z0, z1] at distance about `margin`"""
    centre = 0.5 * (z0 + z1)
    half = 0.5 * abs(z1 - z0)
    tilt = np.exp(1j * np.angle(z1 - z0))
    phi = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    ellipse = (half + margin) * np.cos(phi) + 1j * margin * np.sin(phi)
    return centre + tilt * ellipse


def tree_period_ratio(graph, swap: bool = False) -> float:
    """
    alpha = |period(C1)| / |period(C2)| for a tree graph, C1 the short
    trajectory ending at +1
    """
    shorts = list(graph.short_trajectories)
    if len(shorts) != 2:
        raise ValueError(f"tree period ratio needs two short trajectories, got {len(shorts)}")
    shorts.sort(key=lambda s: 0 if 1 in s.endpoints else 1)
    first, second = (2.0 * s.abs_value for s in shorts)
    alpha = first / second
    return 1.0 / alpha if swap else alpha


def pt_period_closed_form() -> float:
    """|period| of (z^2 - 1)(z - i sqrt 3) around -1, +1 through Gamma functions"""
    return float(2.0 * np.sqrt(np.pi) * (2.0 / np.sqrt(3.0)) ** 1.5 * gamma(4.0 / 3.0) / gamma(11.0 / 6.0))


def abelian_constant_forms() -> Tuple[float, float]:
    """The two Gamma-function forms sqrt(2 pi) G(1/3)/(sqrt 3 G(1/2)) and sqrt(2/3) G(1/3)"""
    first = np.sqrt(2 * np.pi) * gamma(1.0 / 3.0) / (np.sqrt(3.0) * gamma(0.5))
    second = np.sqrt(2.0 / 3.0) * gamma(1.0 / 3.0)
    return float(first), float(second)
