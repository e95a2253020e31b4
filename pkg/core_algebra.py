"""
Core algebra for the cubic quadratic differential -lambda^2 (z - a)(z^2 - 1) dz^2
Potential, turning points, branch-tracked square roots and path integrals
h = e^{i theta} * integral of sqrt(p_a) along polylines.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from quadrature import integrate_sqrt_endpoints
from settings import GEOMETRY
from stokes_errors import InvalidData, InvalidPotential, PathTooCloseToTurningPoint

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
TURNING_POINT_LABELS = ('minus1', 'plus1', 'a')

# half the total angle the roots may subtend on one logged sub-segment
MAX_SAMPLE_TURN = np.pi / 4


@dataclass(frozen=True)
class Potential:
    """
    The triple (a, theta, |lambda|) behind p_a(z) = (z - 1)(z + 1)(z - a)

    theta is stored modulo pi; a must avoid the fixed turning points +-1.
    """
    a: complex
    theta: float = 0.0
    lambda_mod: Optional[float] = None

    def __post_init__(self):
        a = complex(self.a)
        if a == 1 or a == -1:
            raise InvalidPotential(f"a = {a} coincides with a fixed turning point", a=a)
        if not np.isfinite(a):
            raise InvalidPotential(f"a = {a} is not finite", a=a)
        if self.lambda_mod is not None and not self.lambda_mod > 0:
            raise InvalidData(f"|lambda| must be positive, got {self.lambda_mod}")
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'theta', float(np.mod(self.theta, np.pi)))

    @property
    def roots(self) -> Tuple[complex, complex, complex]:
        return (-1.0 + 0j, 1.0 + 0j, self.a)

    @property
    def rotation(self) -> complex:
        return np.exp(1j * self.theta)

    @property
    def scale(self) -> float:
        return 1.0 + abs(self.a)

    @property
    def capture_radius(self) -> float:
        return GEOMETRY['capture_scale'] * self.scale

    @property
    def hit_radius(self) -> float:
        return GEOMETRY['hit_factor'] * self.capture_radius

    @property
    def escape_radius(self) -> float:
        return GEOMETRY['escape_scale'] * max(1.0, abs(self.a))

    @property
    def arc_cap(self) -> float:
        return GEOMETRY['arc_cap_scale'] * self.scale

    def p(self, z):
        return (z - 1.0) * (z + 1.0) * (z - self.a)

    def dp(self, z):
        return 3.0 * z * z - 2.0 * self.a * z - 1.0

    def d2p(self, z):
        return 6.0 * z - 2.0 * self.a

    def with_theta(self, theta: float) -> 'Potential':
        return replace(self, theta=theta)

    def to_dict(self) -> dict:
        return {
            'a': [self.a.real, self.a.imag],
            'theta': self.theta,
            'lambda_mod': self.lambda_mod,
        }


@dataclass(frozen=True)
class TurningPoint:
    index: int
    location: complex
    local_directions: Tuple[float, float, float]
    local_orthogonal_directions: Tuple[float, float, float]

    @property
    def label(self) -> str:
        return TURNING_POINT_LABELS[self.index]


@dataclass(frozen=True)
class BranchContext:
    """
    A chosen value of sqrt(p_a) at base_point plus its continuation record

    At a turning point the value is 0 and `sheet` (+1/-1) selects the branch
    on the first segment leaving it: sheet times the product of the principal
    local factors.
    """
    potential: Potential
    base_point: complex
    base_value: complex
    continuation_log: Tuple[Tuple[complex, complex], ...] = field(default_factory=tuple)
    sheet: int = 1

    @property
    def current_point(self) -> complex:
        return self.continuation_log[-1][0] if self.continuation_log else self.base_point

    @property
    def current_value(self) -> complex:
        return self.continuation_log[-1][1] if self.continuation_log else self.base_value

    @property
    def current_turning_point(self) -> Optional[int]:
        if self.current_value != 0:
            return None
        return turning_point_index(self.potential, self.current_point)

    @property
    def final_value(self) -> complex:
        return self.current_value


@dataclass(frozen=True)
class PathIntegral:
    start: complex
    end: complex
    value: complex
    branch: BranchContext
    path: Tuple[complex, ...] = ()

    @property
    def unrotated(self) -> complex:
        """integral of sqrt(p_a) dz without the e^{i theta} factor"""
        return self.value * np.exp(-1j * self.branch.potential.theta)


def potential_eval(pot: Potential, z: complex) -> complex:
    return pot.p(z)


def principal_sqrt_p(pot: Potential, z):
    """Product of the principal square roots of the three linear factors"""
    z = np.asarray(z, dtype=complex)
    return np.sqrt(z + 1.0) * np.sqrt(z - 1.0) * np.sqrt(z - pot.a)


def continue_value(pot: Potential, z0, w0, z1):
    """
    Continue sqrt(p_a) from (z0, w0) to a nearby z1 by the ratio product

    Each factor sqrt((z1 - r)/(z0 - r)) is principal, valid while no factor
    turns by more than pi between the two points.
    """
    w = np.asarray(w0, dtype=complex)
    for r in pot.roots:
        w = w * np.sqrt((z1 - r) / (z0 - r))
    return w


def normalize_angle(angle):
    return np.mod(angle, TWO_PI)


def critical_directions(pot: Potential) -> Tuple[np.ndarray, np.ndarray]:
    """
    Asymptotic directions at infinity

    Returns:
        (alpha, alpha_perp): horizontal directions (2j pi - 2 theta)/5 and
        vertical directions ((2j - 1) pi - 2 theta)/5, j = 0..4, in [0, 2 pi)
    """
    j = np.arange(5)
    alpha = normalize_angle((2 * j * np.pi - 2 * pot.theta) / 5)
    alpha_perp = normalize_angle(((2 * j - 1) * np.pi - 2 * pot.theta) / 5)
    return alpha, alpha_perp


def escape_index(pot: Potential, angle: float, kind: str) -> int:
    """Index j of the asymptotic direction nearest to `angle`"""
    if kind == 'vertical':
        j = np.round((5 * angle + 2 * pot.theta + np.pi) / TWO_PI)
    elif kind == 'horizontal':
        j = np.round((5 * angle + 2 * pot.theta) / TWO_PI)
    else:
        raise InvalidData(f"unknown trajectory kind: {kind}")
    return int(j) % 5


def half_plane_sectors(pot: Potential) -> List[dict]:
    """
    Angular sector of every half-plane domain H_k at infinity

    H_k lies between the vertical directions alpha_k_perp and alpha_{k+1}_perp
    and contains the horizontal direction alpha_k.
    """
    alpha, alpha_perp = critical_directions(pot)
    sectors = []
    for k in range(5):
        sectors.append({
            'index': k,
            'start': float(alpha_perp[k]),
            'end': float(alpha_perp[(k + 1) % 5]),
            'centre': float(alpha[k]),
        })
    return sectors


def local_stokes_directions(pot: Potential, tp_location: complex) -> np.ndarray:
    """Departure angles of the three Stokes lines at a simple turning point"""
    base = np.pi - 2 * pot.theta - np.angle(pot.dp(tp_location))
    return (base + TWO_PI * np.arange(3)) / 3


def local_antistokes_directions(pot: Potential, tp_location: complex) -> np.ndarray:
    base = -2 * pot.theta - np.angle(pot.dp(tp_location))
    return (base + TWO_PI * np.arange(3)) / 3


def turning_points(pot: Potential) -> List[TurningPoint]:
    points = []
    for index, location in enumerate(pot.roots):
        points.append(TurningPoint(
            index=index,
            location=location,
            local_directions=tuple(float(x) for x in local_stokes_directions(pot, location)),
            local_orthogonal_directions=tuple(float(x) for x in local_antistokes_directions(pot, location)),
        ))
    return points


def turning_point_index(pot: Potential, z: complex, radius: float = None) -> Optional[int]:
    """Index of the turning point within `radius` of z (exact match by default)"""
    tol = 1e-14 * pot.scale if radius is None else radius
    for index, r in enumerate(pot.roots):
        if abs(z - r) <= tol:
            return index
    return None


def symmetric_partner(pot: Potential) -> Potential:
    """
    (a, theta) -> (-a, theta + pi/2)

    z -> -z carries the trajectories of the original onto those of the
    partner with the vertical/horizontal kinds preserved.
    """
    return Potential(-pot.a, pot.theta + np.pi / 2, pot.lambda_mod)


def rotated_partner(pot: Potential) -> Potential:
    """(a, theta) -> (a, theta + pi/2): same points, vertical and horizontal swapped"""
    return Potential(pot.a, pot.theta + np.pi / 2, pot.lambda_mod)


def reflected_partner(pot: Potential) -> Potential:
    """
    (a, theta) -> (-conj(a), pi/2 - theta)

    z -> -conj(z) maps trajectories onto trajectories of the same kind and
    exchanges the turning points -1 and +1.
    """
    return Potential(-np.conj(pot.a), np.pi / 2 - pot.theta, pot.lambda_mod)


def branch_at(pot: Potential, z: complex, value: complex = None) -> BranchContext:
    """Branch context at a regular point; principal product value unless given"""
    if pot.p(z) == 0:
        raise InvalidData(f"{z} is a turning point; use branch_at_turning_point")
    if value is None:
        value = complex(principal_sqrt_p(pot, z))
    elif abs(value * value - pot.p(z)) > 1e-12 * max(1.0, abs(pot.p(z))):
        raise InvalidData(f"value {value} is not a square root of p({z})")
    return BranchContext(potential=pot, base_point=complex(z), base_value=complex(value))


def branch_at_turning_point(pot: Potential, index: int, sheet: int = 1) -> BranchContext:
    if sheet not in (1, -1):
        raise InvalidData(f"sheet must be +1 or -1, got {sheet}")
    return BranchContext(potential=pot, base_point=pot.roots[index], base_value=0j, sheet=sheet)


def segment_sign(pot: Potential, start: complex, value: complex) -> int:
    """Sign s with value = s * product of principal factor roots at start"""
    principal = principal_sqrt_p(pot, start)
    return 1 if (value * np.conj(principal)).real >= 0 else -1


def segment_sqrt_p(pot: Potential, start: complex, end: complex, t, omt, sign: int,
                   start_tp: Optional[int] = None, end_tp: Optional[int] = None):
    """
    sqrt(p_a) on the straight segment start + t (end - start), t in [0, 1]

    Continuous in t provided the open segment avoids the roots. A factor whose
    root is the start (end) turning point becomes sqrt(t) sqrt(end - start)
    (sqrt(start - r) sqrt(1 - t)); `omt` carries 1 - t exactly.
    """
    t = np.asarray(t, dtype=float)
    omt = np.asarray(omt, dtype=float)
    d = end - start
    w = np.full(t.shape, float(sign), dtype=complex)
    for index, r in enumerate(pot.roots):
        if index == start_tp:
            w = w * np.sqrt(t) * np.sqrt(d)
        elif index == end_tp:
            w = w * np.sqrt(start - r) * np.sqrt(omt)
        else:
            w = w * np.sqrt(start - r) * np.sqrt(1.0 + t * (d / (start - r)))
    return w


def segment_integral(pot: Potential, start: complex, end: complex, sign: int,
                     start_tp: Optional[int] = None, end_tp: Optional[int] = None,
                     quadrature: dict = None) -> complex:
    """Unrotated integral of sqrt(p_a) dz over one straight segment"""
    if start == end:
        return 0j
    quadrature = quadrature or {}
    integral = integrate_sqrt_endpoints(
        lambda t, omt: segment_sqrt_p(pot, start, end, t, omt, sign, start_tp, end_tp),
        singular_start=start_tp is not None,
        singular_end=end_tp is not None,
        **quadrature,
    )
    return (end - start) * integral


def _segment_distance(start: complex, end: complex, point: complex) -> float:
    d = end - start
    if d == 0:
        return abs(point - start)
    t = np.clip(((point - start) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return abs(start + t * d - point)


def _subtended(pot: Potential, start: complex, end: complex) -> float:
    total = 0.0
    for r in pot.roots:
        if start == r or end == r:
            continue
        total += abs(np.angle((end - r) / (start - r)))
    return total


def _split_points(pot: Potential, start: complex, end: complex, depth: int = 0) -> List[complex]:
    """Interior points so that every piece turns sqrt(p_a) by at most MAX_SAMPLE_TURN"""
    if depth > 30 or 0.5 * _subtended(pot, start, end) <= MAX_SAMPLE_TURN:
        return []
    mid = 0.5 * (start + end)
    return _split_points(pot, start, mid, depth + 1) + [mid] + _split_points(pot, mid, end, depth + 1)


def _walk(ctx: BranchContext, path: Sequence[complex], clearance: float,
          allow_end_tp: bool) -> Tuple[List[Tuple[complex, complex]], List[dict]]:
    """
    Continue the branch along a polyline

    Returns:
        (log samples appended, per-segment records with start value sign and
        turning-point endpoint flags)
    """
    pot = ctx.potential
    point = ctx.current_point
    value = ctx.current_value
    start_tp = ctx.current_turning_point
    sheet = ctx.sheet
    samples = []
    segments = []
    points = [complex(z) for z in path]
    if points and points[0] == point:
        points = points[1:]

    for k, nxt in enumerate(points):
        if nxt == point:
            continue
        last = k == len(points) - 1
        end_tp = turning_point_index(pot, nxt) if (last and allow_end_tp) else None
        for index, r in enumerate(pot.roots):
            if index in (start_tp, end_tp):
                continue
            distance = _segment_distance(point, nxt, r)
            if distance <= clearance:
                raise PathTooCloseToTurningPoint(nxt, r, clearance)

        sign = sheet if start_tp is not None else segment_sign(pot, point, value)
        segments.append({'start': point, 'end': nxt, 'sign': sign, 'start_tp': start_tp, 'end_tp': end_tp})

        pieces = _split_points(pot, point, nxt) + [nxt]
        d = nxt - point
        for z in pieces:
            t = ((z - point) * np.conj(d)).real / abs(d) ** 2
            if z == nxt:
                t, omt = 1.0, 0.0
            else:
                omt = 1.0 - t
            w = complex(segment_sqrt_p(pot, point, nxt, np.array([t]), np.array([omt]), sign, start_tp, end_tp)[0])
            samples.append((z, w))
        point = nxt
        value = samples[-1][1]
        start_tp = end_tp
    return samples, segments


def continue_branch(ctx: BranchContext, path: Sequence[complex]) -> BranchContext:
    """
    Analytic continuation of sqrt(p_a) along a polyline

    Args:
        ctx: Branch at the first path point
        path: Polyline; every segment must clear the turning points by the
            capture radius (a turning-point base may be left by the first segment)

    Returns:
        New context with the continuation log extended
    """
    pot = ctx.potential
    samples, _ = _walk(ctx, path, pot.capture_radius, allow_end_tp=False)
    return replace(ctx, continuation_log=ctx.continuation_log + tuple(samples))


def h_integral(pot: Potential, z0: complex, z: complex, path: Optional[Sequence[complex]] = None,
               ctx: Optional[BranchContext] = None, quadrature: dict = None) -> PathIntegral:
    """
    h = e^{i theta} * integral of sqrt(p_a) from z0 to z along a polyline

    Args:
        pot: Potential
        z0, z: Endpoints; either may be a turning point
        path: Polyline from z0 to z (straight segment when None)
        ctx: Branch valid at z0 (principal at a regular z0, sheet +1 at a turning point)

    Returns:
        PathIntegral with the branch continued to z
    """
    z0 = complex(z0)
    z = complex(z)
    if ctx is None:
        tp = turning_point_index(pot, z0)
        ctx = branch_at_turning_point(pot, tp) if tp is not None else branch_at(pot, z0)
    if ctx.current_point != z0:
        raise InvalidData(f"branch context is at {ctx.current_point}, integral starts at {z0}")
    points = [z0, z] if path is None else [complex(p) for p in path]
    if points[0] != z0 or points[-1] != z:
        raise InvalidData("path endpoints do not match z0 and z")
    if z == z0 and len(points) <= 2:
        return PathIntegral(start=z0, end=z, value=0j, branch=ctx, path=tuple(points))

    increments, branch = path_increments(ctx, points, quadrature)
    return PathIntegral(start=z0, end=z, value=complex(increments.sum()), branch=branch, path=tuple(points))


def path_increments(ctx: BranchContext, points: Sequence[complex],
                    quadrature: dict = None) -> Tuple[np.ndarray, BranchContext]:
    """
    Per-segment values of e^{i theta} * integral of sqrt(p_a) along a polyline

    The last point may be a turning point; the first may be one if ctx sits there.

    Returns:
        (array of rotated segment integrals, branch continued to the last point)
    """
    pot = ctx.potential
    samples, segments = _walk(ctx, points, 1e-13 * pot.scale, allow_end_tp=True)
    increments = np.array([
        segment_integral(pot, seg['start'], seg['end'], seg['sign'],
                         seg['start_tp'], seg['end_tp'], quadrature)
        for seg in segments
    ], dtype=complex)
    branch = replace(ctx, continuation_log=ctx.continuation_log + tuple(samples))
    return pot.rotation * increments, branch
