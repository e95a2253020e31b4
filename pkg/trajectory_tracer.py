"""
Trajectory tracer
Integrates vertical (Stokes) and horizontal (anti-Stokes) trajectories of
e^{2i theta} p_a(z) dz^2 with an embedded Runge-Kutta 5(4) loop, continuing
sqrt(p_a) from step to step and projecting back onto the level set of h.
"""
import cmath
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core_algebra import (
    BranchContext, Potential, branch_at_turning_point, continue_value, escape_index, local_stokes_directions,
    path_increments, principal_sqrt_p, segment_integral, segment_sqrt_p, turning_point_index,
)
from quadrature import gauss_legendre
from settings import CLI, TRACER
from stokes_errors import BranchBreakdown, InvalidData, NotActuallyShort, StiffnessFailure

logger = logging.getLogger(__name__)

KINDS = ('vertical', 'horizontal')
ESCAPED = 'escaped'
HIT_TURNING_POINT = 'hit_turning_point'
ARC_LENGTH_CAP = 'arc_length_cap'

# Dormand-Prince 5(4) tableau
DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)

# the start turning point may not register as a hit until the trace is this many capture radii away
LEAVE_FACTOR = 20.0


@dataclass(frozen=True)
class TraceLimits:
    escape_radius: float
    arc_cap: float
    hit_radius: float
    rtol: float = TRACER['rtol']
    atol: float = TRACER['atol']
    min_step: float = TRACER['min_step']
    max_steps: int = TRACER['max_steps']
    step_scale: float = 1.0
    short_tol: float = TRACER['short_tol']
    gray_tol: float = TRACER['gray_tol']
    quadrature: Optional[dict] = field(default=None, compare=False)

    @classmethod
    def for_potential(cls, pot: Potential, **overrides) -> 'TraceLimits':
        limits = cls(escape_radius=pot.escape_radius, arc_cap=pot.arc_cap, hit_radius=pot.hit_radius)
        return replace(limits, **overrides) if overrides else limits

    @classmethod
    def from_settings(cls, pot: Potential, settings: dict) -> 'TraceLimits':
        """Limits for one invocation from a get_settings() copy"""
        tracer = settings['tracer']
        return cls.for_potential(
            pot, rtol=tracer['rtol'], atol=tracer['atol'], min_step=tracer['min_step'],
            max_steps=tracer['max_steps'], short_tol=tracer['short_tol'], gray_tol=tracer['gray_tol'],
            quadrature=dict(settings['quadrature']),
        )


@dataclass(frozen=True)
class Terminal:
    kind: str
    index: Optional[int] = None
    angle: Optional[float] = None

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'index': self.index, 'angle': self.angle}


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    A traced trajectory

    values holds the continued sqrt(p_a) at every point, oriented so that
    h_values (e^{i theta} times the integral from the seed, or from the start
    turning point) increase in Im h (vertical) or Re h (horizontal).
    """
    kind: str
    seed: complex
    direction: float
    points: np.ndarray
    values: np.ndarray
    h_values: np.ndarray
    terminal: Terminal
    re_h_drift: float
    start_tp: Optional[int] = None
    arc_length: float = 0.0

    @property
    def end(self) -> complex:
        return complex(self.points[-1])

    @property
    def escaped(self) -> bool:
        return self.terminal.kind == ESCAPED

    @property
    def hit(self) -> Optional[int]:
        return self.terminal.index if self.terminal.kind == HIT_TURNING_POINT else None

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'seed': [self.seed.real, self.seed.imag],
            'direction': self.direction,
            'start_tp': self.start_tp,
            'terminal': self.terminal.to_dict(),
            're_h_drift': self.re_h_drift,
            'arc_length': self.arc_length,
            'points': [[z.real, z.imag] for z in self.points],
        }


@dataclass(frozen=True, eq=False)
class ShortTrajectory:
    endpoints: Tuple[int, int]
    polyline: np.ndarray
    residual: float
    value: complex
    abs_value: float
    sheet: int = 1

    def to_dict(self) -> dict:
        return {
            'endpoints': list(self.endpoints),
            'residual': self.residual,
            'value': [self.value.real, self.value.imag],
            'abs_value': self.abs_value,
            'polyline': [[z.real, z.imag] for z in self.polyline],
        }


def _velocity(w: complex, kind: str, unrotate: complex) -> complex:
    """Unit-speed field: i e^{-i theta}/sqrt(p) (vertical), e^{-i theta}/sqrt(p) (horizontal)"""
    direction = unrotate * abs(w) / w
    return 1j * direction if kind == 'vertical' else direction


def _level_error(h: complex, kind: str) -> float:
    return h.real if kind == 'vertical' else h.imag


def _project(pot: Potential, z: complex, w: complex, h: complex, kind: str, unrotate: complex):
    """One Newton step transverse to the flow back onto Re h = 0 (Im h = 0)"""
    err = _level_error(h, kind)
    if kind == 'vertical':
        shift = -err * unrotate / w
        h = h - err
    else:
        shift = -1j * err * unrotate / w
        h = h - 1j * err
    z_new = z + shift
    w_new = complex(continue_value(pot, z, w, z_new))
    return z_new, w_new, h, err


def _dp5_step(pot: Potential, z: complex, w: complex, step: float, kind: str, unrotate: complex):
    stages = []
    for row in DP_A:
        zs = z + step * sum(a * k for a, k in zip(row, stages))
        ws = w if zs == z else complex(continue_value(pot, z, w, zs))
        stages.append(_velocity(ws, kind, unrotate))
    z5 = z + step * sum(b * k for b, k in zip(DP_B5, stages))
    z4 = z + step * sum(b * k for b, k in zip(DP_B4, stages))
    return z5, abs(z5 - z4)


def _chord_increment(pot: Potential, z0: complex, w0: complex, z1: complex) -> complex:
    """e^{i theta} times the integral of sqrt(p_a) along the chord, 5-point Gauss-Legendre"""
    nodes, weights = gauss_legendre(5)
    zs = z0 + nodes * (z1 - z0)
    ws = continue_value(pot, z0, w0, zs)
    return complex(pot.rotation * (z1 - z0) * np.dot(weights, ws))


def _check_turn(pot: Potential, z0: complex, z1: complex):
    for r in pot.roots:
        if abs(cmath.phase((z1 - r) / (z0 - r))) >= np.pi / 2:
            raise BranchBreakdown(
                f"step {z0:.6g} -> {z1:.6g} turns around turning point {r:.6g}",
                point=z1, turning_point=r,
            )


def _start_at_turning_point(pot: Potential, index: int, direction: float, kind: str, unrotate: complex):
    tp = pot.roots[index]
    z = tp + pot.capture_radius * cmath.exp(1j * direction)
    w = complex(principal_sqrt_p(pot, z))
    if (_velocity(w, kind, unrotate) * cmath.exp(-1j * direction)).real < 0:
        w = -w
    for _ in range(3):
        reference = complex(segment_sqrt_p(pot, tp, z, np.array([1.0]), np.array([0.0]), 1, start_tp=index)[0])
        sign = 1 if abs(reference - w) < abs(reference + w) else -1
        h = pot.rotation * segment_integral(pot, tp, z, sign, start_tp=index)
        if abs(_level_error(h, kind)) < 1e-15:
            break
        z, w, _, _ = _project(pot, z, w, h, kind, unrotate)
    reference = complex(segment_sqrt_p(pot, tp, z, np.array([1.0]), np.array([0.0]), 1, start_tp=index)[0])
    sign = 1 if abs(reference - w) < abs(reference + w) else -1
    h = pot.rotation * segment_integral(pot, tp, z, sign, start_tp=index)
    return z, w, h


def trace(pot: Potential, seed: complex, direction: float, kind: str = 'vertical',
          limits: Optional[TraceLimits] = None) -> Trajectory:
    """
    Trace one trajectory from a turning point or a regular point

    Args:
        pot: Potential
        seed: A turning point (critical trace) or a regular point
        direction: Departure angle; at a regular seed it only fixes the orientation
        kind: 'vertical' (Re h constant) or 'horizontal' (Im h constant)
        limits: Escape radius, arc-length cap, hit radius and step controls

    Returns:
        Trajectory with its terminal: escaped (index j of the asymptotic
        direction), hit_turning_point (index) or arc_length_cap
    """
    if kind not in KINDS:
        raise InvalidData(f"unknown trajectory kind: {kind}")
    limits = limits or TraceLimits.for_potential(pot)
    unrotate = cmath.exp(-1j * pot.theta)
    seed = complex(seed)
    start_tp = turning_point_index(pot, seed, radius=1e-12 * pot.scale)

    if start_tp is not None:
        z, w, h = _start_at_turning_point(pot, start_tp, direction, kind, unrotate)
    else:
        z = seed
        w = complex(principal_sqrt_p(pot, z))
        if w == 0:
            raise InvalidData(f"seed {seed} is a turning point to machine precision")
        if (_velocity(w, kind, unrotate) * cmath.exp(-1j * direction)).real < 0:
            w = -w
        h = 0j

    roots = pot.roots
    points = [z]
    values = [w]
    h_values = [h]
    arc = 0.0
    drift = 0.0
    step = 0.25 * pot.capture_radius
    leaving = start_tp is not None
    leave_radius = LEAVE_FACTOR * pot.capture_radius
    terminal = None

    for _ in range(limits.max_steps):
        distances = [abs(z - r) for r in roots]
        if leaving and distances[start_tp] > leave_radius:
            leaving = False
        for index, distance in enumerate(distances):
            if leaving and index == start_tp:
                continue
            if distance < limits.hit_radius:
                terminal = Terminal(HIT_TURNING_POINT, index=index)
                break
        if terminal is None and abs(z) > limits.escape_radius:
            angle = float(np.mod(cmath.phase(z), 2 * np.pi))
            terminal = Terminal(ESCAPED, index=escape_index(pot, angle, kind), angle=angle)
        if terminal is None and arc > limits.arc_cap:
            terminal = Terminal(ARC_LENGTH_CAP)
        if terminal is not None:
            break

        h_max = limits.step_scale * min(0.5 * min(distances), 0.1 * (1.0 + abs(z)))
        step = min(step, h_max)
        tol = limits.atol + limits.rtol * max(1.0, abs(z))
        z_new, err_est = _dp5_step(pot, z, w, step, kind, unrotate)
        if err_est > tol:
            step *= max(0.2, 0.9 * (tol / err_est) ** 0.2)
            if step < limits.min_step:
                raise StiffnessFailure(z, step)
            continue

        _check_turn(pot, z, z_new)
        w_new = complex(continue_value(pot, z, w, z_new))
        h_new = h + _chord_increment(pot, z, w, z_new)
        z_new, w_new, h_new, err = _project(pot, z_new, w_new, h_new, kind, unrotate)
        drift = max(drift, abs(err))

        if kind == 'vertical' and not h_new.imag > h.imag:
            raise BranchBreakdown(f"Im h stopped increasing at {z_new:.6g}", point=z_new)
        if kind == 'horizontal' and not h_new.real > h.real:
            raise BranchBreakdown(f"Re h stopped increasing at {z_new:.6g}", point=z_new)
        p_new = pot.p(z_new)
        if abs(w_new * w_new - p_new) > TRACER['branch_check_tol'] * max(1.0, abs(p_new)):
            raise BranchBreakdown(f"continued root no longer squares to p at {z_new:.6g}", point=z_new)

        arc += abs(z_new - z)
        z, w, h = z_new, w_new, h_new
        points.append(z)
        values.append(w)
        h_values.append(h)
        growth = 5.0 if err_est == 0 else min(5.0, 0.9 * (tol / err_est) ** 0.2)
        step *= growth
    else:
        raise StiffnessFailure(z, step)

    logger.debug(f"{kind} trace from {seed:.4g} dir {direction:.4f}: {terminal.kind} "
                 f"{terminal.index} after {len(points)} points, drift {drift:.2e}")
    return Trajectory(
        kind=kind,
        seed=seed,
        direction=float(direction),
        points=np.array(points),
        values=np.array(values),
        h_values=np.array(h_values),
        terminal=terminal,
        re_h_drift=float(drift),
        start_tp=start_tp,
        arc_length=float(arc),
    )


def trace_critical_graph(pot: Potential, limits: Optional[TraceLimits] = None,
                         threads: Optional[int] = None) -> List[Trajectory]:
    """Three Stokes lines from each turning point, ordered by turning point then direction"""
    jobs = []
    for index, location in enumerate(pot.roots):
        for direction in local_stokes_directions(pot, location):
            jobs.append((location, float(direction)))
    threads = threads or CLI['threads']
    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures = [executor.submit(trace, pot, seed, direction, 'vertical', limits) for seed, direction in jobs]
        return [future.result() for future in futures]


def order_escapes(pot: Potential, first: Trajectory, second: Trajectory) -> int:
    """
    Order two traces escaping along the same asymptotic direction

    Returns:
        +1 when `second` lies counterclockwise of `first` near infinity, -1 otherwise
    """
    z1, z2 = first.end, second.end
    nodes, weights = gauss_legendre(16)
    zs = z1 + nodes * (z2 - z1)
    ws = continue_value(pot, z1, first.values[-1], zs)
    delta = pot.rotation * (z2 - z1) * np.dot(weights, ws)
    level = delta.real if first.kind == 'vertical' else -delta.imag
    return 1 if level < 0 else -1


def refine_short_trajectory(pot: Potential, tp_pair: Sequence[int], coarse,
                            quadrature: dict = None, short_tol: float = None) -> ShortTrajectory:
    """
    Confirm a short trajectory by quadrature between the exact turning points

    Args:
        pot: Potential
        tp_pair: (start, end) turning-point indices
        coarse: Trajectory from the start turning point, or a plain polyline
        quadrature: Tolerance overrides for the confirming integral
        short_tol: Residual bound (default TRACER['short_tol'])

    Returns:
        ShortTrajectory whose residual |Re h| along the turning-point path is
        below the short-trajectory tolerance

    Raises:
        NotActuallyShort with the residual when the tolerance is not met
    """
    i, j = (int(k) for k in tp_pair)
    if i == j:
        raise InvalidData(f"short trajectory needs distinct turning points, got {i} twice")
    roots = pot.roots
    trajectory = coarse if isinstance(coarse, Trajectory) else None
    points = np.asarray(coarse.points if trajectory is not None else coarse, dtype=complex)
    values = trajectory.values if trajectory is not None else None

    keep = 2.0 * pot.capture_radius
    mask = (np.abs(points - roots[i]) > keep) & (np.abs(points - roots[j]) > keep)
    interior = points[mask]
    interior_values = values[mask] if values is not None else None
    max_vertices = TRACER['max_polyline_vertices']
    if len(interior) > max_vertices - 2:
        index = np.unique(np.round(np.linspace(0, len(interior) - 1, max_vertices - 2)).astype(int))
        interior = interior[index]
        interior_values = interior_values[index] if interior_values is not None else None
    polyline = np.concatenate([[roots[i]], interior, [roots[j]]])

    sheet = 1
    if interior_values is not None and len(interior):
        reference = complex(segment_sqrt_p(pot, roots[i], interior[0], np.array([1.0]), np.array([0.0]),
                                           1, start_tp=i)[0])
        sheet = 1 if abs(reference - interior_values[0]) < abs(reference + interior_values[0]) else -1

    increments, _ = path_increments(branch_at_turning_point(pot, i, sheet), polyline, quadrature)
    value = complex(increments.sum())
    residual = abs(value.real)
    if residual >= (TRACER['short_tol'] if short_tol is None else short_tol):
        logger.info(f"Pair {(i, j)} for a={pot.a:.6g}, theta={pot.theta:.6f}: residual {residual:.3e}")
        raise NotActuallyShort((i, j), residual)

    if trajectory is not None:
        h = trajectory.h_values
        tail_ctx = BranchContext(potential=pot, base_point=trajectory.end,
                                 base_value=complex(trajectory.values[-1]))
        tail, _ = path_increments(tail_ctx, [trajectory.end, roots[j]], quadrature)
        abs_value = float(abs(h[0]) + np.abs(np.diff(h)).sum() + abs(tail.sum()))
    else:
        abs_value = float(np.abs(increments).sum())
    return ShortTrajectory(endpoints=(i, j), polyline=polyline, residual=float(residual),
                           value=value, abs_value=abs_value, sheet=sheet)
