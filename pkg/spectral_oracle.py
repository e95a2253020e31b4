"""
Spectral oracle
Independent numerical ground truth: eigenvalues of y'' = lambda^2 p_a(z) y by
shooting along rays into two half-planes, eigenfunctions by ODE propagation
with log-scale renormalization, and zeros by the argument principle.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root

from core_algebra import Potential, critical_directions, principal_sqrt_p
from graph_classifier import EigenvalueProblemDescriptor, StokesGraph
from quadrature import gauss_legendre
from settings import CLI, ORACLE
from stokes_errors import (
    IntegrationOverflow, InvalidData, NoSignChange, NonIntegerWinding, ZeroOnContour,
)
from wkb_engine import Spectrum, quantize

logger = logging.getLogger(__name__)

SPLIT_FRACTIONS = (0.5123, 0.4731, 0.5419)
MAX_EDGE_SAMPLES = 8192
ARG_STEP = np.pi / 4


@dataclass(frozen=True)
class Propagation:
    """Samples of (y, y') along a segment; the true value is f * exp(log_scale)"""
    t: np.ndarray
    f: np.ndarray
    df: np.ndarray
    log_scale: np.ndarray
    final: np.ndarray
    final_log: float


def _growth(q: Callable, z0: complex, z1: complex) -> float:
    nodes, weights = gauss_legendre(16)
    zs = z0 + nodes * (z1 - z0)
    return float(abs(z1 - z0) * np.dot(weights, np.sqrt(np.abs(q(zs)))))


def propagate(q: Callable, z0: complex, z1: complex, y0: complex, dy0: complex,
              n_samples: int = 2, log0: float = 0.0) -> Propagation:
    """
    Integrate y'' = q(z) y along the straight segment z0 -> z1

    The segment is cut into chunks of bounded exponential growth; the state is
    renormalized between chunks and the scale kept in log form.

    Raises:
        IntegrationOverflow on non-finite values or solver failure
    """
    dz = z1 - z0

    def rhs(t, state):
        return [dz * state[1], dz * q(z0 + t * dz) * state[0]]

    chunks = max(1, int(np.ceil(_growth(q, z0, z1) / ORACLE['growth_per_chunk'])))
    edges = np.linspace(0.0, 1.0, chunks + 1)
    t = np.linspace(0.0, 1.0, max(2, n_samples))
    f = np.empty(len(t), dtype=complex)
    df = np.empty(len(t), dtype=complex)
    logs = np.empty(len(t))

    state = np.array([y0, dy0], dtype=complex)
    scale = np.linalg.norm(state)
    if not np.isfinite(scale) or scale == 0:
        raise IntegrationOverflow(f"degenerate initial data at {z0:.6g}")
    state = state / scale
    log = log0 + np.log(scale)
    filled = 0
    for c in range(chunks):
        lo, hi = edges[c], edges[c + 1]
        stop = int(np.searchsorted(t, hi, side='right'))
        wanted = t[filled:stop]
        t_eval = np.unique(np.concatenate([wanted, [hi]]))
        solution = solve_ivp(rhs, (lo, hi), state, method='DOP853', t_eval=t_eval,
                             rtol=ORACLE['rtol'], atol=ORACLE['atol'])
        if not solution.success or not np.all(np.isfinite(solution.y)):
            raise IntegrationOverflow(f"ODE integration failed between {z0 + lo * dz:.6g} and {z0 + hi * dz:.6g}: "
                                      f"{solution.message}")
        columns = np.searchsorted(solution.t, wanted)
        f[filled:stop] = solution.y[0, columns]
        df[filled:stop] = solution.y[1, columns]
        logs[filled:stop] = log
        filled = stop
        end = solution.y[:, -1]
        scale = np.linalg.norm(end)
        if scale == 0 or not np.isfinite(scale):
            raise IntegrationOverflow(f"solution vanished or overflowed near {z0 + hi * dz:.6g}")
        state = end / scale
        log += np.log(scale)
    return Propagation(t=t, f=f, df=df, log_scale=logs, final=state, final_log=float(log))


@dataclass(frozen=True)
class ShootingProblem:
    potential: Potential
    descriptor: Optional[EigenvalueProblemDescriptor]
    rays: Tuple[float, float]
    radius: float
    matching_point: complex

    def q(self, lam: complex) -> Callable:
        lam2 = lam * lam
        return lambda z: lam2 * self.potential.p(z)

    def to_dict(self) -> dict:
        return {
            'a': [self.potential.a.real, self.potential.a.imag],
            'theta': self.potential.theta,
            'rays': list(self.rays),
            'radius': self.radius,
            'matching_point': [self.matching_point.real, self.matching_point.imag],
        }


def shooting_problem(graph: StokesGraph, descriptor: EigenvalueProblemDescriptor,
                     rays: Optional[Tuple[float, float]] = None, radius: Optional[float] = None,
                     matching_point: Optional[complex] = None) -> ShootingProblem:
    """
    Boundary-value problem for a non-admissible half-plane pair

    Rays default to the anti-Stokes directions alpha_p, alpha_q at the centre
    of the two half-planes; the matching point to the middle of the joining
    short trajectory.
    """
    pot = graph.potential
    alpha, _ = critical_directions(pot)
    p, q = descriptor.pair
    if rays is None:
        rays = (float(alpha[p]), float(alpha[q]))
    if radius is None:
        radius = ORACLE['radius_scale'] * max(1.0, abs(pot.a))
    if matching_point is None:
        i, j = descriptor.period_contours[0]
        polyline = graph.short_between(i, j).polyline
        matching_point = complex(polyline[len(polyline) // 2])
    return ShootingProblem(pot, descriptor, tuple(rays), float(radius), complex(matching_point))


def _ray_seed(prob: ShootingProblem, lam: complex, ray: float) -> Tuple[complex, complex, complex]:
    """Subdominant WKB data (y = 1, y') at R e^{i ray}"""
    pot = prob.potential
    z = prob.radius * np.exp(1j * ray)
    g = lam * complex(principal_sqrt_p(pot, z))
    sigma = -1.0 if (g * np.exp(1j * ray)).real > 0 else 1.0
    return z, 1.0 + 0j, sigma * g - pot.dp(z) / (4.0 * pot.p(z))


def ray_solution(prob: ShootingProblem, lam: complex, ray_index: int) -> Propagation:
    """Solution subdominant along one ray, propagated to the matching point"""
    z, y, dy = _ray_seed(prob, lam, prob.rays[ray_index])
    return propagate(prob.q(lam), z, prob.matching_point, y, dy)


def wronskian_mismatch(prob: ShootingProblem, lam: complex) -> complex:
    """Wronskian of the two normalized ray solutions at the matching point"""
    first = ray_solution(prob, lam, 0).final
    second = ray_solution(prob, lam, 1).final
    return complex(first[0] * second[1] - first[1] * second[0])


@dataclass(frozen=True)
class Eigenfunction:
    """Solution subdominant along the first ray, anchored at the matching point"""
    problem: ShootingProblem
    lam: complex
    base_value: complex
    base_derivative: complex

    def propagate_to(self, z: complex, n_samples: int = 2, start: Optional[Tuple] = None) -> Propagation:
        z0, y0, dy0, log0 = start if start is not None else (
            self.problem.matching_point, self.base_value, self.base_derivative, 0.0)
        return propagate(self.problem.q(self.lam), z0, complex(z), y0, dy0, n_samples, log0)

    def value(self, z: complex) -> Tuple[complex, complex]:
        """(f, f') at z up to a positive scale"""
        z = complex(z)
        if z == self.problem.matching_point:
            return self.base_value, self.base_derivative
        result = self.propagate_to(z)
        return complex(result.final[0]), complex(result.final[1])


@dataclass(frozen=True)
class ShootingResult:
    lambda_mod: float
    lam: complex
    mismatch: float
    eigenfunction: Eigenfunction

    def to_dict(self) -> dict:
        return {'lambda_mod': self.lambda_mod, 'lam': [self.lam.real, self.lam.imag], 'mismatch': self.mismatch}


def shoot_eigenvalue(prob: ShootingProblem, mod_bracket: Tuple[float, float], samples: int = 24) -> ShootingResult:
    """
    Eigenvalue near the ray arg(lambda) = theta within a bracket of |lambda|

    The bracket is scanned for the smallest Wronskian mismatch, then the
    complex root is polished with a hybrid Powell solve.

    Raises:
        NoSignChange when no root with |W| below tolerance lies in the bracket
        on the ray
    """
    lo, hi = sorted(float(x) for x in mod_bracket)
    if not 0 < lo < hi:
        raise InvalidData(f"bracket must be positive and non-empty, got {mod_bracket}")
    rotation = prob.potential.rotation
    grid = np.linspace(lo, hi, samples)
    scan = [abs(wronskian_mismatch(prob, r * rotation)) for r in grid]
    start = grid[int(np.argmin(scan))] * rotation

    def residual(x):
        m = wronskian_mismatch(prob, complex(x[0], x[1]))
        return [m.real, m.imag]

    solution = root(residual, [start.real, start.imag], method='hybr', options={'xtol': 1e-13})
    lam = complex(solution.x[0], solution.x[1])
    mismatch = abs(wronskian_mismatch(prob, lam))
    off_ray = abs(np.angle(lam * np.conj(rotation)))
    if (mismatch >= ORACLE['wronskian_tol'] or off_ray >= ORACLE['arg_tol']
            or not lo * (1 - 1e-9) <= abs(lam) <= hi * (1 + 1e-9)):
        raise NoSignChange(
            f"no eigenvalue on the ray in [{lo:.6g}, {hi:.6g}] (best |W|={mismatch:.2e}, "
            f"|lambda|={abs(lam):.6g}, off-ray {off_ray:.3g})",
            bracket=[lo, hi],
        )
    base = ray_solution(prob, lam, 0).final
    logger.info(f"Oracle eigenvalue |lambda|={abs(lam):.12g} (arg offset {off_ray:.2e}, |W|={mismatch:.1e})")
    return ShootingResult(abs(lam), lam, mismatch, Eigenfunction(prob, lam, complex(base[0]), complex(base[1])))


@dataclass(frozen=True, eq=False)
class EigenfunctionGrid:
    x: np.ndarray
    y: np.ndarray
    f: np.ndarray
    df: np.ndarray
    log_scale: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.x[None, :] + 1j * self.y[:, None]


def eigenfunction_grid(prob: ShootingProblem, lam: complex, window: Tuple[float, float, float, float],
                       resolution: int = 101, eigenfunction: Optional[Eigenfunction] = None) -> EigenfunctionGrid:
    """
    f and f' over a rectangle by horizontal sweeps

    A vertical pass along the column through the matching point supplies the
    start of each row, which is then swept left and right.

    Args:
        window: (x_min, x_max, y_min, y_max)
        resolution: Samples per axis
    """
    x_min, x_max, y_min, y_max = window
    if not (x_max > x_min and y_max > y_min):
        raise InvalidData(f"empty window {window}")
    if eigenfunction is None:
        base = ray_solution(prob, lam, 0).final
        eigenfunction = Eigenfunction(prob, lam, complex(base[0]), complex(base[1]))
    x = np.linspace(x_min, x_max, resolution)
    y = np.linspace(y_min, y_max, resolution)
    f = np.empty((resolution, resolution), dtype=complex)
    df = np.empty_like(f)
    logs = np.empty((resolution, resolution))
    m = prob.matching_point
    column = int(np.argmin(np.abs(x - m.real)))

    start = eigenfunction.propagate_to(complex(x[column], y[0]))
    state = (complex(x[column], y[0]), start.final[0], start.final[1], start.final_log)
    vertical = eigenfunction.propagate_to(complex(x[column], y[-1]), n_samples=resolution, start=state)
    for row in range(resolution):
        z_row = complex(x[column], y[row])
        seed = (z_row, vertical.f[row], vertical.df[row], vertical.log_scale[row])
        f[row, column], df[row, column], logs[row, column] = seed[1:]
        if column < resolution - 1:
            right = eigenfunction.propagate_to(complex(x[-1], y[row]), resolution - column, start=seed)
            f[row, column:], df[row, column:], logs[row, column:] = right.f, right.df, right.log_scale
        if column > 0:
            left = eigenfunction.propagate_to(complex(x[0], y[row]), column + 1, start=seed)
            f[row, column::-1], df[row, column::-1], logs[row, column::-1] = left.f, left.df, left.log_scale
    return EigenfunctionGrid(x=x, y=y, f=f, df=df, log_scale=logs)


def count_zeros(values: Sequence[complex], points: Optional[Sequence[complex]] = None,
                derivatives: Optional[Sequence[complex]] = None, clearance: float = None) -> int:
    """
    Winding number of f along a closed contour from its samples

    Args:
        values: f on the contour, in order, last sample at (or next to) the first point
        points, derivatives: Contour points and f' there, for the clearance check
        clearance: Minimum Newton distance |f/f'| from the contour to a zero

    Raises:
        ZeroOnContour when a zero is closer than the clearance
        NonIntegerWinding when the samples are too coarse or the total is not near an integer
    """
    values = np.asarray(values, dtype=complex)
    clearance = ORACLE['zero_clearance'] if clearance is None else clearance
    if np.any(values == 0):
        k = int(np.argmin(np.abs(values)))
        raise ZeroOnContour(complex(points[k]) if points is not None else complex(k), 0.0)
    if points is not None and derivatives is not None:
        distance = np.abs(values / np.asarray(derivatives, dtype=complex))
        k = int(np.argmin(distance))
        if distance[k] < clearance:
            raise ZeroOnContour(complex(points[k]), float(distance[k]))
    steps = np.angle(values[1:] / values[:-1])
    if np.max(np.abs(steps)) > np.pi / 2:
        raise NonIntegerWinding(float(np.sum(steps) / (2 * np.pi)), reason='undersampled contour')
    winding = float(np.sum(steps) / (2 * np.pi))
    if abs(winding - round(winding)) > 0.01:
        raise NonIntegerWinding(winding)
    return int(round(winding))


def sample_contour(ef: Eigenfunction, polyline: Sequence[complex], per_edge: int = 32):
    """
    f and f' along a closed polyline, refined until every step turns arg f by at most pi/4

    Returns:
        (points, f, f') with the first point repeated at the end
    """
    vertices = [complex(z) for z in polyline]
    if vertices[0] != vertices[-1]:
        vertices.append(vertices[0])
    q = ef.problem.q(ef.lam)
    first = ef.propagate_to(vertices[0])
    state = (vertices[0], first.final[0], first.final[1], first.final_log)
    points, values, derivatives = [vertices[0]], [state[1]], [state[2]]
    for z0, z1 in zip(vertices[:-1], vertices[1:]):
        n = max(per_edge, int(8 * np.ceil(_growth(q, z0, z1))))
        while True:
            edge = ef.propagate_to(z1, n, start=state)
            # compare values sharing one scale by undoing the chunk renormalization
            relative = edge.f * np.exp(edge.log_scale - edge.log_scale[0])
            if np.all(relative[1:] != 0) and np.max(np.abs(np.angle(relative[1:] / relative[:-1]))) <= ARG_STEP:
                break
            if n >= MAX_EDGE_SAMPLES:
                raise NonIntegerWinding(float('nan'), reason=f"edge {z0:.4g}->{z1:.4g} needs more than {n} samples")
            n *= 2
        zs = z0 + edge.t * (z1 - z0)
        points.extend(zs[1:])
        values.extend(relative[1:])
        derivatives.extend(edge.df[1:] * np.exp(edge.log_scale[1:] - edge.log_scale[0]))
        state = (z1, edge.final[0], edge.final[1], edge.final_log)
    return np.array(points), np.array(values), np.array(derivatives)


def contour_winding(ef: Eigenfunction, polyline: Sequence[complex], clearance: float = None) -> int:
    """Number of zeros of the eigenfunction inside a closed polyline"""
    points, values, derivatives = sample_contour(ef, polyline)
    return count_zeros(values, points, derivatives, clearance)


def _box_polyline(box: Tuple[float, float, float, float]) -> List[complex]:
    x0, x1, y0, y1 = box
    return [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]


def polish_zero(ef: Eigenfunction, z: complex, tol: float = None, max_iter: int = 40) -> Tuple[complex, float]:
    """
    Newton iteration z <- z - f/f'

    Returns:
        (zero, final Newton step |f/f'|)
    """
    tol = ORACLE['newton_tol'] if tol is None else tol
    step = np.inf
    for _ in range(max_iter):
        f, df = ef.value(z)
        if df == 0:
            break
        step = f / df
        z = z - step
        if abs(step) < tol:
            break
    return complex(z), float(abs(step))


def _moment_zeros(ef: Eigenfunction, box, count: int) -> List[complex]:
    """Zeros from the power sums (1/2 pi i) * contour integral of z^k f'/f"""
    points, values, derivatives = sample_contour(ef, _box_polyline(box), per_edge=256)
    ratio = derivatives / values
    dz = np.diff(points)
    sums = [0j]
    for k in range(1, count + 1):
        g = points ** k * ratio
        sums.append(np.sum(0.5 * (g[:-1] + g[1:]) * dz) / (2j * np.pi))
    e = [1.0 + 0j]
    for k in range(1, count + 1):
        e.append(sum((-1) ** (i - 1) * e[k - i] * sums[i] for i in range(1, k + 1)) / k)
    coefficients = [(-1) ** k * e[k] for k in range(count + 1)]
    return [complex(z) for z in np.roots(coefficients)]


def _count_box(ef: Eigenfunction, box) -> int:
    return contour_winding(ef, _box_polyline(box))


def _resolve_box(ef: Eigenfunction, box, count: int, found: List[complex], depth: int = 0):
    x0, x1, y0, y1 = box
    size = max(x1 - x0, y1 - y0)
    if count == 0:
        return
    if count == 1 and size <= ORACLE['single_zero_box']:
        z, step = polish_zero(ef, complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)))
        if step < 1e-8 and x0 - size <= z.real <= x1 + size and y0 - size <= z.imag <= y1 + size:
            found.append(z)
            return
    if size <= ORACLE['min_box'] or depth > 30:
        for z in _moment_zeros(ef, box, count):
            polished, step = polish_zero(ef, z)
            found.append(polished if step < 1e-8 else z)
        return

    for fraction in SPLIT_FRACTIONS:
        xm = x0 + fraction * (x1 - x0)
        ym = y0 + fraction * (y1 - y0)
        children = [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]
        try:
            counts = [_count_box(ef, child) for child in children]
        except (ZeroOnContour, NonIntegerWinding) as e:
            logger.debug(f"Split at {fraction} of {box} rejected: {e}")
            continue
        if sum(counts) != count:
            logger.debug(f"Split counts {counts} do not add up to {count}; trying another split")
            continue
        for child, child_count in zip(children, counts):
            _resolve_box(ef, child, child_count, found, depth + 1)
        return
    for z in _moment_zeros(ef, box, count):
        found.append(polish_zero(ef, z)[0])


@dataclass(frozen=True, eq=False)
class ZeroSet:
    eigenvalue_index: Optional[int]
    zeros: Tuple[complex, ...]
    bounded_component: Tuple[complex, ...]
    unbounded_component: Tuple[complex, ...]
    max_dist_to_support: float
    window: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def to_dict(self) -> dict:
        def pairs(zs):
            return [[z.real, z.imag] for z in zs]

        return {
            'eigenvalue_index': self.eigenvalue_index,
            'zeros': pairs(self.zeros),
            'bounded_component': pairs(self.bounded_component),
            'unbounded_component': pairs(self.unbounded_component),
            'max_dist_to_support': self.max_dist_to_support,
            'window': list(self.window),
            'support': 'marked Stokes lines: joining short trajectories and infinite lines between the pair',
        }


def polyline_distance(z: complex, polyline: np.ndarray) -> float:
    """Distance from a point to a polyline"""
    starts, ends = polyline[:-1], polyline[1:]
    d = ends - starts
    length2 = np.abs(d) ** 2
    with np.errstate(invalid='ignore', divide='ignore'):
        t = np.where(length2 > 0, ((z - starts) * np.conj(d)).real / length2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return float(np.min(np.abs(starts + t * d - z)))


def marked_lines(graph: StokesGraph, descriptor: EigenvalueProblemDescriptor) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """(short trajectories of the joining complex, infinite Stokes lines between the pair)"""
    shorts = [graph.short_between(i, j).polyline for i, j in descriptor.period_contours]
    infinite = [graph.critical_traces[k].points for k in descriptor.infinite_lines]
    return shorts, infinite


def partition_zeros(zeros: Sequence[complex], shorts: List[np.ndarray], infinite: List[np.ndarray],
                    tube: float = 0.5) -> Tuple[List[complex], List[complex], float]:
    """Split zeros by nearest support; returns (bounded, unbounded, max distance to support)"""
    bounded, unbounded = [], []
    worst = 0.0
    for z in zeros:
        to_short = min((polyline_distance(z, s) for s in shorts), default=np.inf)
        to_infinite = min((polyline_distance(z, s) for s in infinite), default=np.inf)
        if to_short <= to_infinite and (infinite or to_short < tube):
            bounded.append(z)
        else:
            unbounded.append(z)
        worst = max(worst, min(to_short, to_infinite))
    return bounded, unbounded, float(worst)


def locate_zeros(ef: Eigenfunction, window: Tuple[float, float, float, float],
                 graph: Optional[StokesGraph] = None, eigenvalue_index: Optional[int] = None) -> ZeroSet:
    """
    All zeros of the eigenfunction inside a window

    Boxes are split (off-centre, retrying other fractions when a zero sits on
    a new edge) until each holds one zero, which Newton then polishes;
    clusters in boxes at the minimum size are resolved from contour moments.
    """
    x0, x1, y0, y1 = window
    box = (x0, x1, y0, y1)
    for attempt in range(4):
        try:
            total = _count_box(ef, box)
            break
        except ZeroOnContour:
            pad = 0.01 * (attempt + 1) * max(x1 - x0, y1 - y0)
            box = (x0 - pad, x1 + pad, y0 - pad, y1 + pad)
    else:
        raise ZeroOnContour(complex(x0, y0), 0.0)

    found: List[complex] = []
    _resolve_box(ef, box, total, found)
    zeros = sorted(found, key=lambda z: (round(z.real, 8), round(z.imag, 8)))
    bounded: List[complex] = list(zeros)
    unbounded: List[complex] = []
    worst = 0.0
    if graph is not None and ef.problem.descriptor is not None:
        shorts, infinite = marked_lines(graph, ef.problem.descriptor)
        bounded, unbounded, worst = partition_zeros(zeros, shorts, infinite)
    logger.info(f"Located {len(zeros)} zero(s) in {box} ({len(bounded)} bounded)")
    return ZeroSet(eigenvalue_index, tuple(zeros), tuple(bounded), tuple(unbounded), worst, box)


def bounded_zero_count(ef: Eigenfunction, short_polyline: np.ndarray, margin: float = 0.15) -> int:
    """Zeros inside a thin contour hugging a short trajectory"""
    from periods import ellipse_contour

    start, end = complex(short_polyline[0]), complex(short_polyline[-1])
    bulge = max(polyline_distance(z, np.array([start, end])) for z in short_polyline)
    return contour_winding(ef, ellipse_contour(start, end, bulge + margin, n=128))


def oracle_spectrum(graph: StokesGraph, descriptor: EigenvalueProblemDescriptor, n_range: Sequence[int],
                    threads: Optional[int] = None, width: float = 0.2) -> Spectrum:
    """
    Shooting eigenvalues bracketed by the quantization prediction (+-width)

    Raises:
        NotAccumulating via quantize when there is no prediction to bracket
    """
    predicted = quantize(graph, descriptor, n_range)
    prob = shooting_problem(graph, descriptor)
    threads = threads or CLI['threads']

    def solve(r):
        return shoot_eigenvalue(prob, ((1 - width) * r, (1 + width) * r)).lambda_mod

    with ThreadPoolExecutor(max_workers=threads) as executor:
        levels = list(executor.map(solve, predicted.lambda_mods))
    return Spectrum(
        theta=predicted.theta, potential=predicted.potential, descriptor=descriptor,
        lambda_mods=tuple(levels), n_offset=predicted.n_offset, source='oracle',
        period_used=predicted.period_used, families=predicted.families, index_map=predicted.index_map,
    )


def shoot_real_line(alpha: float, energy_guess: complex, half_width: Optional[float] = None) -> Tuple[complex, float]:
    """
    Eigenvalue of -y'' + i (x^3 + alpha x) y = E y decaying at both ends of the real line

    Args:
        alpha: Linear coefficient
        energy_guess: Starting value for the root solve
        half_width: Integration range [-X, X]; X = max(8, 2.5 |E|^{1/3}) by default

    Returns:
        (E, normalized Wronskian mismatch)
    """
    guess = complex(energy_guess)
    width = half_width or max(8.0, 2.5 * abs(guess) ** (1.0 / 3.0))

    def mismatch(energy: complex) -> complex:
        def q(x):
            return 1j * (x ** 3 + alpha * x) - energy

        ends = []
        for edge, outward in ((width, 1.0), (-width, -1.0)):
            z = complex(edge)
            root_q = np.sqrt(q(z))
            if root_q.real < 0:
                root_q = -root_q
            dq = 1j * (3 * z ** 2 + alpha)
            ends.append(propagate(q, z, 0j, 1.0 + 0j, -outward * root_q - dq / (4.0 * q(z))).final)
        right, left = ends
        return complex(right[0] * left[1] - right[1] * left[0])

    solution = root(lambda x: [mismatch(complex(*x)).real, mismatch(complex(*x)).imag],
                    [guess.real, guess.imag], method='hybr', options={'xtol': 1e-13})
    energy = complex(solution.x[0], solution.x[1])
    residual = abs(mismatch(energy))
    if residual >= ORACLE['wronskian_tol']:
        raise NoSignChange(f"real-line shooting from E={guess:.6g} stalled at {energy:.6g} (|W|={residual:.2e})")
    return energy, residual
