"""
Level sets in the parameter plane
Curves Sigma_{+1}, Sigma_{-1}, Sigma_triangle where Re(e^{i theta} * integral of
sqrt(p_a)) vanishes, their special points, the short-trajectory arcs S and the
region count of the resulting arrangement.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from core_algebra import Potential, branch_at_turning_point, h_integral
from quadrature import integrate_sqrt_endpoints, sqrt_endpoint_rule
from settings import CLI, LEVEL_SETS
from stokes_errors import ContinuationStalled, InvalidData, NewtonDiverged, OnExcludedCut, StokesError

logger = logging.getLogger(__name__)

WHICH = ('plus1', 'minus1', 'triangle')

# turning-point pair joined along each curve family
WHICH_PAIRS = {
    'plus1': (1, 2),
    'minus1': (0, 2),
    'triangle': (0, 1),
}

REAL_TOL = 1e-14
MAX_CURVE_POINTS = 20000
NEWTON_ITERATIONS = 8


@dataclass(frozen=True, eq=False)
class LevelSetCurve:
    which: str
    theta: float
    points: np.ndarray
    branch_tag: str
    end_reasons: Tuple[str, str] = ('', '')
    in_s: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            'which': self.which,
            'theta': self.theta,
            'branch_tag': self.branch_tag,
            'end_reasons': list(self.end_reasons),
            'in_s': self.in_s,
            'points': [[a.real, a.imag] for a in self.points],
        }


@dataclass(frozen=True, eq=False)
class LevelSetAtlas:
    theta: float
    curves: Tuple[LevelSetCurve, ...]
    s_triangle: float
    t_point: Optional[complex] = None
    e_point: Optional[complex] = None
    n_regions: Optional[int] = None
    special_residuals: Dict[str, float] = field(default_factory=dict)

    def curves_of(self, which: str) -> List[LevelSetCurve]:
        return [c for c in self.curves if c.which == which]

    def to_dict(self) -> dict:
        return {
            'theta': self.theta,
            's_triangle': self.s_triangle,
            't_point': None if self.t_point is None else [self.t_point.real, self.t_point.imag],
            'e_point': None if self.e_point is None else [self.e_point.real, self.e_point.imag],
            'n_regions': self.n_regions,
            'special_residuals': self.special_residuals,
            'curves': [c.to_dict() for c in self.curves],
        }


def _is_real(a: complex) -> bool:
    return abs(a.imag) <= REAL_TOL * max(1.0, abs(a.real))


def _triangle_on_segment(s: float, theta: float) -> float:
    """Residual for real a = s in [-1, 1], boundary value from the upper half-plane"""
    left = 1.0 + s
    right = 1.0 - s
    lower = 0.0
    upper = 0.0
    if left > 0:
        # x = -1 + t (1 + s)
        lower = left * integrate_sqrt_endpoints(
            lambda t, omt: (np.sqrt(t * left) * np.sqrt(2.0 - t * left) * np.sqrt(omt * left)).astype(complex),
            singular_start=True, singular_end=True,
        ).real
    if right > 0:
        # x = s + t (1 - s)
        upper = right * integrate_sqrt_endpoints(
            lambda t, omt: (np.sqrt(left + t * right) * np.sqrt(omt * right) * np.sqrt(t * right)).astype(complex),
            singular_start=True, singular_end=True,
        ).real
    return float(lower * np.cos(theta) - upper * np.sin(theta))


def sigma_value(a: complex, theta: float, which: str) -> complex:
    """
    G(a) = e^{i theta} * integral of sqrt(p_a) along the straight defining path

    plus1: from 1 to a, minus1: from -1 to a (both principal at the base
    turning point, sheet +1), triangle: from -1 to 1.
    """
    if which not in WHICH:
        raise InvalidData(f"unknown level set: {which}")
    a = complex(a)
    if which == 'plus1':
        if _is_real(a) and a.real <= -1:
            raise OnExcludedCut(a, which)
        if a == 1:
            return 0j
        pot = Potential(a, theta)
        return h_integral(pot, 1.0, a, ctx=branch_at_turning_point(pot, 1)).value
    if which == 'minus1':
        if _is_real(a) and a.real >= 1:
            raise OnExcludedCut(a, which)
        if a == -1:
            return 0j
        pot = Potential(a, theta)
        return h_integral(pot, -1.0, a, ctx=branch_at_turning_point(pot, 0)).value
    if _is_real(a) and -1 <= a.real <= 1:
        raise OnExcludedCut(a, which)
    pot = Potential(a, theta)
    return h_integral(pot, -1.0, 1.0, ctx=branch_at_turning_point(pot, 0)).value


def sigma_residual(a: complex, theta: float, which: str) -> float:
    """
    Re G(a) for the chosen curve family

    Raises:
        OnExcludedCut for a on (-inf, -1] (plus1) or [1, inf) (minus1)
    """
    a = complex(a)
    if which == 'triangle' and _is_real(a) and -1 <= a.real <= 1:
        return _triangle_on_segment(a.real, theta)
    return float(sigma_value(a, theta, which).real)


def _derivative(a: complex, theta: float, which: str) -> complex:
    eta = LEVEL_SETS['fd_step']
    return (sigma_value(a + eta, theta, which) - sigma_value(a - eta, theta, which)) / (2 * eta)


def grid_values(a: np.ndarray, theta: float, which: str, n: int = 24) -> np.ndarray:
    """Vectorised G over an array of parameters with a fixed substitution rule"""
    a = np.asarray(a, dtype=complex)[..., None]
    t, omt, w = sqrt_endpoint_rule(n, True, True)
    if which == 'plus1':
        d = a - 1.0
        s = np.sqrt(t) * np.sqrt(d) * np.sqrt(2.0) * np.sqrt(1.0 + t * d / 2.0) * np.sqrt(1.0 - a) * np.sqrt(omt)
    elif which == 'minus1':
        d = a + 1.0
        s = np.sqrt(t) * np.sqrt(d) * np.sqrt(-2.0 + 0j) * np.sqrt(1.0 - t * d / 2.0) * np.sqrt(-1.0 - a) * np.sqrt(omt)
    else:
        d = 2.0
        s = np.sqrt(t) * np.sqrt(2.0) * np.sqrt(-2.0 + 0j) * np.sqrt(omt) * np.sqrt(-1.0 - a) * np.sqrt(1.0 + 2.0 * t / (-1.0 - a))
    return np.exp(1j * theta) * ((d * s) @ w)


def _excluded(a: complex, which: str) -> bool:
    if not _is_real(a) and abs(a.imag) > 1e-3:
        return False
    if which == 'plus1':
        return a.real < -1
    if which == 'minus1':
        return a.real > 1
    return -1 < a.real < 1


def _cut_crossing(a: complex, b: complex, which: str) -> Optional[complex]:
    """Point where the step a -> b crosses the real axis inside the excluded interval"""
    if a.imag * b.imag >= 0:
        return None
    x = a.real - a.imag * (b.real - a.real) / (b.imag - a.imag)
    crossing = complex(x, 0.0)
    return crossing if _excluded(crossing, which) else None


def _newton_to_curve(a: complex, theta: float, which: str, tol: float) -> Tuple[complex, int]:
    for iteration in range(NEWTON_ITERATIONS):
        value = sigma_value(a, theta, which)
        if abs(value.real) < tol:
            return a, iteration
        slope = _derivative(a, theta, which)
        if slope == 0:
            break
        a = a - value.real * np.conj(slope) / abs(slope) ** 2
    raise NewtonDiverged(f"corrector did not converge near {a:.6g} on Sigma[{which}]")


def _tangent(a: complex, theta: float, which: str) -> complex:
    slope = _derivative(a, theta, which)
    return 1j * np.conj(slope) / abs(slope)


def _continue(seed: complex, theta: float, which: str, orientation: int,
              radius: float) -> Tuple[List[complex], str]:
    settings = LEVEL_SETS
    a = seed
    points = [a]
    direction = orientation * _tangent(a, theta, which)
    step = settings['step']
    reason = 'max_points'
    while len(points) < MAX_CURVE_POINTS:
        near_tp = min(abs(a - 1), abs(a + 1))
        trial = min(step, max(0.25 * near_tp, settings['min_step']))
        try:
            candidate, iterations = _newton_to_curve(a + trial * direction, theta, which, settings['newton_tol'])
            moved = abs(candidate - a)
            if moved > 2.0 * trial or moved < 0.1 * trial:
                raise NewtonDiverged("corrector left the predictor neighbourhood")
        except StokesError:
            step = 0.5 * trial
            if step < settings['min_step']:
                raise ContinuationStalled(a, step)
            continue

        crossing = _cut_crossing(a, candidate, which)
        if crossing is not None:
            points.append(crossing)
            reason = 'cut'
            break

        new_direction = _tangent(candidate, theta, which)
        if (new_direction * np.conj(direction)).real < 0:
            new_direction = -new_direction
        turn = abs(np.angle(new_direction * np.conj(direction)))
        a, direction = candidate, new_direction
        points.append(a)

        if abs(a) > radius:
            reason = 'radius'
            break
        if min(abs(a - 1), abs(a + 1)) < 1e-3:
            reason = 'turning_point'
            points[-1] = 1.0 + 0j if abs(a - 1) < abs(a + 1) else -1.0 + 0j
            break
        if _excluded(a, which):
            reason = 'cut'
            break
        if len(points) > 20 and abs(a - points[0]) < 1.5 * trial:
            points.append(points[0])
            reason = 'closed'
            break
        if iterations <= 3 and turn < 0.1:
            step = min(1.5 * trial, settings['max_step'])
        else:
            step = trial
    return points, reason


def trace_sigma(theta: float, which: str, seed: complex, radius: float = None) -> LevelSetCurve:
    """
    Predictor-corrector continuation of Re G = 0 through a seed

    Args:
        theta: Direction angle
        which: 'plus1', 'minus1' or 'triangle'
        seed: Point on (or within Newton reach of) the curve
        radius: Atlas radius where the curve is cut off

    Returns:
        LevelSetCurve traced in both directions from the seed
    """
    radius = LEVEL_SETS['atlas_radius'] if radius is None else radius
    if abs(sigma_residual(seed, theta, which)) > LEVEL_SETS['seed_tol']:
        logger.debug(f"Seed {seed:.6g} off Sigma[{which}]; correcting")
    seed, _ = _newton_to_curve(complex(seed), theta, which, LEVEL_SETS['newton_tol'])
    forward, forward_reason = _continue(seed, theta, which, 1, radius)
    if forward_reason == 'closed':
        return LevelSetCurve(which, theta, np.array(forward), f"{which}-loop", ('closed', 'closed'))
    backward, backward_reason = _continue(seed, theta, which, -1, radius)
    points = np.array(backward[::-1] + forward[1:])
    return LevelSetCurve(which, theta, points, which, (backward_reason, forward_reason))


def _seed_paths(radius: float) -> List[Callable[[np.ndarray], np.ndarray]]:
    def circle(centre, r):
        return lambda s: centre + r * np.exp(2j * np.pi * s)

    def line(offset):
        return lambda s: (-radius + 2 * radius * s) + 1j * offset

    return [circle(1.0, 0.05), circle(-1.0, 0.05), line(0.05), line(-0.05), circle(0.0, radius - 0.5)]


def find_seeds(theta: float, which: str, radius: float = None, samples: int = 400) -> List[complex]:
    """Points of Sigma[which] found by sign changes along circles and horizontal lines"""
    radius = LEVEL_SETS['atlas_radius'] if radius is None else radius
    seeds = []
    for path in _seed_paths(radius):
        s = np.linspace(0.0, 1.0, samples + 1)
        values = grid_values(path(s), theta, which).real
        for k in np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]:
            try:
                root = brentq(lambda u: sigma_residual(complex(path(np.array([u]))[0]), theta, which),
                              s[k], s[k + 1], xtol=1e-13)
            except (ValueError, StokesError):
                continue
            a = complex(path(np.array([root]))[0])
            try:
                if abs(sigma_residual(a, theta, which)) < LEVEL_SETS['seed_tol']:
                    seeds.append(a)
            except StokesError:
                continue
    if not seeds:
        return []
    tree = cKDTree(np.column_stack([np.real(seeds), np.imag(seeds)]))
    unique = []
    taken = set()
    for k, a in enumerate(seeds):
        if k in taken:
            continue
        taken.update(tree.query_ball_point([a.real, a.imag], 1e-3))
        unique.append(a)
    return unique


def trace_family(theta: float, which: str, radius: float = None) -> List[LevelSetCurve]:
    """All curves of one family inside the atlas disk"""
    radius = LEVEL_SETS['atlas_radius'] if radius is None else radius
    curves = []
    covered = np.empty((0, 2))
    for seed in find_seeds(theta, which, radius):
        if len(covered):
            distance, _ = cKDTree(covered).query([seed.real, seed.imag])
            if distance < 2.5 * LEVEL_SETS['max_step']:
                continue
        try:
            curve = trace_sigma(theta, which, seed, radius)
        except (ContinuationStalled, NewtonDiverged) as e:
            logger.warning(f"Sigma[{which}] at theta={theta:.6f} from seed {seed:.6g}: {e}")
            continue
        curves.append(curve)
        covered = np.vstack([covered, np.column_stack([curve.points.real, curve.points.imag])])
    logger.info(f"Sigma[{which}] at theta={theta:.6f}: {len(curves)} curve(s)")
    return curves


def solve_s_triangle(theta: float) -> float:
    """Real root of the triangle residual on [-1, 1]"""
    if theta <= 0:
        return -1.0
    return float(brentq(lambda s: _triangle_on_segment(s, theta), -1.0, 1.0, xtol=1e-14))


def _newton_pair(a: complex, theta: float, tol: float = 1e-12, iterations: int = 30) -> complex:
    for _ in range(iterations):
        g_plus = sigma_value(a, theta, 'plus1')
        g_minus = sigma_value(a, theta, 'minus1')
        residual = np.array([g_plus.real, g_minus.real])
        if np.max(np.abs(residual)) < tol:
            return a
        d_plus = _derivative(a, theta, 'plus1')
        d_minus = _derivative(a, theta, 'minus1')
        jacobian = np.array([[d_plus.real, -d_plus.imag], [d_minus.real, -d_minus.imag]])
        try:
            dx, dy = np.linalg.solve(jacobian, -residual)
        except np.linalg.LinAlgError:
            break
        a = a + dx + 1j * dy
        if abs(a) > 10:
            break
    raise NewtonDiverged(f"2-D Newton for the tree point did not converge (last a={a:.6g})")


def solve_special_points(theta: float, validate: bool = True) -> Dict[str, Optional[complex]]:
    """
    s_triangle, t_theta and e_theta for theta in [0, pi/2)

    t/e are common zeros of the plus1 and minus1 residuals in the upper
    half-plane, seeded from a grid scan and confirmed as tree graphs.

    Returns:
        {'s_triangle', 't_point', 'e_point'}
    """
    if not 0 <= theta < np.pi / 2:
        raise InvalidData(f"special points need theta in [0, pi/2), got {theta}")
    s_triangle = solve_s_triangle(theta)
    if theta == 0:
        return {'s_triangle': s_triangle, 't_point': -1.0 + 0j, 'e_point': None}

    n = LEVEL_SETS['grid_size']
    x, y = np.meshgrid(np.linspace(-3, 3, n), np.linspace(1e-3, 3, n))
    grid = x + 1j * y
    f_plus = grid_values(grid, theta, 'plus1').real
    f_minus = grid_values(grid, theta, 'minus1').real

    def changes(f):
        corners = np.stack([f[:-1, :-1], f[1:, :-1], f[:-1, 1:], f[1:, 1:]])
        return (corners.max(axis=0) > 0) & (corners.min(axis=0) < 0)

    cells = np.argwhere(changes(f_plus) & changes(f_minus))
    candidates = []
    failures = 0
    for r, c in cells:
        start = complex(0.5 * (grid[r, c] + grid[r + 1, c + 1]))
        try:
            a = _newton_pair(start, theta)
        except (NewtonDiverged, StokesError):
            failures += 1
            continue
        if a.imag > 0 and min(abs(a - 1), abs(a + 1)) > 1e-6 and all(abs(a - b) > 1e-7 for b in candidates):
            candidates.append(a)
    if len(cells) and not candidates:
        raise NewtonDiverged(f"no tree point converged from {len(cells)} seed cells at theta={theta:.6f}")

    if validate:
        from graph_classifier import classify
        confirmed = []
        for a in candidates:
            try:
                if classify(Potential(a, theta)).type_label == 'Tree':
                    confirmed.append(a)
            except StokesError as e:
                logger.info(f"Tree candidate {a:.6g} rejected: {e}")
        candidates = confirmed

    t_point = next((a for a in candidates if a.real >= -1), None)
    e_point = next((a for a in candidates if a.real < -1), None)
    logger.info(f"Special points at theta={theta:.6f}: s={s_triangle:.6f}, t={t_point}, e={e_point} "
                f"({failures} Newton failures)")
    return {'s_triangle': s_triangle, 't_point': t_point, 'e_point': e_point}


def _split_at(points: np.ndarray, cuts: List[complex], tol: float = 1e-6) -> List[np.ndarray]:
    """Split a polyline at the vertices nearest to each cut point lying on it"""
    breaks = set()
    for c in cuts:
        distance = np.abs(points - c)
        k = int(np.argmin(distance))
        if distance[k] < max(tol, 0.6 * LEVEL_SETS['max_step']) and 0 < k < len(points) - 1:
            breaks.add(k)
    pieces = []
    start = 0
    for k in sorted(breaks):
        pieces.append(points[start:k + 1])
        start = k
    pieces.append(points[start:])
    return [p for p in pieces if len(p) >= 2]


def _arc_has_short(points: np.ndarray, theta: float, which: str) -> bool:
    from periods import find_short_trajectory
    mid = complex(points[len(points) // 2])
    try:
        pot = Potential(mid, theta)
        i, j = WHICH_PAIRS[which]
        return find_short_trajectory(pot, i, j) is not None
    except StokesError as e:
        logger.info(f"Arc test at {mid:.6g} on Sigma[{which}] failed: {e}")
        return False


def split_s_arcs(curves: List[LevelSetCurve], theta: float, cuts: List[complex]) -> List[LevelSetCurve]:
    """Split curves at the special points and mark the arcs carrying a short trajectory"""
    arcs = []
    for curve in curves:
        for n, piece in enumerate(_split_at(curve.points, cuts)):
            arcs.append(LevelSetCurve(
                which=curve.which, theta=theta, points=piece, branch_tag=f"{curve.branch_tag}-{n}",
                end_reasons=curve.end_reasons, in_s=_arc_has_short(piece, theta, curve.which),
            ))
    return arcs


def _raster(curves: List[LevelSetCurve], radius: float, size: int) -> Tuple[np.ndarray, np.ndarray]:
    axis = np.linspace(-radius, radius, size)
    pixel = axis[1] - axis[0]
    x, y = np.meshgrid(axis, axis)
    barrier = x ** 2 + y ** 2 >= radius ** 2
    for curve in curves:
        pts = curve.points
        for z0, z1 in zip(pts[:-1], pts[1:]):
            count = max(2, int(np.ceil(abs(z1 - z0) / (0.5 * pixel))) + 1)
            zs = z0 + np.linspace(0.0, 1.0, count) * (z1 - z0)
            cols = np.clip(np.round((zs.real + radius) / pixel).astype(int), 0, size - 1)
            rows = np.clip(np.round((zs.imag + radius) / pixel).astype(int), 0, size - 1)
            barrier[rows, cols] = True
    return barrier, axis


def region_count(theta: float, atlas: Optional[LevelSetAtlas] = None,
                 curves: Optional[List[LevelSetCurve]] = None) -> int:
    """
    Number of regions of the disk cut out by the short-trajectory arcs

    Counted by flood fill (4-connectivity) on a raster where the arcs are
    drawn as 8-connected barriers; specks below the minimum size are ignored.
    """
    if curves is None:
        if atlas is None:
            atlas = build_atlas(theta)
        curves = list(atlas.curves)
    chi = [c for c in curves if c.in_s]
    barrier, _ = _raster(chi, LEVEL_SETS['atlas_radius'], LEVEL_SETS['raster_size'])
    labels, count = ndimage.label(~barrier)
    sizes = np.bincount(labels.ravel())[1:]
    return int(np.sum(sizes >= LEVEL_SETS['min_region_pixels']))


def build_atlas(theta: float, threads: Optional[int] = None, count_regions: bool = True) -> LevelSetAtlas:
    """Trace every curve family, locate the special points and count regions"""
    threads = threads or CLI['threads']
    with ThreadPoolExecutor(max_workers=threads) as executor:
        families = list(executor.map(lambda which: trace_family(theta, which), WHICH))
    curves = [c for family in families for c in family]

    special = solve_special_points(theta) if 0 <= theta < np.pi / 2 else {
        's_triangle': None, 't_point': None, 'e_point': None}
    cuts = [1.0 + 0j, -1.0 + 0j]
    for key in ('t_point', 'e_point'):
        if special[key] is not None:
            cuts.append(special[key])
    if special['s_triangle'] is not None:
        cuts.append(complex(special['s_triangle']))
    arcs = split_s_arcs(curves, theta, cuts)

    residuals = {}
    if special['t_point'] is not None and special['t_point'] not in (1, -1):
        residuals['t_plus1'] = sigma_residual(special['t_point'], theta, 'plus1')
        residuals['t_minus1'] = sigma_residual(special['t_point'], theta, 'minus1')

    n_regions = region_count(theta, curves=arcs) if count_regions else None
    logger.info(f"Atlas at theta={theta:.6f}: {len(arcs)} arcs, n_regions={n_regions}")
    return LevelSetAtlas(
        theta=theta, curves=tuple(arcs), s_triangle=special['s_triangle'],
        t_point=special['t_point'], e_point=special['e_point'], n_regions=n_regions,
        special_residuals=residuals,
    )


def membership(a: complex, theta: float, atlas: Optional[LevelSetAtlas] = None,
               tol: float = 1e-8) -> dict:
    """
    Locate a parameter relative to chi_theta

    Returns:
        {'kind': 'interior' | 'S_plus1' | 'S_minus1' | 'S_triangle' | 't_point' | 'e_point',
         'residuals': {...}, 'region': label or None}
    """
    from periods import find_short_trajectory
    a = complex(a)
    if a in (1, -1):
        raise InvalidData("membership is undefined at the fixed turning points")
    result = {'kind': 'interior', 'residuals': {}, 'region': None}
    if atlas is not None:
        for key, kind in (('t_point', 't_point'), ('e_point', 'e_point')):
            point = getattr(atlas, key)
            if point is not None and abs(a - point) < 1e-6:
                result['kind'] = kind
                return result

    pot = Potential(a, theta)
    for which in WHICH:
        try:
            residual = sigma_residual(a, theta, which)
        except OnExcludedCut:
            continue
        result['residuals'][which] = residual
        if abs(residual) < tol:
            i, j = WHICH_PAIRS[which]
            if find_short_trajectory(pot, i, j) is not None:
                result['kind'] = f"S_{which}"
                return result

    if atlas is not None:
        barrier, axis = _raster([c for c in atlas.curves if c.in_s], LEVEL_SETS['atlas_radius'],
                                LEVEL_SETS['raster_size'])
        labels, _ = ndimage.label(~barrier)
        pixel = axis[1] - axis[0]
        col = int(np.clip(np.round((a.real - axis[0]) / pixel), 0, len(axis) - 1))
        row = int(np.clip(np.round((a.imag - axis[0]) / pixel), 0, len(axis) - 1))
        result['region'] = int(labels[row, col])
    return result
