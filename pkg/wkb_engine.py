"""
Complex WKB engine
Error-term bound r_epsilon, the Volterra iteration behind the uniform WKB
asymptotics, WKB solution evaluation, Fedoryuk transition matrices and the
quantization conditions that turn periods into spectra.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.signal import lfilter

from core_algebra import (
    BranchContext, Potential, branch_at_turning_point, h_integral, local_antistokes_directions,
)
from graph_classifier import BROKEN, EigenvalueProblemDescriptor, StokesGraph, accumulation_check
from periods import Period, segment_period
from quadrature import gauss_legendre
from settings import CLI, WKB
from stokes_errors import InvalidData, NoContraction, NotAccumulating, OutsideValidityDomain, StokesError
from trajectory_tracer import trace

logger = logging.getLogger(__name__)

TRANSITION_KINDS = ('finite_stokes', 'anti_stokes', 'turning_rotation')

# |psi_z| sqrt|p| ~ (21/16)|z|^{-7/2} at infinity
TAIL_COEFFICIENT = 21.0 / 40.0

ROTATION_PHASE = np.exp(-1j * np.pi / 6)
ROTATION = ROTATION_PHASE * np.array([[0, 1], [1, 1j]], dtype=complex)

TREE_FAMILIES = {
    'cos_plus_half': (np.pi / 3, 5 * np.pi / 3),
    'cos_minus_half': (2 * np.pi / 3, 4 * np.pi / 3),
}


def error_density(pot: Potential, z) -> np.ndarray:
    """psi in the z variable: 5/16 p'^2/p^3 - p''/(4 p^2)"""
    z = np.asarray(z, dtype=complex)
    p = pot.p(z)
    return 5.0 / 16.0 * pot.dp(z) ** 2 / p ** 3 - pot.d2p(z) / (4.0 * p ** 2)


def _polyline_bound(pot: Potential, points: np.ndarray, order: int = 8) -> float:
    """integral of |psi_z| sqrt|p| |dz| along a polyline"""
    nodes, weights = gauss_legendre(order)
    starts, ends = points[:-1], points[1:]
    zs = starts[:, None] + nodes[None, :] * (ends - starts)[:, None]
    density = np.abs(error_density(pot, zs)) * np.sqrt(np.abs(pot.p(zs)))
    return float(np.sum(np.abs(ends - starts) * (density @ weights)))


def r_epsilon(pot: Potential, eps: float = 0.2, n_angles: int = None, threads: int = None) -> float:
    """
    Supremum of the WKB error integral over sampled canonical paths

    The family is the anti-Stokes (horizontal) trajectories leaving circles of
    radius eps around every turning point at n_angles angles; paths that come
    back within eps of a turning point are not in D_eps and are skipped.
    Each path ends at the escape radius R, where the tail (21/40) R^{-5/2}
    is added.

    Args:
        pot: Potential
        eps: Distance kept from the turning points
        n_angles: Start angles per turning point

    Returns:
        r_epsilon (positive)
    """
    if eps <= 0:
        raise InvalidData(f"eps must be positive, got {eps}")
    n_angles = n_angles or WKB['n_angles']
    threads = threads or CLI['threads']
    jobs = []
    for k, root in enumerate(pot.roots):
        for phi in 2 * np.pi * np.arange(n_angles) / n_angles:
            jobs.append((k, root + eps * np.exp(1j * phi), phi))

    def family_member(job):
        k, seed, phi = job
        if min(abs(seed - r) for r in pot.roots) < eps * (1 - 1e-12):
            return None
        try:
            traj = trace(pot, seed, phi, kind='horizontal')
        except StokesError as e:
            logger.debug(f"Horizontal path from {seed:.4g} dropped: {e}")
            return None
        points = traj.points
        distance = np.min(np.abs(points[1:, None] - np.array(pot.roots)[None, :]))
        if distance < eps or not traj.escaped:
            return None
        tail = TAIL_COEFFICIENT * abs(points[-1]) ** -2.5
        return _polyline_bound(pot, points) + tail

    with ThreadPoolExecutor(max_workers=threads) as executor:
        bounds = [b for b in executor.map(family_member, jobs) if b is not None]
    if not bounds:
        raise OutsideValidityDomain(f"no canonical path of D_eps survived for eps={eps}")
    value = max(bounds)
    logger.info(f"r_epsilon(a={pot.a:.6g}, theta={pot.theta:.6f}, eps={eps}) = {value:.6g} "
                f"over {len(bounds)} paths")
    return value


@dataclass(frozen=True, eq=False)
class ZetaPath:
    """
    Canonical path sampled uniformly in zeta = zeta_start + s, s in [0, length]

    z, values hold the path points and the continued sqrt(p_a); psi is the
    error term in the zeta variable, e^{-2i theta} times error_density.
    """
    potential: Potential
    s: np.ndarray
    zeta: np.ndarray
    z: np.ndarray
    values: np.ndarray
    psi: np.ndarray
    base_tp: Optional[int] = None
    sheet: int = 1


def zeta_path(pot: Potential, start: complex, value: complex, zeta_start: complex = 0j,
              length: float = None, n_points: int = None, eps: float = 0.0,
              base_tp: Optional[int] = None, sheet: int = 1) -> ZetaPath:
    """
    Follow d zeta = e^{i theta} sqrt(p) dz with zeta real-increasing from a point

    Args:
        pot: Potential
        start: Starting point
        value: sqrt(p_a) at start on the chosen branch
        zeta_start: zeta at start
        length: Extent in s (defaults to the configured zeta range)
        n_points: Uniform samples in s
        eps: Minimum distance to the turning points along the path

    Raises:
        OutsideValidityDomain if the path runs into a turning point
    """
    length = WKB['zeta_max'] if length is None else length
    n_points = n_points or WKB['zeta_points']
    rotation = pot.rotation
    roots = np.array(pot.roots)
    guard = max(0.5 * eps, pot.capture_radius)

    def rhs(_s, y):
        z, w = y
        dz = 1.0 / (rotation * w)
        return [dz, pot.dp(z) / (2.0 * w) * dz]

    def too_close(_s, y):
        return float(np.min(np.abs(y[0] - roots)) - guard)

    too_close.terminal = True
    s = np.linspace(0.0, length, n_points)
    solution = solve_ivp(rhs, (0.0, length), [complex(start), complex(value)], method='DOP853',
                         t_eval=s, rtol=1e-11, atol=1e-13, events=too_close)
    if solution.status == 1 or not solution.success:
        raise OutsideValidityDomain(
            f"canonical path from {start:.6g} reaches a turning point before zeta={length}")
    z, w = solution.y
    psi = np.exp(-2j * pot.theta) * error_density(pot, z)
    return ZetaPath(potential=pot, s=s, zeta=zeta_start + s, z=z, values=w, psi=psi,
                    base_tp=base_tp, sheet=sheet)


def canonical_path(pot: Potential, base_tp: int, eps: float = 0.2, direction_index: int = 0,
                   length: float = None, n_points: int = None) -> ZetaPath:
    """Anti-Stokes path leaving a turning point, on the sheet where Re zeta grows away from it"""
    z0 = pot.roots[base_tp]
    phi = local_antistokes_directions(pot, z0)[direction_index % 3]
    start = z0 + eps * np.exp(1j * phi)
    sheet = 1
    integral = h_integral(pot, z0, start, ctx=branch_at_turning_point(pot, base_tp, sheet))
    if integral.value.real < 0:
        sheet = -1
        integral = h_integral(pot, z0, start, ctx=branch_at_turning_point(pot, base_tp, sheet))
    return zeta_path(pot, start, integral.branch.final_value, integral.value, length, n_points,
                     eps, base_tp=base_tp, sheet=sheet)


def _volterra_map(w: np.ndarray, path: ZetaPath, r: float) -> np.ndarray:
    """
    One application of w -> integral from s to infinity of K(s, t) psi(t) (1 + w(t)) dt,
    K = (1 - exp(2r(s - t)))/(2r), with psi(1 + w) piecewise linear on the grid
    """
    g = path.psi * (1.0 + w)
    step = path.s[1] - path.s[0]
    # tails beyond the grid: psi ~ c/zeta^2
    tail_plain = g[-1] * path.zeta[-1]
    tail_weighted = g[-1] / (2.0 * r)

    panels = 0.5 * step * (g[:-1] + g[1:])
    plain = np.concatenate([np.cumsum(panels[::-1])[::-1], [0.0]]) + tail_plain

    x = 2.0 * r * step
    decay = np.exp(-x)
    upper = (-np.expm1(-x) - x * decay) / (2.0 * r * x)
    lower = -np.expm1(-x) / (2.0 * r) - upper
    terms = lower * g[:-1] + upper * g[1:]
    recursion = lfilter([1.0], [1.0, -decay], terms[::-1], zi=[decay * tail_weighted])[0]
    weighted = np.concatenate([recursion[::-1], [tail_weighted]])
    return (plain - weighted) / (2.0 * r)


def volterra_solve(pot: Potential, lam: complex, path: ZetaPath, tol: float = None,
                   n_max: int = None, r_eps: Optional[float] = None) -> Tuple[np.ndarray, List[float]]:
    """
    Successive approximations w_0 = 0, w_{n+1} = V(w_n) for the WKB correction

    Args:
        pot: Potential
        lam: Spectral parameter on the ray arg(lambda) = theta
        path: Canonical path sampled in zeta
        tol: Stop when the sup-norm increment drops below tol
        n_max: Iteration cap
        r_eps: Error-integral bound; |lambda| must exceed it when given

    Returns:
        (w samples on the path, ratios of consecutive increments)

    Raises:
        NoContraction when an increment does not shrink or the cap is reached
    """
    tol = WKB['volterra_tol'] if tol is None else tol
    n_max = n_max or WKB['volterra_max_iter']
    r = abs(lam)
    if r == 0:
        raise InvalidData("lambda must be non-zero")
    if abs(np.sin(np.angle(lam) - pot.theta)) > 1e-9:
        raise OutsideValidityDomain(f"arg(lambda) = {np.angle(lam):.6f} is off the ray theta = {pot.theta:.6f}")
    if r_eps is not None and r <= r_eps:
        raise OutsideValidityDomain(f"|lambda| = {r:.6g} does not exceed r_epsilon = {r_eps:.6g}")

    w = np.zeros_like(path.psi)
    ratios = []
    previous = None
    for iteration in range(1, n_max + 1):
        w_new = _volterra_map(w, path, r)
        increment = float(np.max(np.abs(w_new - w)))
        w = w_new
        if previous is not None and previous > 0:
            ratio = increment / previous
            ratios.append(ratio)
            if ratio >= 1.0:
                raise NoContraction(ratio, iteration)
        previous = increment
        if increment < tol:
            logger.debug(f"Volterra converged after {iteration} iterations for |lambda|={r:.4g}")
            return w, ratios
    raise NoContraction(ratios[-1] if ratios else float('nan'), n_max)


@dataclass(frozen=True)
class WKBSolution:
    """
    y = p^{-1/4} exp(-sign * h)(1 + phi), h = lambda * integral of sqrt(p) from base_tp

    sign = +1 is the solution subdominant where Re h grows, -1 the dominant one.
    """
    potential: Potential
    lam: complex
    base_tp: int
    branch: BranchContext
    sign: int
    r_epsilon: float
    correction_bound: float
    eps: float = 0.2

    def to_dict(self) -> dict:
        return {
            'lambda': [self.lam.real, self.lam.imag],
            'base_tp': self.base_tp,
            'sheet': self.branch.sheet,
            'sign': self.sign,
            'r_epsilon': self.r_epsilon,
            'correction_bound': self.correction_bound,
            'eps': self.eps,
        }


def wkb_solution(pot: Potential, lambda_mod: float, base_tp: int, sheet: int = 1, sign: int = 1,
                 eps: float = 0.2, r_eps: Optional[float] = None) -> WKBSolution:
    """
    WKB solution attached to a turning point on the ray arg(lambda) = theta

    Raises:
        OutsideValidityDomain when |lambda| <= r_epsilon
    """
    if sign not in (1, -1):
        raise InvalidData(f"sign must be +1 or -1, got {sign}")
    r_eps = r_epsilon(pot, eps) if r_eps is None else r_eps
    if lambda_mod <= r_eps:
        raise OutsideValidityDomain(f"|lambda| = {lambda_mod:.6g} does not exceed r_epsilon = {r_eps:.6g}")
    bound = WKB['bound_constant'] * r_eps / (lambda_mod - r_eps)
    return WKBSolution(
        potential=pot,
        lam=lambda_mod * pot.rotation,
        base_tp=base_tp,
        branch=branch_at_turning_point(pot, base_tp, sheet),
        sign=sign,
        r_epsilon=r_eps,
        correction_bound=bound,
        eps=eps,
    )


def evaluate(sol: WKBSolution, z: complex, with_derivative: bool = False,
             path: Optional[Sequence[complex]] = None) -> Tuple[complex, Optional[complex]]:
    """
    Leading-order WKB value (and derivative) at z

    The derivative is y (-sign lambda sqrt(p) - p'/(4p)); the neglected
    corrections are covered by sol.correction_bound.

    Args:
        sol: WKBSolution
        z: Evaluation point, at least eps from every turning point
        with_derivative: Also return y'
        path: Polyline from the base turning point to z (straight when omitted)

    Raises:
        OutsideValidityDomain near a turning point or when the bound is not below 1
    """
    pot = sol.potential
    z = complex(z)
    if min(abs(z - r) for r in pot.roots) < sol.eps:
        raise OutsideValidityDomain(f"z = {z:.6g} is within {sol.eps} of a turning point")
    if sol.correction_bound >= 1:
        raise OutsideValidityDomain(f"correction bound {sol.correction_bound:.3g} is not below 1")
    z0 = pot.roots[sol.base_tp]
    integral = h_integral(pot, z0, z, path=path, ctx=sol.branch)
    w = integral.branch.final_value
    r = abs(sol.lam)
    y = np.exp(-sol.sign * r * integral.value) / np.sqrt(w)
    if not with_derivative:
        return complex(y), None
    log_derivative = -sol.sign * sol.lam * w - pot.dp(z) / (4.0 * pot.p(z))
    return complex(y), complex(y * log_derivative)


@dataclass(frozen=True)
class TransitionMatrix:
    kind: str
    entries: np.ndarray
    parameters: Dict[str, object] = field(default_factory=dict)

    def __matmul__(self, other: 'TransitionMatrix') -> 'TransitionMatrix':
        return TransitionMatrix('composite', self.entries @ other.entries,
                                {'factors': [self.kind, other.kind]})

    def inverse(self) -> 'TransitionMatrix':
        return TransitionMatrix(self.kind, np.linalg.inv(self.entries), {**self.parameters, 'inverted': True})

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'entries': [[[v.real, v.imag] for v in row] for row in self.entries],
            'parameters': {k: (str(v) if isinstance(v, complex) else v) for k, v in self.parameters.items()},
        }


def transition(kind: str, data: dict) -> TransitionMatrix:
    """
    Fedoryuk transition matrix at leading order

    Args:
        kind: 'finite_stokes' (data: alpha >= 0, lambda_mod, sigma),
            'anti_stokes' (data: xi, lam with Re(lam * xi) > 0),
            'turning_rotation' (data: steps, number of 2pi/3 rotations; negative for the inverse)

    Raises:
        InvalidData on missing or inconsistent data
    """
    try:
        if kind == 'finite_stokes':
            alpha = float(data['alpha'])
            r = float(data['lambda_mod'])
            sigma = float(data.get('sigma', 0.0))
            if alpha < 0 or r <= 0:
                raise InvalidData(f"finite Stokes transition needs alpha >= 0 and |lambda| > 0, got {alpha}, {r}")
            phase = np.exp(1j * r * alpha)
            entries = np.exp(1j * sigma) * np.array([[0, 1 / phase], [phase, 0]], dtype=complex)
            return TransitionMatrix(kind, entries, {'alpha': alpha, 'lambda_mod': r, 'sigma': sigma})
        if kind == 'anti_stokes':
            xi = complex(data['xi'])
            lam = complex(data['lam'])
            if not (lam * xi).real > 0:
                raise InvalidData(f"anti-Stokes displacement needs Re(lambda xi) > 0, got {lam * xi:.6g}")
            entries = np.diag([np.exp(-lam * xi), np.exp(lam * xi)]).astype(complex)
            return TransitionMatrix(kind, entries, {'xi': xi, 'lam': lam})
        if kind == 'turning_rotation':
            steps = int(data.get('steps', 1))
            entries = np.linalg.matrix_power(ROTATION, steps % 3)
            return TransitionMatrix(kind, entries, {'steps': steps, 'sigma': -np.pi / 6})
    except KeyError as e:
        raise InvalidData(f"transition data for {kind} is missing {e}")
    raise InvalidData(f"unknown transition kind: {kind}")


def compose(*matrices: TransitionMatrix) -> TransitionMatrix:
    """Product in the order given"""
    if not matrices:
        return TransitionMatrix('composite', np.eye(2, dtype=complex), {'factors': []})
    entries = np.eye(2, dtype=complex)
    for m in matrices:
        entries = entries @ m.entries
    return TransitionMatrix('composite', entries, {'factors': [m.kind for m in matrices]})


@dataclass(frozen=True, eq=False)
class Spectrum:
    theta: float
    potential: Potential
    descriptor: Optional[EigenvalueProblemDescriptor]
    lambda_mods: Tuple[float, ...]
    n_offset: int
    source: str
    period_used: Tuple[Period, ...] = ()
    families: Tuple[str, ...] = ()
    index_map: Tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            'theta': self.theta,
            'a': [self.potential.a.real, self.potential.a.imag],
            'descriptor': None if self.descriptor is None else self.descriptor.to_dict(),
            'lambda_mods': list(self.lambda_mods),
            'n_offset': self.n_offset,
            'source': self.source,
            'periods': [p.to_dict() for p in self.period_used],
            'families': list(self.families),
            'index_map': list(self.index_map),
        }


def unbroken_levels(period_abs: float, n_values: Iterable[int]) -> List[float]:
    """|lambda_n| = (2n - 1) pi / |period|, n starting at 1"""
    return [(2 * n - 1) * np.pi / period_abs for n in n_values]


def tree_candidates(first_abs: float, second_abs: float, count: int, tol: float = 1e-6,
                    max_candidates: int = 100000) -> List[Tuple[float, str, int]]:
    """
    Solutions of 2 cos H1 = -exp(i (H1 + 2 H2)), H_k = |lambda| P_k / 2

    The modulus forces cos H1 = +-1/2; each such H1 is kept when the phase
    condition also holds.

    Returns:
        [(|lambda|, family, candidate index)] in increasing order
    """
    found = []
    offsets = sorted((h, name) for name, pair in TREE_FAMILIES.items() for h in pair)
    for m in range(max_candidates):
        turn, h_base = divmod(m, len(offsets))
        h1 = 2 * np.pi * turn + offsets[h_base][0]
        r = 2.0 * h1 / first_abs
        h2 = r * second_abs / 2.0
        mismatch = abs(np.exp(1j * (h1 + 2 * h2)) + 2 * np.cos(h1))
        if mismatch < tol:
            found.append((float(r), offsets[h_base][1], m))
            if len(found) >= count:
                break
    return found


def quantize(graph: StokesGraph, descriptor: EigenvalueProblemDescriptor,
             n_range: Sequence[int]) -> Spectrum:
    """
    Eigenvalue moduli predicted by the quantization conditions

    Args:
        graph: Classified Stokes graph
        descriptor: Non-admissible pair from admissible_pairs
        n_range: Eigenvalue indices (1-based)

    Returns:
        Spectrum with source 'quantization'

    Raises:
        NotAccumulating when eigenvalues do not accumulate along theta
    """
    pot = graph.potential
    check = accumulation_check(graph, descriptor)
    if not check['accumulates']:
        raise NotAccumulating(
            f"no accumulation along theta={pot.theta:.6f} for pair {descriptor.pair if descriptor else None} "
            f"(type {graph.type_label}, condition {check['condition']})",
            type_label=graph.type_label,
        )
    n_values = [int(n) for n in n_range]
    if any(n < 1 for n in n_values):
        raise InvalidData(f"eigenvalue indices start at 1, got {n_values}")

    if descriptor.joining_kind != BROKEN:
        i, j = descriptor.period_contours[0]
        period = segment_period(pot, i, j, graph.short_between(i, j))
        levels = unbroken_levels(period.abs_value, n_values)
        logger.info(f"Quantized {len(levels)} levels with |period| = {period.abs_value:.10g}")
        return Spectrum(pot.theta, pot, descriptor, tuple(levels), n_values[0] if n_values else 1,
                        'quantization', (period,), index_map=tuple(n_values))

    shorts = sorted(graph.short_trajectories, key=lambda s: 0 if 1 in s.endpoints else 1)
    periods = tuple(segment_period(pot, *s.endpoints, s) for s in shorts)
    candidates = tree_candidates(periods[0].abs_value, periods[1].abs_value, max(n_values, default=0))
    if n_values and len(candidates) < max(n_values):
        logger.warning(f"Only {len(candidates)} tree levels satisfy both conditions (alpha={check['alpha']:.6g})")
    chosen = [candidates[n - 1] for n in n_values if n - 1 < len(candidates)]
    return Spectrum(
        theta=pot.theta, potential=pot, descriptor=descriptor,
        lambda_mods=tuple(c[0] for c in chosen),
        n_offset=n_values[0] if n_values else 1,
        source='quantization', period_used=periods,
        families=tuple(c[1] for c in chosen),
        index_map=tuple(c[2] for c in chosen),
    )
