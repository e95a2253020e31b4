"""
Applications
The PT-symmetric cubic Sturm-Liouville problem -y'' + i(x^3 + alpha x) y = E y
through its rescaling onto (z^2 - 1)(z - i sqrt 3), the theta-scan of short
trajectories for that potential, and the cubic family with infinitely many
real zeros.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma

from core_algebra import Potential
from graph_classifier import StokesGraph, accumulation_check, admissible_pairs, classify
from level_sets import WHICH_PAIRS, membership, sigma_value, solve_special_points
from periods import abelian_constant_forms, find_short_trajectory, segment_period
from settings import CLI
from stokes_errors import InvalidData, NotAccumulating, NotOnTheta, StokesError
from spectral_oracle import (
    Eigenfunction, ZeroSet, locate_zeros, oracle_spectrum, ray_solution, shoot_real_line, shooting_problem,
)

logger = logging.getLogger(__name__)

PT_A = 1j * np.sqrt(3.0)
PT_THETA = np.pi / 4
VERTEX_RADIUS = 2.0 / np.sqrt(3.0)
CENTROID = 1j / np.sqrt(3.0)
OMEGA = np.exp(2j * np.pi / 3)

# Constant of the classical asymptotic formula as it is usually quoted
QUOTED_CONSTANT = 2.0 * gamma(2.0 / 3.0) * np.sqrt(np.pi) / (np.sqrt(2.0) * gamma(1.0 / 3.0))

REAL_AXIS_TOL = 1e-7


@dataclass(frozen=True)
class SturmMap:
    """
    Rescaling z = r x, then the affine map onto the triangle -1, 1, i sqrt 3

    vertex selects which cube root of unity aligns the rescaled roots with
    the triangle: 0 gives theta = pi/4, 1 and 2 give 7pi/12 and 11pi/12.
    """
    E: complex
    alpha: float = 0.0
    vertex: int = 0

    def __post_init__(self):
        if self.vertex not in (0, 1, 2):
            raise InvalidData(f"vertex must be 0, 1 or 2, got {self.vertex}")
        if self.E == 0:
            raise InvalidData("E = 0 has no rescaling")
        object.__setattr__(self, 'E', complex(self.E))

    @classmethod
    def from_lambda(cls, lam: complex, alpha: float = 0.0, vertex: int = 0) -> 'SturmMap':
        """Invert lambda^2 = i r^5 b^-5 for E = r^3 e^{i beta}, beta in (-3pi/5, 3pi/5]"""
        lam = complex(lam)
        r = (abs(lam) ** 2 * VERTEX_RADIUS ** 5) ** 0.2
        phase = np.angle(-1j * lam * lam * OMEGA ** (5 * vertex))
        beta = 0.6 * phase
        return cls(r ** 3 * np.exp(1j * beta), alpha, vertex)

    @property
    def r(self) -> float:
        return abs(self.E) ** (1.0 / 3.0)

    @property
    def beta(self) -> float:
        return float(np.angle(self.E))

    @property
    def b(self) -> complex:
        return VERTEX_RADIUS * np.exp(-1j * self.beta / 3.0) * OMEGA ** self.vertex

    @property
    def c(self) -> complex:
        return CENTROID

    @property
    def lambda_squared(self) -> complex:
        return 1j * self.r ** 5 * self.b ** -5

    @property
    def lam(self) -> complex:
        """Root of lambda^2 with arg in [0, pi)"""
        root = np.sqrt(self.lambda_squared)
        return -root if np.angle(root) < 0 else root

    @property
    def theta(self) -> float:
        return float(np.mod(np.angle(self.lam), np.pi))

    @property
    def rescaled_potential(self) -> Potential:
        return Potential(PT_A, self.theta, abs(self.lam))

    def P(self, x):
        return x ** 3 + 1j * np.exp(1j * self.beta)

    def Q(self, z):
        return (z * z - 1.0) * (z - PT_A)

    def to_z(self, x):
        return self.b * x + self.c

    def to_x(self, z):
        return (z - self.c) / self.b

    def original_point(self, z):
        """Point of the unscaled problem carried to z"""
        return self.r * self.to_x(z)

    def to_dict(self) -> dict:
        return {
            'E': [self.E.real, self.E.imag],
            'alpha': self.alpha,
            'vertex': self.vertex,
            'r': self.r,
            'beta': self.beta,
            'b': [self.b.real, self.b.imag],
            'c': [self.c.real, self.c.imag],
            'lambda': [self.lam.real, self.lam.imag],
            'theta': self.theta,
        }


def vertex_thetas() -> List[float]:
    """theta for the three vertex choices at real E"""
    return [SturmMap(1.0, vertex=k).theta for k in range(3)]


def asymptotic_energy(n: int) -> float:
    """E_n from the classical asymptotic formula with its quoted constant"""
    return float((QUOTED_CONSTANT * (2 * n - 1)) ** 1.2)


def wkb_energy(n: int, period_abs: float) -> float:
    """E_n from |lambda_n| = (2n - 1) pi / |period| carried through the rescaling"""
    lambda_mod = (2 * n - 1) * np.pi / period_abs
    return float((VERTEX_RADIUS ** 2.5 * lambda_mod) ** 1.2)


def lambda_for_energy(energy: float) -> float:
    """|lambda| for a real energy at vertex 0"""
    return float(energy ** (5.0 / 6.0) / VERTEX_RADIUS ** 2.5)


@dataclass(frozen=True)
class SturmLevel:
    n: int
    e_asymptotic: float
    e_wkb: float
    e_oracle: Optional[complex]
    lambda_mod: Optional[float]
    source: str

    @property
    def imaginary_ratio(self) -> Optional[float]:
        if self.e_oracle is None:
            return None
        return abs(self.e_oracle.imag) / abs(self.e_oracle)

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'e_asymptotic': self.e_asymptotic,
            'e_wkb': self.e_wkb,
            'e_oracle_re': None if self.e_oracle is None else self.e_oracle.real,
            'e_oracle_im': None if self.e_oracle is None else self.e_oracle.imag,
            'im_ratio': self.imaginary_ratio,
            'lambda_mod': self.lambda_mod,
            'source': self.source,
        }


def pt_graph(threads: Optional[int] = None) -> Tuple[StokesGraph, object]:
    """Classified graph of i sqrt 3 at theta = pi/4 and its pair containing the real directions"""
    graph = classify(Potential(PT_A, PT_THETA), threads=threads)
    descriptors = admissible_pairs(graph)
    for descriptor in descriptors:
        if set(descriptor.pair) == {0, 3}:
            return graph, descriptor
    raise NotAccumulating(
        f"no eigenvalue problem between the real directions (type {graph.type_label}, "
        f"pairs {[d.pair for d in descriptors]})",
        type_label=graph.type_label,
    )


def sturm_spectrum(alpha: float, n_range: Sequence[int], threads: Optional[int] = None,
                   oracle: bool = True) -> List[SturmLevel]:
    """
    Asymptotic and computed eigenvalues of -y'' + i(x^3 + alpha x) y = E y

    For alpha = 0 the computed values come from the rescaled problem on
    i sqrt 3 at theta = pi/4; otherwise the real line is shot directly,
    starting from the WKB estimate.

    Args:
        alpha: Real linear coefficient
        n_range: 1-based eigenvalue indices
        threads: Worker count for the rescaled shooting
        oracle: Compute the numerical eigenvalues as well as the estimates

    Returns:
        One SturmLevel per index
    """
    if not np.isreal(alpha):
        raise InvalidData(f"alpha must be real, got {alpha}")
    alpha = float(np.real(alpha))
    n_values = [int(n) for n in n_range]
    if any(n < 1 for n in n_values):
        raise InvalidData(f"eigenvalue indices start at 1, got {n_values}")

    graph, descriptor = pt_graph(threads)
    i, j = descriptor.period_contours[0]
    period = segment_period(graph.potential, i, j, graph.short_between(i, j)).abs_value
    logger.info(f"Sturm rescaling: |period| = {period:.10g}, quoted asymptotic constant {QUOTED_CONSTANT:.6f}")

    estimates = {n: (asymptotic_energy(n), wkb_energy(n, period)) for n in n_values}
    computed = {n: (None, None) for n in n_values}
    source = 'asymptotic'
    if oracle and alpha == 0.0:
        spectrum = oracle_spectrum(graph, descriptor, n_values, threads=threads)
        for n, lambda_mod in zip(n_values, spectrum.lambda_mods):
            lam = lambda_mod * np.exp(1j * PT_THETA)
            computed[n] = (SturmMap.from_lambda(lam).E, lambda_mod)
        source = 'rescaled_oracle'
    elif oracle:
        def solve(n):
            energy, _ = shoot_real_line(alpha, estimates[n][1])
            return n, energy

        with ThreadPoolExecutor(max_workers=threads or CLI['threads']) as executor:
            for n, energy in executor.map(solve, n_values):
                computed[n] = (energy, lambda_for_energy(abs(energy)))
        source = 'real_line_oracle'

    levels = [SturmLevel(n, *estimates[n], *computed[n], source) for n in n_values]
    for level in levels:
        if level.e_oracle is not None:
            logger.debug(f"E_{level.n}: oracle {level.e_oracle:.10g}, wkb {level.e_wkb:.10g}, "
                         f"asymptotic {level.e_asymptotic:.10g}")
    return levels


def abelian_period_check() -> dict:
    """Computed |period| of i sqrt 3 against the quoted Gamma-function values"""
    graph, descriptor = pt_graph()
    i, j = descriptor.period_contours[0]
    period = segment_period(graph.potential, i, j, graph.short_between(i, j))
    first, second = abelian_constant_forms()
    return {
        'computed': period.abs_value,
        'value': [period.value.real, period.value.imag],
        'quoted': second,
        'quoted_alternative': first,
        'forms_agree': abs(first - second) < 1e-12 * second,
    }


def _connection_residuals(a: complex, theta: float) -> dict:
    return {which: sigma_value(a, 0.0, which) * np.exp(1j * theta) for which in WHICH_PAIRS}


def short_trajectory_theta_scan(a: complex = PT_A, samples: int = 720, tol: float = 1e-12) -> List[float]:
    """
    theta in [0, pi) where two turning points of a are joined by a short trajectory

    Each connection condition Re(e^{i theta} I) = 0 is bracketed on a grid
    and refined with brentq; a root counts when the tracer confirms the short
    trajectory at the refined angle.

    Returns:
        Sorted refined angles
    """
    a = complex(a)
    integrals = _connection_residuals(a, 0.0)
    grid = np.linspace(0.0, np.pi, samples + 1)
    found = []
    for which, integral in integrals.items():
        def residual(theta, integral=integral):
            return float((np.exp(1j * theta) * integral).real)

        values = [residual(t) for t in grid]
        for lo, hi, f_lo, f_hi in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
            if f_lo == 0:
                root_theta = lo
            elif f_lo * f_hi < 0:
                root_theta = brentq(residual, lo, hi, xtol=tol)
            else:
                continue
            theta = float(np.mod(root_theta, np.pi))
            i, j = WHICH_PAIRS[which]
            if find_short_trajectory(Potential(a, theta), i, j) is None:
                logger.info(f"Connection {which} vanishes at theta={theta:.8f} without a short trajectory")
                continue
            if all(abs(theta - other) > 1e-9 for other in found):
                found.append(theta)
    found.sort()
    logger.info(f"theta-scan for a={a:.6g}: {[f'{t:.10f}' for t in found]}")
    return found


@dataclass(frozen=True, eq=False)
class RealZeroReport:
    """Zeros of g(w) = f(i w), a solution of g'' + |lambda|^2 (w - x)(w^2 + 1) g = 0"""
    x: complex
    a: complex
    critical: bool
    lambda_mod: float
    zero_set: ZeroSet
    zeros: Tuple[complex, ...]
    real_zeros: Tuple[float, ...]
    nonreal_zeros: Tuple[complex, ...]
    conjugate_symmetric: bool

    def to_dict(self) -> dict:
        return {
            'x': [self.x.real, self.x.imag],
            'a': [self.a.real, self.a.imag],
            'critical': self.critical,
            'lambda_mod': self.lambda_mod,
            'zeros': [[w.real, w.imag] for w in self.zeros],
            'real_zeros': list(self.real_zeros),
            'nonreal_zeros': [[w.real, w.imag] for w in self.nonreal_zeros],
            'n_real': len(self.real_zeros),
            'n_nonreal': len(self.nonreal_zeros),
            'conjugate_symmetric': self.conjugate_symmetric,
        }


def critical_x(theta: float = PT_THETA) -> Tuple[complex, complex]:
    """(x_crit, t point) with x_crit = -i t"""
    t_point = solve_special_points(theta)['t_point']
    if t_point is None:
        raise NotOnTheta(f"no tree point at theta={theta:.6f}")
    return -1j * t_point, t_point


def rotated_solution(ef: Eigenfunction, w: complex) -> Tuple[complex, complex]:
    """(g, g') at w for g(w) = f(i w)"""
    f, df = ef.value(1j * complex(w))
    return f, 1j * df


def _conjugate_symmetric(zeros: Sequence[complex], tol: float = 1e-6) -> bool:
    return all(min(abs(np.conj(w) - v) for v in zeros) < tol * max(1.0, abs(w)) for w in zeros)


def real_zero_family(x: complex, n: int = 1, window: Optional[Tuple[float, float, float, float]] = None,
                     threads: Optional[int] = None, tol: float = 1e-8) -> RealZeroReport:
    """
    Zero report of the rotated eigenfunction for x on the rotated triangle arm

    a = i x must carry a short trajectory between -1 and +1 at theta = pi/4
    (the arm through the tree point t, where x = x_crit).

    Args:
        x: Parameter of P_x(w) = |lambda|^2 (w - x)(w^2 + 1)
        n: 1-based eigenvalue index
        window: Search window in the w-plane (x_min, x_max, y_min, y_max)
        tol: Residual tolerance for membership

    Raises:
        NotOnTheta when a = i x is not on the arm
    """
    x = complex(x)
    a = 1j * x
    x_crit, t_point = critical_x()
    critical = abs(a - t_point) < 1e-6
    if not critical:
        try:
            kind = membership(a, PT_THETA, tol=tol)['kind']
        except StokesError as e:
            raise NotOnTheta(f"x={x:.6g} is not a valid parameter: {e}", x=x) from e
        if kind != 'S_triangle':
            raise NotOnTheta(f"x={x:.6g} maps to a={a:.6g}, classified as {kind}", x=x)

    graph = classify(Potential(a, PT_THETA), threads=threads)
    descriptors = [d for d in admissible_pairs(graph) if accumulation_check(graph, d)['accumulates']]
    if not descriptors:
        raise NotAccumulating(f"no accumulating eigenvalue problem at a={a:.6g}", type_label=graph.type_label)
    descriptor = descriptors[0]
    spectrum = oracle_spectrum(graph, descriptor, [n], threads=threads)
    lam = spectrum.lambda_mods[0] * np.exp(1j * PT_THETA)
    prob = shooting_problem(graph, descriptor)
    base = ray_solution(prob, lam, 0).final
    ef = Eigenfunction(prob, lam, complex(base[0]), complex(base[1]))

    if window is None:
        half = 3.0 + abs(x)
        window = (-half, half, -half, half)
    # w-window (x0, x1, y0, y1) -> z = i w window (-y1, -y0, x0, x1)
    w0, w1, v0, v1 = window
    zero_set = locate_zeros(ef, (-v1, -v0, w0, w1), graph=graph, eigenvalue_index=n)
    zeros = tuple(-1j * z for z in zero_set.zeros)
    real = tuple(sorted(w.real for w in zeros if abs(w.imag) < REAL_AXIS_TOL * max(1.0, abs(w))))
    nonreal = tuple(w for w in zeros if abs(w.imag) >= REAL_AXIS_TOL * max(1.0, abs(w)))
    symmetric = _conjugate_symmetric(nonreal)
    if critical and len(nonreal) % 2:
        logger.warning(f"odd number of non-real zeros ({len(nonreal)}) at x_crit={x_crit:.6g}")
    logger.info(f"x={x:.6g}: {len(real)} real and {len(nonreal)} non-real zeros in the window")
    return RealZeroReport(
        x=x, a=a, critical=critical, lambda_mod=float(spectrum.lambda_mods[0]), zero_set=zero_set,
        zeros=zeros, real_zeros=real, nonreal_zeros=nonreal, conjugate_symmetric=symmetric,
    )

