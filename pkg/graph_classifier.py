"""
Stokes graph classifier
Assembles the critical graph from the nine Stokes lines, walks its faces with
the rotation system at the turning points and at infinity, labels the graph
A / B / BB / Tree and enumerates the non-admissible half-plane pairs.
"""
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cmp_to_key
from typing import Dict, List, Optional, Tuple

import numpy as np

from core_algebra import Potential
from periods import tree_period_ratio
from stokes_errors import AmbiguousNearMiss, InconsistentGraph, NotActuallyShort
from trajectory_tracer import (
    ShortTrajectory, TraceLimits, Trajectory, order_escapes, refine_short_trajectory, trace,
    trace_critical_graph,
)

logger = logging.getLogger(__name__)

HALF_PLANE = 'half_plane'
STRIP = 'strip'
UNBROKEN = 'unbroken_short'
BROKEN = 'broken_short'

# expected structure per type label: (strips, non-admissible pairs)
TYPE_STRUCTURE = {
    'A': (2, 0),
    'B': (1, 1),
    'BB': (1, 2),
    'Tree': (0, 3),
}

RETRACE_LEVELS = 4
RATIONAL_DENOMINATOR = 10 ** 4
RATIONAL_TOL = 1e-9


@dataclass(frozen=True)
class Face:
    kind: str
    index: int
    boundary: Tuple[int, ...]
    asymptotic_directions: Tuple[int, ...]
    sides: Tuple[Tuple[int, ...], ...] = ()

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'index': self.index,
            'boundary': list(self.boundary),
            'asymptotic_directions': list(self.asymptotic_directions),
            'sides': [list(side) for side in self.sides],
        }

    @property
    def label(self) -> str:
        return f"H{self.index}" if self.kind == HALF_PLANE else f"B{self.index}"


@dataclass(frozen=True)
class EigenvalueProblemDescriptor:
    pair: Tuple[int, int]
    joining_complex: int
    joining_kind: str
    period_contours: Tuple[Tuple[int, int], ...]
    via_strip: bool = False
    infinite_lines: Tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            'pair': list(self.pair),
            'joining_complex': self.joining_complex,
            'joining_kind': self.joining_kind,
            'period_contours': [list(c) for c in self.period_contours],
            'via_strip': self.via_strip,
            'infinite_lines': list(self.infinite_lines),
        }


@dataclass(frozen=True, eq=False)
class StokesGraph:
    """
    Classified critical graph

    faces lists the half-planes first (index k = H_k, the face between the
    vertical directions k and k+1) and then the strips. left_faces/right_faces
    give, per critical trace, the position in `faces` on either side.
    """
    potential: Potential
    critical_traces: Tuple[Trajectory, ...]
    short_trajectories: Tuple[ShortTrajectory, ...]
    faces: Tuple[Face, ...]
    type_label: str
    stokes_complexes: Tuple[Tuple[int, ...], ...]
    left_faces: Tuple[int, ...] = ()
    right_faces: Tuple[int, ...] = ()
    short_traces: Dict[Tuple[int, int], Tuple[int, int]] = field(default_factory=dict)
    summit: Optional[int] = None
    non_admissible: Tuple[Tuple[int, int], ...] = ()

    @property
    def half_planes(self) -> List[Face]:
        return [f for f in self.faces if f.kind == HALF_PLANE]

    @property
    def strips(self) -> List[Face]:
        return [f for f in self.faces if f.kind == STRIP]

    def face_position(self, kind: str, index: int) -> int:
        for position, face in enumerate(self.faces):
            if face.kind == kind and face.index == index:
                return position
        raise KeyError(f"no {kind} with index {index}")

    def short_between(self, i: int, j: int) -> ShortTrajectory:
        for short in self.short_trajectories:
            if set(short.endpoints) == {i, j}:
                return short
        raise KeyError(f"no short trajectory between {i} and {j}")

    def to_dict(self) -> dict:
        return {
            'potential': self.potential.to_dict(),
            'type_label': self.type_label,
            'faces': [face.to_dict() for face in self.faces],
            'short_trajectories': [s.to_dict() for s in self.short_trajectories],
            'stokes_complexes': [list(c) for c in self.stokes_complexes],
            'summit': self.summit,
            'non_admissible': [list(p) for p in self.non_admissible],
            'critical_traces': [t.to_dict() for t in self.critical_traces],
            'left_faces': list(self.left_faces),
            'right_faces': list(self.right_faces),
        }


def _stokes_complexes(shorts: List[ShortTrajectory]) -> List[List[int]]:
    parent = list(range(3))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for short in shorts:
        i, j = short.endpoints
        parent[find(i)] = find(j)
    groups = {}
    for v in range(3):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


def _resolve_shorts(pot: Potential, traces: List[Trajectory], limits: Optional[TraceLimits]):
    """
    Confirm every turning-point hit by quadrature; retrace near misses with a
    smaller hit radius

    Returns:
        (traces, {(i, j): ShortTrajectory}) with (i, j) keyed by trace start
    """
    limits = limits or TraceLimits.for_potential(pot)
    traces = list(traces)
    shorts = {}
    for position, traj in enumerate(traces):
        hit_radius = limits.hit_radius
        attempts = 0
        while traj.hit is not None:
            pair = (traj.start_tp, traj.hit)
            try:
                shorts[pair] = refine_short_trajectory(pot, pair, traj, limits.quadrature, limits.short_tol)
                break
            except NotActuallyShort as e:
                if e.residual <= limits.gray_tol:
                    found = len({frozenset(p) for p in shorts})
                    labels = ('Tree', 'B|BB') if found else ('B|BB', 'A')
                    raise AmbiguousNearMiss(pair, e.residual, labels)
                if attempts == RETRACE_LEVELS:
                    raise InconsistentGraph(
                        f"trace {position} keeps hitting turning point {traj.hit} without a short trajectory")
                attempts += 1
                hit_radius /= 10.0
                logger.info(f"Near miss {pair} (residual {e.residual:.2e}); retracing with hit radius {hit_radius:.1e}")
                traj = trace(pot, traj.seed, traj.direction, traj.kind, replace(limits, hit_radius=hit_radius))
        traces[position] = traj
    return traces, shorts


def _escape_order(pot: Potential, traces: List[Trajectory]) -> List[int]:
    escaping = [k for k, t in enumerate(traces) if t.escaped]
    order = []
    for j in range(5):
        group = [k for k in escaping if traces[k].terminal.index == j]

        def compare(x, y):
            return -order_escapes(pot, traces[x], traces[y])

        order.extend(sorted(group, key=cmp_to_key(compare)))
    return order


def _walk_faces(traces: List[Trajectory], partner: Dict[int, int], end_order: List[int]):
    """Face cycles keeping the face on the left of every traversed dart"""
    at_tp = {}
    for k, t in enumerate(traces):
        at_tp.setdefault(t.start_tp, []).append(k)
    for v in at_tp:
        at_tp[v].sort(key=lambda k: np.mod(traces[k].direction, 2 * np.pi))

    def rotate(dart, step):
        ring = at_tp[traces[dart].start_tp]
        return ring[(ring.index(dart) + step) % len(ring)]

    next_end = {e: end_order[(n + 1) % len(end_order)] for n, e in enumerate(end_order)}

    cycles = []
    left = {}
    for start in range(len(traces)):
        if start in left:
            continue
        events = []
        current = start
        for _ in range(4 * len(traces)):
            left[current] = len(cycles)
            events.append(('dart', current))
            if current in partner:
                reverse = partner[current]
            else:
                reverse = next_end[current]
                events.append(('visit', reverse))
            current = rotate(reverse, -1)
            if current == start:
                break
        else:
            raise InconsistentGraph("face traversal did not close")
        cycles.append(events)
    return cycles, left, (lambda dart: rotate(dart, 1))


def classify(pot: Potential, limits: Optional[TraceLimits] = None, threads: Optional[int] = None,
             traces: Optional[List[Trajectory]] = None) -> StokesGraph:
    """
    Trace and classify the Stokes graph of a potential

    Args:
        pot: Potential
        limits: Tracer limits (defaults derived from the potential)
        threads: Worker threads for the nine critical traces
        traces: Pre-computed critical traces (skips tracing)

    Returns:
        StokesGraph with faces, type label, Stokes complexes and the
        non-admissible half-plane pairs

    Raises:
        AmbiguousNearMiss when a hit lands in the gray zone
        InconsistentGraph when the faces violate the five-half-plane structure
    """
    if traces is None:
        traces = trace_critical_graph(pot, limits, threads)
    traces, shorts_by_trace = _resolve_shorts(pot, traces, limits)

    partner = {}
    short_traces = {}
    for (i, j) in shorts_by_trace:
        if (j, i) not in shorts_by_trace:
            raise InconsistentGraph(f"short trajectory {i}->{j} found in one direction only")
        forward = next(k for k, t in enumerate(traces) if t.start_tp == i and t.hit == j)
        backward = next(k for k, t in enumerate(traces) if t.start_tp == j and t.hit == i)
        partner[forward] = backward
        short_traces[(i, j)] = (forward, backward)
    shorts = [s for (i, j), s in shorts_by_trace.items() if i < j]

    end_order = _escape_order(pot, traces)
    if not end_order:
        raise InconsistentGraph("no critical trace escaped to infinity")
    cycles, left, ccw_next = _walk_faces(traces, partner, end_order)

    # classify cycles; faces: half-planes by k first, strips after
    half_planes = {}
    strip_cycles = []
    visit_face = {}
    for c, events in enumerate(cycles):
        visits = [n for n, (kind, _) in enumerate(events) if kind == 'visit']
        if len(visits) == 1:
            n = visits[0]
            arriving = traces[events[n - 1][1]].terminal.index
            leaving = traces[events[n][1]].terminal.index
            if leaving != (arriving + 1) % 5:
                raise InconsistentGraph(f"half-plane spans directions {arriving} -> {leaving}")
            if arriving in half_planes:
                raise InconsistentGraph(f"two half-planes claim index {arriving}")
            half_planes[arriving] = c
        elif len(visits) == 2:
            for n in visits:
                if traces[events[n - 1][1]].terminal.index != traces[events[n][1]].terminal.index:
                    raise InconsistentGraph("strip ends in two different asymptotic directions")
            strip_cycles.append(c)
        else:
            raise InconsistentGraph(f"face with {len(visits)} visits to infinity")
        for n in visits:
            visit_face[events[n][1]] = c

    if len(half_planes) != 5:
        raise InconsistentGraph(f"found {len(half_planes)} half-planes instead of 5")
    edges = len(traces) - len(shorts)
    if len(cycles) != edges - 4 + 2:
        raise InconsistentGraph(f"{len(cycles)} faces for {edges} edges violates Euler's formula")

    strip_cycles.sort(key=lambda c: min(traces[k].terminal.index for kind, k in cycles[c] if kind == 'visit'))
    position = {c: k for k, c in half_planes.items()}
    for n, c in enumerate(strip_cycles):
        position[c] = 5 + n

    def edge_id(dart):
        return min(dart, partner[dart]) if dart in partner else dart

    faces = [None] * len(cycles)
    for c, events in enumerate(cycles):
        boundary = tuple(sorted({edge_id(k) for _, k in events}))
        visits = [traces[k].terminal.index for kind, k in events if kind == 'visit']
        if c in half_planes.values():
            k = position[c]
            faces[position[c]] = Face(HALF_PLANE, k, boundary, (k, (k + 1) % 5))
        else:
            # split the cycle at its two visits; each visit starts a side with the inward trace
            start = next(n for n, (kind, _) in enumerate(events) if kind == 'visit')
            rolled = events[start:] + events[:start]
            sides = [[], []]
            side = -1
            for kind, k in rolled:
                if kind == 'visit':
                    side += 1
                sides[side].append(edge_id(k))
            faces[position[c]] = Face(STRIP, position[c] - 5, boundary, tuple(visits),
                                      (tuple(sides[0]), tuple(sides[1])))

    left_faces = tuple(position[left[k]] for k in range(len(traces)))
    right_faces = tuple(
        position[left[partner[k]]] if k in partner else position[visit_face[k]]
        for k in range(len(traces))
    )

    # type label
    strips = len(strip_cycles)
    if not shorts:
        type_label = 'A'
    elif len(shorts) == 2:
        type_label = 'Tree'
    elif len(shorts) == 1:
        forward = short_traces[shorts[0].endpoints][0]
        sides = (faces[left_faces[forward]].kind, faces[right_faces[forward]].kind)
        type_label = 'B' if STRIP in sides else 'BB'
    else:
        raise InconsistentGraph(f"{len(shorts)} short trajectories in a cubic Stokes graph")

    expected_strips, expected_pairs = TYPE_STRUCTURE[type_label]
    if strips != expected_strips:
        raise InconsistentGraph(f"type {type_label} graph with {strips} strips")

    summit = None
    if type_label == 'Tree':
        counts = np.bincount([v for s in shorts for v in s.endpoints], minlength=3)
        summit = int(np.argmax(counts))

    complexes = _stokes_complexes(shorts)
    logger.info(f"Classified a={pot.a:.6g}, theta={pot.theta:.6f}: type {type_label}, "
                f"{len(shorts)} short(s), {strips} strip(s)")
    graph = StokesGraph(
        potential=pot,
        critical_traces=tuple(traces),
        short_trajectories=tuple(shorts),
        faces=tuple(faces),
        type_label=type_label,
        stokes_complexes=tuple(tuple(c) for c in complexes),
        left_faces=left_faces,
        right_faces=right_faces,
        short_traces=short_traces,
        summit=summit,
    )
    non_admissible = non_admissible_pairs(graph)
    if len(non_admissible) != expected_pairs:
        raise InconsistentGraph(
            f"type {type_label} graph has {len(non_admissible)} non-admissible pairs, expected {expected_pairs}")
    return replace(graph, non_admissible=non_admissible)


def opposite_face(graph: StokesGraph, short: ShortTrajectory, endpoint: int) -> int:
    """The face at `endpoint` in the sector not bordered by the short trajectory"""
    i, j = short.endpoints
    forward, backward = graph.short_traces[(i, j)]
    dart = forward if endpoint == i else backward
    ring = sorted((k for k, t in enumerate(graph.critical_traces) if t.start_tp == endpoint),
                  key=lambda k: np.mod(graph.critical_traces[k].direction, 2 * np.pi))
    nxt = ring[(ring.index(dart) + 1) % len(ring)]
    return graph.left_faces[nxt]


def _across_strip(graph: StokesGraph, strip: int, endpoint: int) -> List[int]:
    """Half-planes bordering the side of a strip that does not reach `endpoint`"""
    traces = graph.critical_traces

    def touches(edge):
        return endpoint in (traces[edge].start_tp, traces[edge].hit)

    far = [side for side in graph.faces[strip].sides if not any(touches(e) for e in side)]
    if len(far) != 1:
        raise InconsistentGraph(f"strip {graph.faces[strip].label} meets turning point {endpoint} on both sides")
    across = {f for e in far[0] for f in (graph.left_faces[e], graph.right_faces[e])}
    return sorted(f for f in across if graph.faces[f].kind == HALF_PLANE)


def non_admissible_pairs(graph: StokesGraph) -> Tuple[Tuple[int, int], ...]:
    """
    Half-plane pairs separated by a finite Stokes line

    A short trajectory separates the faces opposite it at its two ends; an
    opposite strip is crossed to the half-planes on its far side. A tree also
    separates the faces opposite its two outer ends.
    """
    shorts = list(graph.short_trajectories)
    pairs = set()
    for short in shorts:
        ends = []
        for v in short.endpoints:
            face = opposite_face(graph, short, v)
            ends.append([face] if graph.faces[face].kind == HALF_PLANE else _across_strip(graph, face, v))
        pairs.update(tuple(sorted((p, q))) for p in ends[0] for q in ends[1])
    if graph.type_label == 'Tree':
        outer = [(short, next(v for v in short.endpoints if v != graph.summit)) for short in shorts]
        pairs.add(tuple(sorted(opposite_face(graph, short, v) for short, v in outer)))
    return tuple(sorted(pairs))


def admissible_pairs(graph: StokesGraph) -> List[EigenvalueProblemDescriptor]:
    """Non-admissible half-plane pairs, each with its joining complex and kind"""
    descriptors = []
    shorts = list(graph.short_trajectories)
    for pair in graph.non_admissible:
        target = set(pair)
        kind = None
        contours = ()
        via_strip = False
        for short in shorts:
            i, j = short.endpoints
            if {opposite_face(graph, short, i), opposite_face(graph, short, j)} == target:
                kind, contours = UNBROKEN, (short.endpoints,)
                break
        if kind is None and graph.type_label == 'Tree':
            s = graph.summit
            ends = [next(v for v in short.endpoints if v != s) for short in shorts]
            if {opposite_face(graph, shorts[0], ends[0]), opposite_face(graph, shorts[1], ends[1])} == target:
                kind = BROKEN
                contours = tuple(short.endpoints for short in shorts)
        if kind is None:
            kind, contours, via_strip = UNBROKEN, (shorts[0].endpoints,), True

        anchor = contours[0][0]
        complex_id = next(n for n, c in enumerate(graph.stokes_complexes) if anchor in c)
        infinite = tuple(
            k for k, t in enumerate(graph.critical_traces)
            if t.escaped and graph.left_faces[k] not in target and graph.right_faces[k] not in target
        )
        descriptors.append(EigenvalueProblemDescriptor(
            pair=tuple(pair), joining_complex=complex_id, joining_kind=kind,
            period_contours=contours, via_strip=via_strip, infinite_lines=infinite,
        ))
    return descriptors


def accumulation_check(graph: StokesGraph, descriptor: Optional[EigenvalueProblemDescriptor]) -> dict:
    """
    Whether eigenvalues accumulate along arg(lambda) = theta for a descriptor

    Returns:
        {'accumulates', 'condition', 'alpha', 'rational'}; the broken tree
        case reports the period ratio and its best rational approximation
    """
    result = {'accumulates': False, 'condition': 'none', 'alpha': None, 'rational': None}
    if descriptor is None or graph.type_label == 'A':
        return result
    if graph.type_label == 'BB' or descriptor.via_strip:
        return result
    if descriptor.joining_kind == UNBROKEN:
        result['accumulates'] = True
        return result

    alpha = tree_period_ratio(graph)
    approx = Fraction(alpha).limit_denominator(RATIONAL_DENOMINATOR)
    rational = abs(alpha - float(approx)) < RATIONAL_TOL
    result.update({
        'accumulates': rational,
        'condition': 'rationality',
        'alpha': alpha,
        'rational': f"{approx.numerator}/{approx.denominator}" if rational else None,
    })
    return result
