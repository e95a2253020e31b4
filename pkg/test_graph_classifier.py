import pytest

from core_algebra import symmetric_partner
from graph_classifier import (
    BROKEN, HALF_PLANE, STRIP, TYPE_STRUCTURE, UNBROKEN, accumulation_check, admissible_pairs, classify,
    non_admissible_pairs, opposite_face,
)
from periods import tree_period_ratio


def check_structure(graph):
    strips, pairs = TYPE_STRUCTURE[graph.type_label]
    assert len(graph.half_planes) == 5
    assert [f.index for f in graph.half_planes] == list(range(5))
    assert len(graph.strips) == strips
    assert len(graph.non_admissible) == pairs
    for face in graph.half_planes:
        assert face.asymptotic_directions == (face.index, (face.index + 1) % 5)
    for k in range(len(graph.critical_traces)):
        assert graph.left_faces[k] != graph.right_faces[k]


def test_type_a(type_a_graph):
    assert type_a_graph.type_label == 'A'
    assert type_a_graph.short_trajectories == ()
    assert admissible_pairs(type_a_graph) == []
    assert accumulation_check(type_a_graph, None)['accumulates'] is False
    check_structure(type_a_graph)
    for strip in type_a_graph.strips:
        assert strip.kind == STRIP and len(strip.sides) == 2
        assert strip.label.startswith('B')


def test_pt_graph_is_type_b(pt_graph):
    assert pt_graph.type_label == 'B'
    check_structure(pt_graph)
    assert [s.endpoints for s in pt_graph.short_trajectories] == [(0, 1)]
    assert pt_graph.short_between(1, 0) is pt_graph.short_trajectories[0]
    assert sorted(map(sorted, pt_graph.stokes_complexes)) == [[0, 1], [2]]
    with pytest.raises(KeyError):
        pt_graph.short_between(0, 2)


def test_pt_eigenvalue_problem(pt_graph, pt_descriptor):
    assert pt_descriptor.joining_kind == UNBROKEN
    assert pt_descriptor.period_contours == ((0, 1),)
    assert not pt_descriptor.via_strip
    short = pt_graph.short_trajectories[0]
    assert {opposite_face(pt_graph, short, 0), opposite_face(pt_graph, short, 1)} == {0, 3}
    check = accumulation_check(pt_graph, pt_descriptor)
    assert check['accumulates'] is True
    assert check['alpha'] is None


def test_graph_serializes(pt_graph):
    payload = pt_graph.to_dict()
    assert payload['type_label'] == 'B'
    assert len(payload['critical_traces']) == 9
    assert {tuple(p) for p in payload['non_admissible']} == set(pt_graph.non_admissible)
    assert all(face['kind'] in (HALF_PLANE, STRIP) for face in payload['faces'])


def test_symmetric_partner_has_the_same_type(pt_potential, pt_graph):
    partner = classify(symmetric_partner(pt_potential), threads=2)
    assert partner.type_label == pt_graph.type_label
    assert len(partner.short_trajectories) == 1
    assert partner.short_trajectories[0].abs_value == pytest.approx(
        pt_graph.short_trajectories[0].abs_value, rel=1e-6)


@pytest.mark.slow
def test_tree_point_has_two_short_trajectories(tree_graph):
    graph = tree_graph
    assert graph.type_label == 'Tree'
    check_structure(graph)
    assert len(graph.short_trajectories) == 2
    assert graph.summit in (0, 1, 2)
    assert all(graph.summit in s.endpoints for s in graph.short_trajectories)
    descriptors = admissible_pairs(graph)
    assert len(descriptors) == 3
    for descriptor in descriptors:
        check = accumulation_check(graph, descriptor)
        if descriptor.joining_kind == BROKEN:
            assert check['condition'] == 'rationality'
            assert check['alpha'] == pytest.approx(1.0, abs=1e-8)
            assert check['rational'] == '1/1'
            assert check['accumulates'] is True
    assert any(d.joining_kind == BROKEN for d in descriptors)


@pytest.mark.slow
def test_tree_period_ratio_is_symmetric_at_quarter_turn(tree_graph):
    alpha = tree_period_ratio(tree_graph)
    assert alpha == pytest.approx(1.0, abs=1e-8)
    assert tree_period_ratio(tree_graph, swap=True) == pytest.approx(1.0 / alpha, rel=1e-14)
    # the summit is a, with one short trajectory to each of -1 and +1
    assert tree_graph.summit == 2
    assert sorted(s.endpoints for s in tree_graph.short_trajectories) == [(0, 2), (1, 2)]


def test_real_a_beyond_one_is_type_bb(type_bb_graph):
    assert type_bb_graph.type_label == 'BB'
    check_structure(type_bb_graph)
    assert [s.endpoints for s in type_bb_graph.short_trajectories] == [(1, 2)]
    short = type_bb_graph.short_trajectories[0]
    forward = type_bb_graph.short_traces[(1, 2)][0]
    assert type_bb_graph.faces[type_bb_graph.left_faces[forward]].kind == HALF_PLANE
    assert type_bb_graph.faces[type_bb_graph.right_faces[forward]].kind == HALF_PLANE
    # the strip reaches the short trajectory only at its endpoint z = 1
    strip = type_bb_graph.strips[0]
    assert min(type_bb_graph.short_traces[(1, 2)]) not in strip.boundary
    starts = {type_bb_graph.critical_traces[k].start_tp for k in strip.boundary}
    assert 1 in starts and 2 not in starts
    assert short.abs_value > 0


def test_type_bb_has_two_problems_without_accumulation(type_bb_graph):
    descriptors = admissible_pairs(type_bb_graph)
    assert len(descriptors) == 2
    for descriptor in descriptors:
        assert accumulation_check(type_bb_graph, descriptor)['accumulates'] is False


def path_search_non_admissible(graph):
    """Pairs no canonical path joins: one crossing out of p, then strips entered and left on opposite sides"""
    partner = {}
    for forward, backward in graph.short_traces.values():
        partner[forward], partner[backward] = backward, forward
    side_of = {}
    for position, face in enumerate(graph.faces):
        for s, members in enumerate(face.sides):
            for e in members:
                side_of[(position, e)] = s
    adjacency = {f: [] for f in range(len(graph.faces))}
    for k in range(len(graph.critical_traces)):
        if k in partner and partner[k] < k:
            continue
        adjacency[graph.left_faces[k]].append((k, graph.right_faces[k]))
        adjacency[graph.right_faces[k]].append((k, graph.left_faces[k]))

    def joined(p, q):
        stack, seen = [(p, None)], set()
        while stack:
            face, entry = stack.pop()
            for edge, other in adjacency[face]:
                if graph.faces[face].kind == STRIP and side_of[(face, edge)] == entry:
                    continue
                if graph.faces[face].kind == HALF_PLANE and face != p:
                    continue
                if other == q:
                    return True
                if graph.faces[other].kind == STRIP:
                    state = (other, side_of[(other, edge)])
                    if state not in seen:
                        seen.add(state)
                        stack.append(state)
        return False

    return tuple((p, q) for p in range(5) for q in range(p + 1, 5) if not joined(p, q))


@pytest.mark.parametrize('name', ['type_a_graph', 'pt_graph', 'type_bb_graph'])
def test_separation_rule_agrees_with_path_search(request, name):
    graph = request.getfixturevalue(name)
    assert non_admissible_pairs(graph) == graph.non_admissible
    assert graph.non_admissible == path_search_non_admissible(graph)


@pytest.mark.slow
def test_separation_rule_agrees_with_path_search_on_the_tree(tree_graph):
    assert tree_graph.non_admissible == path_search_non_admissible(tree_graph)
