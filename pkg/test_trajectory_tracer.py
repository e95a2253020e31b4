import numpy as np
import pytest

from core_algebra import Potential, critical_directions, local_stokes_directions
from periods import pt_period_closed_form
from stokes_errors import InvalidData, NotActuallyShort
from trajectory_tracer import (
    ESCAPED, HIT_TURNING_POINT, TraceLimits, refine_short_trajectory, trace, trace_critical_graph,
)

TYPE_A = Potential(-2j, np.pi / 4)


@pytest.fixture(scope='module')
def type_a_traces():
    return trace_critical_graph(TYPE_A, threads=2)


def angular_gap(x, y):
    return abs(np.angle(np.exp(1j * (x - y))))


def test_nine_critical_traces(type_a_traces):
    assert len(type_a_traces) == 9
    assert [t.start_tp for t in type_a_traces] == [0, 0, 0, 1, 1, 1, 2, 2, 2]
    for trajectory in type_a_traces:
        assert trajectory.kind == 'vertical'
        assert trajectory.re_h_drift < 1e-6
        assert np.all(np.abs(trajectory.h_values.real) < 1e-6)
        assert np.all(np.diff(trajectory.h_values.imag) > 0)


def test_type_a_traces_all_escape(type_a_traces):
    _, alpha_perp = critical_directions(TYPE_A)
    assert all(t.terminal.kind == ESCAPED for t in type_a_traces)
    assert {t.terminal.index for t in type_a_traces} == set(range(5))
    for trajectory in type_a_traces:
        assert angular_gap(trajectory.terminal.angle, alpha_perp[trajectory.terminal.index]) < 0.2


def test_halving_the_step_keeps_terminals(type_a_traces):
    limits = TraceLimits.for_potential(TYPE_A, step_scale=0.5)
    finer = trace_critical_graph(TYPE_A, limits=limits, threads=2)
    assert [t.terminal.index for t in finer] == [t.terminal.index for t in type_a_traces]


def test_regular_seed_horizontal_trace():
    pot = Potential(0.5 + 0.5j, 0.3)
    trajectory = trace(pot, 2.0 + 2.0j, 0.0, kind='horizontal')
    assert trajectory.start_tp is None
    assert trajectory.h_values[0] == 0
    assert np.all(np.abs(trajectory.h_values.imag) < 1e-6)
    assert np.all(np.diff(trajectory.h_values.real) > 0)
    assert trajectory.terminal.kind in (ESCAPED, HIT_TURNING_POINT)


def test_unknown_kind_rejected():
    with pytest.raises(InvalidData):
        trace(TYPE_A, 0j, 0.0, kind='diagonal')


def test_pt_short_trajectory_hits_both_ways(pt_graph):
    hits = {(t.start_tp, t.hit) for t in pt_graph.critical_traces if t.hit is not None}
    assert (0, 1) in hits and (1, 0) in hits


def test_refined_short_trajectory(pt_potential):
    for direction in local_stokes_directions(pt_potential, -1.0):
        coarse = trace(pt_potential, -1.0, float(direction))
        if coarse.hit == 1:
            break
    else:
        pytest.fail('no Stokes line from -1 reaches +1')
    short = refine_short_trajectory(pt_potential, (0, 1), coarse)
    assert short.endpoints == (0, 1)
    assert short.residual < 1e-9
    assert short.polyline[0] == -1 and short.polyline[-1] == 1
    assert short.abs_value == pytest.approx(abs(short.value), rel=1e-6)


def test_straight_segment_is_not_short_off_the_level_set():
    pot = Potential(2j, 0.3)
    with pytest.raises(NotActuallyShort):
        refine_short_trajectory(pot, (0, 1), np.array([-1.0, 0.0, 1.0]))


def test_pt_join_is_not_short_at_another_angle():
    pot = Potential(1j * np.sqrt(3.0), np.pi / 3)
    with pytest.raises(NotActuallyShort) as info:
        refine_short_trajectory(pot, (0, 1), np.array([-1.0, 0.0, 1.0]))
    # the pi/4 period turned by pi/12 picks up a real part
    assert info.value.residual == pytest.approx(0.5 * pt_period_closed_form() * np.sin(np.pi / 12), rel=1e-8)
