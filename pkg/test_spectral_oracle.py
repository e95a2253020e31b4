from types import SimpleNamespace

import numpy as np
import pytest

from graph_classifier import admissible_pairs
from spectral_oracle import (
    bounded_zero_count, contour_winding, count_zeros, eigenfunction_grid, locate_zeros, marked_lines, oracle_spectrum,
    partition_zeros, polish_zero, polyline_distance, propagate, ray_solution, shoot_eigenvalue, shoot_real_line,
    shooting_problem, wronskian_mismatch,
)
from stokes_errors import InvalidData, NonIntegerWinding, NotAccumulating, ZeroOnContour
from wkb_engine import quantize

# -y'' + i x^3 y = E y, lowest levels
CUBIC_LEVELS = [1.1562670719881, 4.1092287528096, 7.5622738549788]


def circle_values(power, n):
    z = np.exp(2j * np.pi * np.arange(n + 1) / n)
    return z, z ** power


def test_count_zeros_of_a_power():
    z, values = circle_values(2, 64)
    assert count_zeros(values) == 2
    z, values = circle_values(-1, 64)
    assert count_zeros(values) == -1


def test_count_zeros_rejects_coarse_samples():
    z, values = circle_values(3, 8)
    with pytest.raises(NonIntegerWinding):
        count_zeros(values)


def test_count_zeros_detects_zero_on_contour():
    z, values = circle_values(1, 64)
    shifted = values - z[5]
    with pytest.raises(ZeroOnContour):
        count_zeros(shifted, points=z)
    close = values - 0.9999999 * z[5]
    with pytest.raises(ZeroOnContour):
        count_zeros(close, points=z, derivatives=np.ones_like(z))


def test_polish_zero_newton():
    ef = SimpleNamespace(value=lambda z: (z * z - 2.0, 2.0 * z))
    zero, step = polish_zero(ef, 1.0 + 0.1j)
    assert zero == pytest.approx(np.sqrt(2.0), abs=1e-12)
    assert step < 1e-12


def test_polyline_distance_and_partition():
    short = np.array([-1.0 + 0j, 1.0 + 0j])
    line = np.array([2j, 10j])
    assert polyline_distance(0.5 + 0.2j, short) == pytest.approx(0.2)
    assert polyline_distance(3.0 + 0j, short) == pytest.approx(2.0)
    bounded, unbounded, worst = partition_zeros([0.1j, 0.1 + 5j], [short], [line])
    assert bounded == [0.1j]
    assert unbounded == [0.1 + 5j]
    assert worst == pytest.approx(0.1)


def test_propagate_exponential():
    # y'' = y from 0 to 1 with y = e^z
    result = propagate(lambda z: np.ones_like(z), 0j, 1.0 + 0j, 1.0, 1.0, n_samples=5)
    values = result.f * np.exp(result.log_scale)
    assert values[-1] == pytest.approx(np.e, rel=1e-9)
    assert values == pytest.approx(np.exp(result.t), rel=1e-9)


def test_shooting_problem_defaults(pt_graph, pt_descriptor):
    prob = shooting_problem(pt_graph, pt_descriptor)
    assert prob.radius == pytest.approx(12.0 * np.sqrt(3.0))
    assert abs(prob.matching_point.real) < 0.5
    assert prob.to_dict()['rays'] == list(prob.rays)


def test_bracket_must_be_positive(pt_graph, pt_descriptor):
    prob = shooting_problem(pt_graph, pt_descriptor)
    with pytest.raises(InvalidData):
        shoot_eigenvalue(prob, (0.0, 1.0))


@pytest.mark.slow
def test_oracle_tracks_quantization(pt_graph, pt_descriptor):
    n_range = list(range(3, 11))
    predicted = quantize(pt_graph, pt_descriptor, n_range).lambda_mods
    computed = oracle_spectrum(pt_graph, pt_descriptor, n_range, threads=4).lambda_mods
    scaled = [n * abs(c - p) for n, c, p in zip(n_range, computed, predicted)]
    assert max(scaled) < 1.0
    assert scaled[-1] <= 2.0 * scaled[0] + 1e-6


@pytest.mark.slow
def test_eigenfunction_zeros_follow_the_index(pt_graph, pt_descriptor):
    prob = shooting_problem(pt_graph, pt_descriptor)
    predicted = quantize(pt_graph, pt_descriptor, [3]).lambda_mods[0]
    result = shoot_eigenvalue(prob, (0.8 * predicted, 1.2 * predicted))
    assert abs(wronskian_mismatch(prob, result.lam)) < 1e-9
    short = pt_graph.short_between(0, 1)
    assert bounded_zero_count(result.eigenfunction, short.polyline) == 2
    zero_set = locate_zeros(result.eigenfunction, (-2.0, 2.0, -1.0, 1.5), graph=pt_graph, eigenvalue_index=3)
    assert len(zero_set.bounded_component) == 2
    assert zero_set.max_dist_to_support < 0.25


@pytest.mark.slow
@pytest.mark.parametrize('n', [1, 2, 3])
def test_real_line_shooting_cubic_levels(n):
    energy, residual = shoot_real_line(0.0, 1.05 * CUBIC_LEVELS[n - 1])
    assert energy.real == pytest.approx(CUBIC_LEVELS[n - 1], rel=1e-8)
    assert abs(energy.imag) < 1e-8
    assert residual < 1e-9


def test_type_a_has_nothing_to_shoot(type_a_graph):
    assert admissible_pairs(type_a_graph) == []


def test_oracle_refuses_type_bb(type_bb_graph):
    descriptor = admissible_pairs(type_bb_graph)[0]
    with pytest.raises(NotAccumulating):
        oracle_spectrum(type_bb_graph, descriptor, [1, 2, 3], threads=1)


def test_eigenfunction_grid_keeps_the_wronskian(pt_graph, pt_descriptor):
    prob = shooting_problem(pt_graph, pt_descriptor)
    lam = 2.0 * pt_graph.potential.rotation
    grid = eigenfunction_grid(prob, lam, (-1.0, 1.0, -0.5, 0.5), resolution=9)
    assert grid.f.shape == grid.df.shape == grid.points.shape == (9, 9)
    assert np.all(np.isfinite(grid.f)) and np.all(np.isfinite(grid.log_scale))
    assert np.all(np.abs(grid.f) > 0)

    # second solution, subdominant along the other ray
    second = ray_solution(prob, lam, 1)
    base = ray_solution(prob, lam, 0).final
    reference = complex(base[0] * second.final[1] - base[1] * second.final[0])
    assert abs(reference) > 1e-8
    for row, column in [(0, 0), (0, 8), (4, 4), (8, 2), (8, 8)]:
        z = grid.points[row, column]
        g = propagate(prob.q(lam), prob.matching_point, z, second.final[0], second.final[1])
        w = (grid.f[row, column] * g.final[1] - grid.df[row, column] * g.final[0]) \
            * np.exp(grid.log_scale[row, column] + g.final_log)
        assert w == pytest.approx(reference, rel=1e-6)


def test_eigenfunction_grid_rejects_empty_window(pt_graph, pt_descriptor):
    prob = shooting_problem(pt_graph, pt_descriptor)
    with pytest.raises(InvalidData):
        eigenfunction_grid(prob, 2.0 * pt_graph.potential.rotation, (1.0, -1.0, 0.0, 1.0))


@pytest.mark.slow
def test_no_zeros_away_from_the_marked_lines(pt_graph, pt_descriptor):
    prob = shooting_problem(pt_graph, pt_descriptor)
    predicted = quantize(pt_graph, pt_descriptor, [3]).lambda_mods[0]
    ef = shoot_eigenvalue(prob, (0.8 * predicted, 1.2 * predicted)).eigenfunction
    shorts, infinite = marked_lines(pt_graph, pt_descriptor)
    lines = shorts + infinite

    def clearance(z):
        to_roots = min(abs(z - r) for r in pt_graph.potential.roots)
        return min([to_roots] + [polyline_distance(z, np.asarray(line)) for line in lines])

    x, y = np.meshgrid(np.linspace(-2.5, 2.5, 21), np.linspace(-1.5, 2.5, 17))
    candidates = sorted((x + 1j * y).ravel(), key=clearance, reverse=True)
    for centre in candidates[:3]:
        gap = clearance(centre)
        assert gap > 0.6
        radius = min(0.5, 0.5 * gap)
        circle = centre + radius * np.exp(2j * np.pi * np.arange(48) / 48)
        assert contour_winding(ef, circle) == 0
