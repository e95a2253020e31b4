import numpy as np
import pytest
from scipy.special import gamma

from applications import (
    QUOTED_CONSTANT, PT_A, SturmMap, abelian_period_check, asymptotic_energy, lambda_for_energy,
    real_zero_family, short_trajectory_theta_scan, sturm_spectrum, vertex_thetas, wkb_energy,
)
from periods import pt_period_closed_form
from stokes_errors import InvalidData, NotOnTheta


def cubic_wkb_energy(n):
    """Leading WKB level of -y'' + i x^3 y = E y, n counted from 1"""
    constant = gamma(11.0 / 6.0) * np.sqrt(np.pi) / (2.0 * np.sin(np.pi / 3) * gamma(4.0 / 3.0))
    return (constant * (2 * n - 1)) ** 1.2


def test_vertex_choices_give_three_directions():
    assert vertex_thetas() == pytest.approx([np.pi / 4, 7 * np.pi / 12, 11 * np.pi / 12])


@pytest.mark.parametrize('energy, vertex', [(1.0, 0), (3.7 + 0.4j, 0), (2.0 - 1.0j, 1), (5.0, 2)])
def test_rescaling_maps_the_cubic_onto_the_triangle(energy, vertex):
    m = SturmMap(energy, vertex=vertex)
    x = np.array([0.3 - 0.2j, -1.1 + 0.7j, 2.0])
    assert m.Q(m.to_z(x)) == pytest.approx(m.b ** 3 * m.P(x))
    assert m.to_x(m.to_z(x)) == pytest.approx(x)
    assert m.lam ** 2 == pytest.approx(m.lambda_squared)
    assert 0 <= np.angle(m.lam) < np.pi


@pytest.mark.parametrize('energy, vertex', [(2.5, 0), (1.0 + 0.3j, 0), (4.0, 1)])
def test_lambda_inversion(energy, vertex):
    m = SturmMap(energy, vertex=vertex)
    back = SturmMap.from_lambda(m.lam, vertex=vertex)
    assert back.E == pytest.approx(m.E, rel=1e-12)


def test_sturm_map_rejects_bad_input():
    with pytest.raises(InvalidData):
        SturmMap(1.0, vertex=3)
    with pytest.raises(InvalidData):
        SturmMap(0.0)


def test_real_energy_sits_on_the_quarter_ray():
    m = SturmMap(4.2)
    assert m.theta == pytest.approx(np.pi / 4)
    assert abs(m.lam) == pytest.approx(lambda_for_energy(4.2))
    assert m.rescaled_potential.a == PT_A


def test_wkb_energy_is_the_cubic_wkb_level():
    period = pt_period_closed_form()
    for n in (1, 2, 5, 10):
        assert wkb_energy(n, period) == pytest.approx(cubic_wkb_energy(n), rel=1e-10)
        assert lambda_for_energy(wkb_energy(n, period)) == pytest.approx((2 * n - 1) * np.pi / period)


def test_asymptotic_energy_scaling():
    assert QUOTED_CONSTANT == pytest.approx(1.267, abs=1e-3)
    assert asymptotic_energy(3) / asymptotic_energy(1) == pytest.approx(5 ** 1.2)


def test_abelian_period_check():
    check = abelian_period_check()
    assert check['forms_agree'] is True
    assert check['computed'] == pytest.approx(pt_period_closed_form(), rel=1e-6)
    assert abs(check['value'][0]) < 1e-8


def test_sturm_rejects_bad_indices():
    with pytest.raises(InvalidData):
        sturm_spectrum(0.0, [0, 1], oracle=False)


def test_sturm_estimates_without_oracle():
    levels = sturm_spectrum(0.0, [1, 2], oracle=False)
    assert [level.n for level in levels] == [1, 2]
    assert all(level.e_oracle is None and level.source == 'asymptotic' for level in levels)
    assert levels[1].e_wkb == pytest.approx(cubic_wkb_energy(2), rel=1e-5)
    assert levels[0].to_dict()['im_ratio'] is None


@pytest.mark.slow
def test_sturm_oracle_levels_are_real():
    levels = sturm_spectrum(0.0, [1, 2, 3, 5, 6])
    assert levels[0].e_oracle.real == pytest.approx(1.1562670719881, rel=1e-6)
    assert levels[2].e_oracle.real == pytest.approx(7.5622738549788, rel=1e-6)
    for level in levels:
        if level.n >= 5:
            assert level.imaginary_ratio < 1e-4
    deviations = [abs(level.e_oracle.real / level.e_wkb - 1) for level in levels]
    assert deviations[-1] < deviations[0]


@pytest.mark.slow
def test_theta_scan_finds_the_three_vertex_directions():
    found = short_trajectory_theta_scan()
    assert len(found) == 3
    assert found == pytest.approx([np.pi / 4, 7 * np.pi / 12, 11 * np.pi / 12], abs=1e-6)


@pytest.mark.slow
def test_real_zero_family_rejects_points_off_the_arm():
    with pytest.raises(NotOnTheta):
        real_zero_family(5.0 + 2.0j)
