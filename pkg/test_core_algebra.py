import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.special import beta

from core_algebra import (
    Potential, branch_at, branch_at_turning_point, continue_branch, critical_directions, escape_index,
    h_integral, half_plane_sectors, local_antistokes_directions, local_stokes_directions,
    principal_sqrt_p, reflected_partner, rotated_partner, symmetric_partner, turning_point_index,
    turning_points,
)
from stokes_errors import InvalidData, InvalidPotential, PathTooCloseToTurningPoint


def circle(centre, radius, n=96):
    phi = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    points = list(centre + radius * np.exp(1j * phi))
    return points + [points[0]]


@pytest.mark.parametrize('a', [1.0, -1.0, 1 + 0j])
def test_fixed_turning_points_rejected(a):
    with pytest.raises(InvalidPotential):
        Potential(a, 0.3)


def test_theta_reduced_modulo_pi():
    pot = Potential(0.5j, np.pi + 0.25)
    assert pot.theta == pytest.approx(0.25)
    assert pot.roots == (-1.0, 1.0, 0.5j)
    assert pot.rotation == pytest.approx(np.exp(0.25j))


def test_principal_root_squares_to_p():
    pot = Potential(0.3 + 1.2j, 0.7)
    z = np.array([2 + 1j, -3 - 0.5j, 0.1j, 4.0])
    assert np.allclose(principal_sqrt_p(pot, z) ** 2, pot.p(z))


def test_critical_directions_interlace():
    pot = Potential(2j, 0.4)
    alpha, alpha_perp = critical_directions(pot)
    assert np.allclose(np.diff(np.sort(alpha)), 2 * np.pi / 5)
    for k, sector in enumerate(half_plane_sectors(pot)):
        assert sector['centre'] == pytest.approx(alpha[k])
        width = np.mod(sector['end'] - sector['start'], 2 * np.pi)
        assert width == pytest.approx(2 * np.pi / 5)
        assert np.mod(sector['centre'] - sector['start'], 2 * np.pi) == pytest.approx(np.pi / 5)


def test_escape_index_round_trip():
    pot = Potential(-0.5 + 0.5j, 1.1)
    alpha, alpha_perp = critical_directions(pot)
    for j in range(5):
        assert escape_index(pot, alpha_perp[j] + 0.05, 'vertical') == j
        assert escape_index(pot, alpha[j] - 0.05, 'horizontal') == j
    with pytest.raises(InvalidData):
        escape_index(pot, 0.0, 'diagonal')


def test_local_directions_are_stokes_and_antistokes():
    pot = Potential(1.5j, 0.9)
    for tp in turning_points(pot):
        dp = pot.dp(tp.location)
        for phi in local_stokes_directions(pot, tp.location):
            local = np.exp(2j * pot.theta) * dp * np.exp(3j * phi)
            assert local.real == pytest.approx(-abs(dp))
            assert local.imag == pytest.approx(0.0, abs=1e-12 * abs(dp))
        for phi in local_antistokes_directions(pot, tp.location):
            local = np.exp(2j * pot.theta) * dp * np.exp(3j * phi)
            assert local.real == pytest.approx(abs(dp))


def test_turning_point_index():
    pot = Potential(2 - 1j, 0.0)
    assert turning_point_index(pot, -1.0) == 0
    assert turning_point_index(pot, 2 - 1j) == 2
    assert turning_point_index(pot, 0.0) is None
    assert turning_point_index(pot, 1.0 + 1e-3, radius=1e-2) == 1
    assert [tp.label for tp in turning_points(pot)] == ['minus1', 'plus1', 'a']


def test_loop_around_one_turning_point_changes_sheet():
    pot = Potential(3j, 0.2)
    path = circle(3j, 0.5)
    ctx = branch_at(pot, path[0])
    assert continue_branch(ctx, path).final_value == pytest.approx(-ctx.base_value, rel=1e-10)


def test_loop_around_two_turning_points_keeps_sheet():
    pot = Potential(3j, 0.2)
    path = circle(0j, 1.5)
    ctx = branch_at(pot, path[0])
    assert continue_branch(ctx, path).final_value == pytest.approx(ctx.base_value, rel=1e-10)


def test_continuation_refuses_to_touch_a_turning_point():
    pot = Potential(3j, 0.2)
    ctx = branch_at(pot, -2.0 + 0j)
    with pytest.raises(PathTooCloseToTurningPoint):
        continue_branch(ctx, [-2.0, 2.0])


def test_branch_value_must_be_a_root():
    pot = Potential(3j, 0.2)
    with pytest.raises(InvalidData):
        branch_at(pot, 2.0, value=1.0)
    with pytest.raises(InvalidData):
        branch_at(pot, 1.0)
    with pytest.raises(InvalidData):
        branch_at_turning_point(pot, 0, sheet=2)


def test_h_integral_between_turning_points_on_the_real_segment():
    # a = 0, theta = 0: integral of sqrt(z (z^2 - 1)) from 0 to 1
    pot = Potential(0j, 0.0)
    integral = h_integral(pot, 0.0, 1.0, ctx=branch_at_turning_point(pot, 2))
    # |integral| = B(3/4, 3/2)/2; the sheet fixes only the sign
    assert abs(integral.value) == pytest.approx(0.5 * beta(0.75, 1.5), rel=1e-10)
    assert abs(integral.branch.final_value) < 1e-12


def test_h_integral_is_additive():
    pot = Potential(0.4 + 1.1j, 0.6)
    z0, mid, z1 = 2.0 + 0.5j, 0.5 - 1.5j, -2.0 + 0.3j
    whole = h_integral(pot, z0, z1, path=[z0, mid, z1])
    first = h_integral(pot, z0, mid)
    second = h_integral(pot, mid, z1, ctx=first.branch)
    assert whole.value == pytest.approx(first.value + second.value, rel=1e-10)
    assert whole.unrotated == pytest.approx(whole.value * np.exp(-1j * pot.theta))


def test_partners():
    pot = Potential(0.3 + 1.7j, 0.5, 2.0)
    sym = symmetric_partner(pot)
    assert sym.a == -pot.a and sym.theta == pytest.approx(0.5 + np.pi / 2)
    rot = rotated_partner(pot)
    assert rot.a == pot.a and rot.lambda_mod == 2.0
    ref = reflected_partner(pot)
    assert ref.a == pytest.approx(-np.conj(pot.a))
    assert ref.theta == pytest.approx(np.pi / 2 - 0.5)


def test_symmetric_partner_integrals():
    pot = Potential(0.3 + 1.7j, 0.5)
    h = h_integral(pot, -1.0, 1.0).value
    h_sym = h_integral(symmetric_partner(pot), 1.0, -1.0).value
    assert abs(h_sym) == pytest.approx(abs(h), rel=1e-10)
    assert abs(h_sym.real) == pytest.approx(abs(h.real), rel=1e-8, abs=1e-12)


def test_reflected_partner_integrals():
    pot = Potential(0.3 + 1.7j, 0.5)
    h = h_integral(pot, -1.0, 1.0).value
    h_ref = h_integral(reflected_partner(pot), 1.0, -1.0).value
    assert abs(h_ref) == pytest.approx(abs(h), rel=1e-10)
    assert abs(h_ref.real) == pytest.approx(abs(h.real), rel=1e-8, abs=1e-12)


def segment_distance(start, end, point):
    d = end - start
    t = np.clip(((point - start) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return abs(start + t * d - point)


def winding(loop, point):
    turns = sum(np.angle((z1 - point) / (z0 - point)) for z0, z1 in zip(loop[:-1], loop[1:]))
    return int(round(turns / (2 * np.pi)))


def random_loop(rng, roots, n=10, clearance=0.2):
    while True:
        centre = complex(*rng.uniform(-2.5, 2.5, 2))
        angles = np.sort(rng.uniform(0.0, 2 * np.pi, n))
        points = list(centre + rng.uniform(0.3, 3.0, n) * np.exp(1j * angles))
        points.append(points[0])
        if all(segment_distance(z0, z1, r) > clearance
               for z0, z1 in zip(points[:-1], points[1:]) for r in roots):
            return points


def random_potential(rng):
    while True:
        a = complex(*rng.uniform(-2.0, 2.0, 2))
        if min(abs(a - 1), abs(a + 1)) > 0.5:
            return Potential(a, rng.uniform(0.0, np.pi))


def test_branch_monodromy_follows_winding_parity():
    rng = np.random.default_rng(11)
    flips = 0
    for _ in range(300):
        pot = random_potential(rng)
        loop = random_loop(rng, pot.roots)
        parity = sum(winding(loop, r) for r in pot.roots) % 2
        ctx = branch_at(pot, loop[0])
        final = continue_branch(ctx, loop).final_value
        assert final == pytest.approx(ctx.base_value * (-1) ** parity, rel=1e-9)
        flips += parity
    # the sample exercises both outcomes
    assert 0 < flips < 300


PARTNER_GRID = [
    (complex(x, y), theta)
    for x in (-2.0, -0.7, 0.0, 0.9, 2.2)
    for y in (-1.8, -0.6, 0.6, 1.8)
    for theta in (0.0, 0.3, np.pi / 4, 1.1, 1.5)
]


@pytest.mark.parametrize('a, theta', PARTNER_GRID)
def test_partner_relations_on_a_grid(a, theta):
    pot = Potential(a, theta)
    h = h_integral(pot, -1.0, 1.0).value

    def same_up_to_sign(x, y):
        return min(abs(x - y), abs(x + y)) < 1e-8 * abs(y)

    # z -> -z and z -> -conj(z) both exchange -1 and +1
    assert same_up_to_sign(h_integral(symmetric_partner(pot), 1.0, -1.0).value, h)
    assert same_up_to_sign(h_integral(reflected_partner(pot), 1.0, -1.0).value, np.conj(h))
    assert same_up_to_sign(h_integral(rotated_partner(pot), -1.0, 1.0).value, 1j * h)


def test_h_integral_matches_dense_trapezoid_on_random_segments():
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 30:
        pot = random_potential(rng)
        z0, z1 = (complex(*rng.uniform(-3.0, 3.0, 2)) for _ in range(2))
        if abs(z1 - z0) < 0.5 or min(segment_distance(z0, z1, r) for r in pot.roots) < 0.3:
            continue
        t = np.linspace(0.0, 1.0, 200001)
        values = principal_sqrt_p(pot, z0 + t * (z1 - z0))
        # follow one sheet: flip wherever the principal product jumps
        jumps = np.abs(values[1:] - values[:-1]) > np.abs(values[1:] + values[:-1])
        signs = np.concatenate([[1.0], np.where(np.cumsum(jumps) % 2 == 1, -1.0, 1.0)])
        dense = pot.rotation * (z1 - z0) * trapezoid(signs * values, t)
        assert h_integral(pot, z0, z1).value == pytest.approx(dense, rel=1e-7, abs=1e-9)
        checked += 1
