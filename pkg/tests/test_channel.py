import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from builders import scene, van, vehicle
from tvrsim.channel import (
    ChannelParams,
    LinkBudget,
    free_space_path_loss,
    free_space_range,
    knife_edge_loss,
    link_matrix,
    link_pdr,
    obstruction_loss,
    received_power,
    route_pdr,
)
from tvrsim.geometry import SPEED_OF_LIGHT, LinkProfile, ObstacleSample
from tvrsim.routing import Route

F = 5.9e9
LAM = SPEED_OF_LIGHT / F


def itu_j(nu):
    # reference evaluation of the single-edge approximation, kept independent
    if nu <= -0.78:
        return 0.0
    return max(0.0, 6.9 + 20 * math.log10(math.sqrt((nu - 0.1) ** 2 + 1) + nu - 0.1))


def test_free_space_loss_at_100m():
    assert free_space_path_loss(100.0, F) == pytest.approx(87.865, abs=0.005)


def test_free_space_loss_zero_point():
    assert free_space_path_loss(LAM / (4 * math.pi), F) == pytest.approx(0.0, abs=1e-9)


def test_free_space_loss_rejects_non_positive_distance():
    with pytest.raises(ValueError):
        free_space_path_loss(0.0, F)


@given(st.floats(1.0, 1e4))
def test_doubling_distance_adds_6dB(d):
    assert free_space_path_loss(2 * d, F) - free_space_path_loss(d, F) == pytest.approx(20 * math.log10(2))


def test_free_space_range_inverts_the_loss():
    assert free_space_path_loss(free_space_range(112.0, F), F) == pytest.approx(112.0)
    # 10 dBm with 12 dB of antenna gain against -90 dBm sensitivity
    assert free_space_range(112.0, F) == pytest.approx(1609.9, abs=0.5)


def test_knife_edge_on_the_line():
    assert knife_edge_loss(0.0) == pytest.approx(6.0329, abs=1e-4)


def test_knife_edge_below_cutoff():
    assert knife_edge_loss(-1.0) == 0.0


def test_knife_edge_at_nu_2_4():
    # the closed form gives 20.54 dB here
    assert knife_edge_loss(2.4) == pytest.approx(20.539, abs=1e-3)


@given(st.floats(-5, 50))
def test_knife_edge_matches_reference_and_is_non_negative(nu):
    assert knife_edge_loss(nu) == pytest.approx(itu_j(nu), abs=1e-9)
    assert knife_edge_loss(nu) >= 0


def test_knife_edge_monotone_above_cutoff():
    nu = np.linspace(-0.77, 10, 500)
    assert np.all(np.diff(knife_edge_loss(nu)) > 0)


def _profile(length, tx_z, rx_z, edges):
    obstacles = tuple(
        ObstacleSample(vehicle_id=k, d1=d, clearance=z - (tx_z + (rx_z - tx_z) * d / length), height=z)
        for k, (d, z) in enumerate(edges)
    )
    return LinkProfile((0.0, 0.0, tx_z), (length, 0.0, rx_z), math.hypot(length, rx_z - tx_z), obstacles)


def test_empty_profile_has_no_obstruction_loss():
    assert obstruction_loss(_profile(100, 1.5, 1.5, []), LAM) == 0.0


def test_single_edge_on_the_line():
    assert obstruction_loss(_profile(100, 1.5, 1.5, [(50, 1.5)]), LAM) == pytest.approx(6.0329, abs=1e-4)


def test_single_edge_nu_by_hand():
    # 1 m above the line a quarter of the way along a 200 m link
    h, d1, d2 = 1.0, 50.0, 150.0
    nu = h * math.sqrt(2 * (d1 + d2) / (LAM * d1 * d2))
    got = obstruction_loss(_profile(200, 1.5, 1.5, [(d1, 2.5)]), LAM)
    assert got == pytest.approx(itu_j(nu))


def test_two_symmetric_edges():
    # edges 2 m above equal antennas at 100 m and 200 m of a 300 m link;
    # each is judged against the line to the other edge: h = 1 m over 100 + 100 m
    h = 1.0
    nu = h * math.sqrt(2 * 200 / (LAM * 100 * 100))
    got = obstruction_loss(_profile(300, 1.5, 1.5, [(100, 3.5), (200, 3.5)]), LAM)
    assert got == pytest.approx(2 * itu_j(nu))


def test_three_edges_by_hand():
    edges = [(40.0, 3.0), (90.0, 3.4), (160.0, 2.0)]
    ends = [(0.0, 1.5), *edges, (200.0, 1.6)]
    want = 0.0
    for k in range(1, 4):
        (pd, pz), (d, z), (nd, nz) = ends[k - 1], ends[k], ends[k + 1]
        da, db = d - pd, nd - d
        h = z - (pz + (nz - pz) * da / (da + db))
        want += itu_j(h * math.sqrt(2 * (da + db) / (LAM * da * db)))
    assert obstruction_loss(_profile(200, 1.5, 1.6, edges), LAM) == pytest.approx(want)


def test_received_power_100m_los():
    a, b = vehicle(1, 0), vehicle(2, 100)
    budget = received_power(a, b, scene(a, b), ChannelParams())
    assert budget.los and budget.n_obstacles == 0
    assert budget.received_power == pytest.approx(-65.865, abs=0.005)


def test_received_power_with_grazing_edge():
    a, b, c = vehicle(1, 0), vehicle(2, 50), vehicle(3, 100)
    budget = received_power(a, c, scene(a, b, c), ChannelParams())
    assert not budget.los
    assert budget.received_power == pytest.approx(-71.898, abs=0.005)


def test_received_power_deterministic_without_rng():
    a, b, c = vehicle(1, 0), van(2, 50), vehicle(3, 100)
    s = scene(a, b, c)
    p = ChannelParams(shadowing_sigma=4.0)
    assert received_power(a, c, s, p) == received_power(a, c, s, p)


def test_shadowing_draw_is_seeded():
    a, b = vehicle(1, 0), vehicle(2, 100)
    s = scene(a, b)
    p = ChannelParams(shadowing_sigma=4.0)
    one = received_power(a, b, s, p, rng=np.random.default_rng(5)).received_power
    two = received_power(a, b, s, p, rng=np.random.default_rng(5)).received_power
    assert one == two != received_power(a, b, s, p).received_power


@given(st.floats(-20, 30), st.floats(0.1, 20))
def test_power_shift_moves_received_power_one_for_one(p0, delta):
    a, b, c = vehicle(1, 0), van(2, 60), vehicle(3, 150)
    s = scene(a, b, c)
    low = received_power(a, c, s, ChannelParams(tx_power=p0)).received_power
    high = received_power(a, c, s, ChannelParams(tx_power=p0 + delta)).received_power
    assert high - low == pytest.approx(delta)


def test_received_power_falls_with_distance_on_open_road():
    xs = [10, 50, 100, 400, 1200]
    powers = []
    for x in xs:
        a, b = vehicle(1, 0), vehicle(2, x, y=5.25)
        powers.append(received_power(a, b, scene(a, b), ChannelParams()).received_power)
    assert all(np.diff(powers) < 0)


def _budget(power):
    return LinkBudget(100.0, 80.0, 0.0, power, True)


def test_pdr_step_without_shadowing():
    p = ChannelParams()
    assert link_pdr(_budget(-90.0), p) == 1.0
    assert link_pdr(_budget(-90.01), p) == 0.0


def test_pdr_with_shadowing():
    p = ChannelParams(shadowing_sigma=3.0)
    assert link_pdr(_budget(-90.0), p) == pytest.approx(0.5)
    assert link_pdr(_budget(-81.0), p) == pytest.approx(0.998650, abs=1e-6)


def test_pdr_array_agrees_with_scalar():
    p = ChannelParams(shadowing_sigma=3.0)
    powers = np.linspace(-100, -80, 11)
    assert link_pdr(powers, p) == pytest.approx([link_pdr(float(x), p) for x in powers])


@given(st.floats(-130, -50), st.floats(0, 10))
def test_pdr_monotone_in_power(power, step):
    p = ChannelParams(shadowing_sigma=3.0)
    assert link_pdr(power + step, p) >= link_pdr(power, p)


def test_route_pdr_products():
    assert route_pdr([0.8], ChannelParams()) == pytest.approx(0.8)
    assert route_pdr([0.9, 0.9], ChannelParams()) == pytest.approx(0.81)
    assert route_pdr([0.9, 0.0, 1.0], ChannelParams()) == 0.0


def test_route_pdr_over_budgets():
    p = ChannelParams(shadowing_sigma=3.0)
    route = Route(1, 3, (1, 2, 3), (_budget(-90.0), _budget(-90.0)), "farthest")
    assert route_pdr(route, p) == pytest.approx(0.25)


def test_link_matrix_matches_single_link_budgets():
    vs = [vehicle(1, 0), van(2, 60), vehicle(3, 150), vehicle(4, 151, y=5.25), van(5, 400, y=8.75)]
    s = scene(*vs)
    params = ChannelParams()
    lm = link_matrix(s, params)
    for i in range(len(vs)):
        for j in range(len(vs)):
            if i == j:
                continue
            want = received_power(vs[i], vs[j], s, params)
            got = lm.budget(i, j, params)
            assert got.received_power == pytest.approx(want.received_power)
            assert got.n_obstacles == want.n_obstacles


def test_link_matrix_leaves_far_pairs_unevaluated():
    s = scene(vehicle(1, 0), vehicle(2, 10_000))
    lm = link_matrix(s, ChannelParams())
    assert not lm.evaluated[0, 1]
    assert lm.received_power(ChannelParams())[0, 1] == -np.inf
    with pytest.raises(KeyError):
        lm.budget(0, 1, ChannelParams())
