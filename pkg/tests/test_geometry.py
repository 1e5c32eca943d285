import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from builders import WAVELENGTH, scene, van, vehicle
from tvrsim.channel import link_matrix, ChannelParams
from tvrsim.geometry import (
    FRESNEL_FRACTION,
    Vehicle,
    VehicleClass,
    fresnel_radius,
    is_los,
    link_profile,
    obstacle_count_matrix,
    per_vehicle_los_ratio,
)
from tvrsim.scenario import RoadConfig, Scenario, generate


# Fresnel radius values below are sqrt(lambda d1 d2 / (d1 + d2)) worked by hand.

def test_fresnel_radius_midpoint_of_100m_link():
    assert fresnel_radius(50, 50, WAVELENGTH) == pytest.approx(1.12694, abs=1e-5)


def test_fresnel_radius_asymmetric_split():
    assert fresnel_radius(100, 300, WAVELENGTH) == pytest.approx(1.95192, abs=1e-5)


@pytest.mark.parametrize("d1,d2", [(0, 10), (10, 0), (-1, 5)])
def test_fresnel_radius_rejects_degenerate_ends(d1, d2):
    with pytest.raises(ValueError):
        fresnel_radius(d1, d2, WAVELENGTH)


@given(st.floats(0.1, 2000), st.floats(0.1, 2000))
def test_fresnel_radius_symmetric_in_its_ends(d1, d2):
    assert fresnel_radius(d1, d2, WAVELENGTH) == pytest.approx(fresnel_radius(d2, d1, WAVELENGTH))


@given(st.floats(1.0, 2000), st.floats(0.01, 0.99))
def test_fresnel_radius_peaks_at_midpoint(length, frac):
    mid = fresnel_radius(length / 2, length / 2, WAVELENGTH)
    assert fresnel_radius(frac * length, (1 - frac) * length, WAVELENGTH) <= mid * (1 + 1e-12)


def test_fresnel_radius_vectorised_matches_scalar():
    d1 = np.array([10.0, 50.0, 100.0])
    got = fresnel_radius(d1, 200 - d1, WAVELENGTH)
    want = [fresnel_radius(float(a), float(200 - a), WAVELENGTH) for a in d1]
    assert got == pytest.approx(want)


def test_vehicle_validates_dimensions():
    with pytest.raises(ValueError, match="height"):
        Vehicle(1, (0.0, 0.0), 4.2, 1.8, -1.0, VehicleClass.SHORT)
    v = Vehicle(1, (0.0, 0.0), 4.2, 1.8, 1.5, VehicleClass.SHORT, heading=(0.0, 2.0))
    assert v.heading == pytest.approx((0.0, 1.0))
    assert v.heading_deg == pytest.approx(90.0)


def test_midway_tall_blocker_between_cars():
    a, b, c = vehicle(1, 0), van(2, 50), vehicle(3, 100)
    profile = link_profile(a, c, scene(a, b, c), WAVELENGTH)
    assert not is_los(profile)
    (obs,) = profile.obstacles
    assert obs.vehicle_id == 2
    assert obs.d1 == pytest.approx(50.0)
    # roof at 3.35 m, straight line at 1.5 m
    assert obs.clearance == pytest.approx(1.85)


def test_blocker_ten_metres_aside_is_ignored():
    # 0.6 of the largest Fresnel radius on a 100 m link is about 0.68 m,
    # while the blocker's near side sits 9.0 m from the line
    a, b, c = vehicle(1, 0), van(2, 50, y=11.75), vehicle(3, 100)
    assert is_los(link_profile(a, c, scene(a, b, c), WAVELENGTH))


def test_low_blocker_inside_the_ellipsoid_counts():
    # 200 m link, 0.6 rF at the middle is 0.957 m; a roof 0.5 m under the
    # line still penetrates the ellipsoid
    a, c = vehicle(1, 0), vehicle(3, 200)
    b = vehicle(2, 100, height=1.0)
    profile = link_profile(a, c, scene(a, b, c), WAVELENGTH)
    assert [o.clearance for o in profile.obstacles] == [pytest.approx(-0.5)]


def test_low_blocker_below_the_ellipsoid_is_ignored():
    a, c = vehicle(1, 0), vehicle(3, 200)
    b = vehicle(2, 100, height=0.4)
    assert is_los(link_profile(a, c, scene(a, b, c), WAVELENGTH))


def test_obstacles_are_sorted_along_the_link():
    vs = [vehicle(1, 0), van(2, 120), van(3, 40), van(4, 80), vehicle(5, 160)]
    profile = link_profile(vs[0], vs[-1], scene(*vs), WAVELENGTH)
    assert [o.vehicle_id for o in profile.obstacles] == [3, 4, 2]


def test_two_vehicle_scenario_is_all_los():
    a, b = vehicle(1, 0), vehicle(2, 300)
    assert per_vehicle_los_ratio(scene(a, b), 750) == {1: 1.0, 2: 1.0}


def test_three_in_a_row_with_tall_middle():
    a, b, c = vehicle(1, 0), van(2, 50), vehicle(3, 100)
    ratios = per_vehicle_los_ratio(scene(a, b, c), 750)
    assert ratios[1] == pytest.approx(0.5)
    assert ratios[3] == pytest.approx(0.5)
    assert ratios[2] == pytest.approx(1.0)


def test_isolated_vehicle_has_no_ratio():
    a, b, far = vehicle(1, 0), vehicle(2, 100), vehicle(3, 5000)
    assert 3 not in per_vehicle_los_ratio(scene(a, b, far), 750)


def test_count_matrix_marks_out_of_range_pairs():
    counts = obstacle_count_matrix(scene(vehicle(1, 0), vehicle(2, 100), vehicle(3, 5000)), WAVELENGTH, 750)
    assert counts[0, 1] == 0 and counts[0, 2] == -1 and counts[2, 2] == -1


# --- properties on generated traffic -------------------------------------------------

SMALL_ROAD = RoadConfig(length=1500.0, density=10.0)


def _pair_strategy(n):
    return st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] != p[1])


@pytest.fixture(scope="module")
def small_road():
    return generate(SMALL_ROAD, seed=11)


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_los_symmetry(small_road, data):
    i, j = data.draw(_pair_strategy(len(small_road)))
    a, b = small_road.vehicles[i], small_road.vehicles[j]
    forward = link_profile(a, b, small_road, WAVELENGTH)
    backward = link_profile(b, a, small_road, WAVELENGTH)
    assert {o.vehicle_id for o in forward.obstacles} == {o.vehicle_id for o in backward.obstacles}
    for o, r in zip(forward.obstacles, reversed(backward.obstacles)):
        assert o.d1 == pytest.approx(forward.ground_distance - r.d1, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_included_obstacles_reach_into_the_ellipsoid(small_road, data):
    i, j = data.draw(_pair_strategy(len(small_road)))
    a, b = small_road.vehicles[i], small_road.vehicles[j]
    profile = link_profile(a, b, small_road, WAVELENGTH)
    g = profile.ground_distance
    for o in profile.obstacles:
        assert 0 < o.d1 < g
        assert o.clearance > -FRESNEL_FRACTION * fresnel_radius(o.d1, g - o.d1, WAVELENGTH)


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_removing_a_vehicle_never_adds_obstacles(small_road, data):
    n = len(small_road)
    i, j = data.draw(_pair_strategy(n))
    drop = data.draw(st.integers(0, n - 1).filter(lambda k: k not in (i, j)))
    a, b = small_road.vehicles[i], small_road.vehicles[j]
    fewer = Scenario(tuple(v for k, v in enumerate(small_road.vehicles) if k != drop))
    full = {o.vehicle_id for o in link_profile(a, b, small_road, WAVELENGTH).obstacles}
    less = {o.vehicle_id for o in link_profile(a, b, fewer, WAVELENGTH).obstacles}
    assert less <= full
    assert full - less <= {small_road.vehicles[drop].id}


def test_bulk_pass_agrees_with_single_link_profiles(small_road):
    params = ChannelParams()
    lm = link_matrix(small_road, params)
    rng = np.random.default_rng(3)
    n = len(small_road)
    checked = 0
    for _ in range(300):
        i, j = rng.choice(n, size=2, replace=False)
        if not lm.evaluated[i, j]:
            continue
        checked += 1
        profile = link_profile(small_road.vehicles[i], small_road.vehicles[j], small_road, params.wavelength)
        assert lm.n_obstacles[i, j] == len(profile.obstacles)
        assert lm.distance[i, j] == pytest.approx(profile.distance)
    assert checked > 100
    assert np.array_equal(lm.n_obstacles, lm.n_obstacles.T)


def test_heading_rotates_the_footprint():
    # a car parked across the road still blocks a link passing over its side
    a, c = vehicle(1, 0), vehicle(3, 100)
    across = Vehicle(2, (50.0, 4.5), 8.0, 1.8, 3.0, VehicleClass.TALL, heading=(0.0, 1.0))
    along = Vehicle(2, (50.0, 4.5), 8.0, 1.8, 3.0, VehicleClass.TALL)
    assert not is_los(link_profile(a, c, scene(a, across, c), WAVELENGTH))
    assert is_los(link_profile(a, c, scene(a, along, c), WAVELENGTH))


def test_ratio_ignores_vehicles_beyond_range():
    vs = [vehicle(1, 0), van(2, 50), vehicle(3, 100), vehicle(4, 840)]
    ratios = per_vehicle_los_ratio(scene(*vs), 750)
    # vehicle 1 sees 2 (LOS) and 3 (blocked); 4 is out of its range and sees only 3
    assert ratios[1] == pytest.approx(0.5)
    assert math.isclose(ratios[4], 1.0)
