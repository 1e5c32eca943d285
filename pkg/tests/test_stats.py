import math

import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from tvrsim.stats import NoRootError, bisect, norm_cdf, q_function


def test_q_function_reference_points():
    assert q_function(0.0) == pytest.approx(0.5)
    assert q_function(3.0) == pytest.approx(0.0013499, abs=1e-7)
    assert q_function(-3.0) == pytest.approx(0.9986501, abs=1e-7)


@given(st.floats(-30, 30))
def test_q_matches_scipy_survival(x):
    assert q_function(x) == pytest.approx(norm.sf(x), rel=1e-9, abs=1e-300)
    assert norm_cdf(x) + q_function(x) == pytest.approx(1.0)


def test_bisect_finds_sqrt2():
    root = bisect(lambda x: x * x - 2, 0, 2, xtol=1e-14)
    assert root == pytest.approx(math.sqrt(2), abs=1e-12)


def test_bisect_accepts_reversed_sign():
    assert bisect(lambda x: 1 - x, 0, 3) == pytest.approx(1.0)


def test_bisect_without_sign_change_raises():
    with pytest.raises(NoRootError) as info:
        bisect(lambda x: x * x + 1, -1, 1)
    assert info.value.f_lo > 0 and info.value.f_hi > 0
