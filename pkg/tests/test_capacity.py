import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bc_grid_support, dms_grid_support, grid_pp, grid_secrecy, weight_sweep, xphi
from poissonbc.capacity import (
    OrderingWarning,
    bc_rates,
    bc_region,
    dms_corner,
    dms_rates,
    dms_region,
    point_gain,
    pp_capacity,
    wiretap_capacity,
)
from poissonbc.channel import ChannelParams
from poissonbc.optim import maximize_1d, pareto_front, upper_right_hull

BASE = ChannelParams(1.0, 0.1, 0.5, 0.2)
# frozen from the 10^6-point grid oracle
PP_Y = 0.25055632696898145
PP_Z = 0.07426732103893202
PP_UNIT_DARK = 0.08522340356584934
SECRECY = 0.1768418273875536

channel_params = st.builds(
    ChannelParams, st.floats(0, 4), st.floats(0, 4), st.floats(0, 4), st.floats(0, 4)
)


@pytest.fixture(scope="module")
def bc():
    return bc_region(BASE)


@pytest.fixture(scope="module")
def dms():
    return dms_region(BASE, resolution=20)


class TestPointToPoint:
    def test_dark_free_unit_gain(self):
        value, kappa = pp_capacity(ChannelParams(1.0, 0.0, 1.0, 0.0), "y")
        assert value == pytest.approx(1 / math.e, abs=1e-12)
        assert kappa == pytest.approx(1 / math.e, abs=1e-6)

    def test_zero_gain(self):
        assert pp_capacity(ChannelParams(0.0, 3.0, 0.0, 0.5), "z")[0] == 0.0

    @pytest.mark.parametrize(
        "a, lam, receiver, expected",
        [(1.0, 1.0, "y", PP_UNIT_DARK), (1.0, 0.1, "y", PP_Y), (0.5, 0.2, "z", PP_Z)],
    )
    def test_against_grid(self, a, lam, receiver, expected):
        params = ChannelParams(a, lam, a, lam)
        assert pp_capacity(params, receiver)[0] == pytest.approx(expected, abs=1e-9)

    def test_oracle_values_are_current(self):
        assert grid_pp(1.0, 1.0)[0] == pytest.approx(PP_UNIT_DARK, abs=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.01, 5), st.floats(0, 5))
    def test_never_below_grid(self, a, lam):
        params = ChannelParams(a, lam, a, lam)
        value, kappa = pp_capacity(params, "y")
        k = np.linspace(0, 1, 2001)
        grid = k * xphi(a, lam, 1.0) + (1 - k) * xphi(a, lam, 0.0) - xphi(a, lam, k)
        assert value >= grid.max() - 1e-12
        assert point_gain(params, "y", kappa) == pytest.approx(value, abs=1e-12)


class TestWiretap:
    def test_identical_channels_exactly_zero(self):
        value, _ = wiretap_capacity(ChannelParams(0.7, 0.2, 0.7, 0.2))
        assert value == 0.0

    def test_silent_eavesdropper_is_point_to_point(self):
        params = ChannelParams(1.0, 0.0, 0.0, 1.0)
        assert wiretap_capacity(params)[0] == pytest.approx(grid_pp(1.0, 0.0)[0], abs=1e-9)
        assert wiretap_capacity(params) == pp_capacity(params, "y")

    def test_silent_legitimate_receiver(self):
        with pytest.warns(OrderingWarning):
            assert wiretap_capacity(ChannelParams(0.0, 1.3, 0.5, 0.2)) == (0.0, 0.0)

    def test_reference_against_grid(self):
        assert wiretap_capacity(BASE)[0] == pytest.approx(SECRECY, abs=1e-8)

    def test_warns_when_not_more_capable(self):
        with pytest.warns(OrderingWarning):
            wiretap_capacity(BASE.swapped())

    @settings(max_examples=80, deadline=None)
    @given(channel_params)
    def test_below_point_to_point(self, params):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OrderingWarning)
            assert wiretap_capacity(params)[0] <= pp_capacity(params, "y")[0]


class TestBroadcastRates:
    @pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
    def test_equal_means_kill_the_cloud_rate(self, p):
        c_y, c_z = bc_rates(BASE, [0.3, p, p])
        assert c_z == pytest.approx(0.0, abs=1e-15)
        assert c_y == pytest.approx(point_gain(BASE, "y", p), abs=1e-15)

    def test_matches_oracle_formula(self):
        theta = np.array([0.25, 0.9, 0.1])
        a, p, q = theta
        gy = lambda k: k * xphi(1.0, 0.1, 1.0) + (1 - k) * xphi(1.0, 0.1, 0.0) - xphi(1.0, 0.1, k)
        cz = a * xphi(0.5, 0.2, p) + (1 - a) * xphi(0.5, 0.2, q) - xphi(0.5, 0.2, a * p + (1 - a) * q)
        np.testing.assert_allclose(bc_rates(BASE, theta), [a * gy(p) + (1 - a) * gy(q), cz], rtol=1e-13)


class TestBroadcastRegion:
    def test_intercepts_equal_point_to_point(self, bc):
        r_y, r_z = bc.intercepts()
        assert r_y == pytest.approx(PP_Y, abs=1e-6)
        assert r_z == pytest.approx(PP_Z, abs=1e-6)

    def test_not_below_same_resolution_grid(self, bc):
        oracle, _ = bc_grid_support(1.0, 0.1, 0.5, 0.2, resolution=100, weights=bc.weights())
        assert np.all(bc.support_values >= oracle - 1e-12)

    def test_points_reproduce_from_parameters(self, bc):
        for pt in bc.points:
            c_y, c_z = bc_rates(BASE, [pt.parameters[k] for k in ("alpha", "p", "q")])
            assert (pt.r_y, pt.r_other) == pytest.approx((max(c_y, 0), max(c_z, 0)), abs=1e-14)

    def test_hull_is_idempotent(self, bc):
        keep = upper_right_hull(bc.r_y, bc.r_other)
        assert keep == list(range(len(bc.points)))

    def test_dominates_time_sharing(self, bc):
        r_y, r_z = bc.intercepts()
        for lam in np.linspace(0, 1, 21):
            assert bc.contains(lam * r_y, (1 - lam) * r_z, tol=1e-9)

    def test_boundary_ordering(self, bc):
        assert np.all(np.diff(bc.r_y) > 0) and np.all(np.diff(bc.r_other) < 0)


class TestDegradedMessageSets:
    def test_equal_means_collapse(self):
        theta = np.array([0.2, 0.3, 0.5, 0.4, 0.4, 0.4])
        c_z, hat_y, tilde_y = dms_rates(BASE, theta)
        assert c_z == pytest.approx(0, abs=1e-15) and tilde_y == pytest.approx(0, abs=1e-15)
        s, m = dms_corner(BASE, theta)
        assert m == pytest.approx(0, abs=1e-15) and s == pytest.approx(hat_y)

    def test_common_rate_intercept(self, dms):
        assert dms.other == "r_0"
        assert dms.intercepts()[1] == pytest.approx(PP_Z, abs=1e-6)

    def test_sum_rate_bound(self, dms):
        assert np.all(dms.r_y + dms.r_other <= PP_Y + 1e-6)

    def test_against_small_grid_oracle(self, dms):
        oracle = dms_grid_support(1.0, 0.1, 0.5, 0.2, resolution=10, weights=dms.weights())
        # refined optimum can only be at or above a coarser exhaustive grid
        assert np.all(dms.support_values >= oracle - 1e-12)

    def test_hull_is_idempotent(self, dms):
        assert upper_right_hull(dms.r_y, dms.r_other) == list(range(len(dms.points)))


class TestOptimUtilities:
    def test_maximize_concave(self):
        x, fx = maximize_1d(lambda t: -((t - 0.3141) ** 2), 0, 1)
        assert x == pytest.approx(0.3141, abs=1e-7) and fx == pytest.approx(0, abs=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=40))
    def test_pareto_front_brute_force(self, pts):
        r1 = np.array([p[0] for p in pts], float)
        r2 = np.array([p[1] for p in pts], float)
        got = {(r1[i], r2[i]) for i in pareto_front(r1, r2)}
        expected = {
            (a, b)
            for a, b in zip(r1, r2)
            if not any((c >= a and d >= b) and (c, d) != (a, b) for c, d in zip(r1, r2))
        }
        assert got == expected

    def test_weight_sweep_matches(self, bc):
        np.testing.assert_allclose(bc.weights(), weight_sweep(len(bc.angles)), atol=1e-15)
