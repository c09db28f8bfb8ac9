import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipfill import heis
from lipfill.heis import HeisPoint

coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
point = st.tuples(coord, coord, coord).map(np.array)
scale = st.floats(0.05, 20.0)


def sqrt_slack(*pts):
    """Roundoff allowance of a gauge: heights enter through a square root,
    so an O(ulp) height error moves the distance by O(sqrt(ulp * |height|))."""
    m = max(1.0, *(float(np.abs(p).max()) for p in pts))
    return 8 * np.sqrt(np.finfo(float).eps * m * m * m)


def test_group_law_oracles():
    assert np.array_equal(heis.mul(np.array([1.0, 2, 3]), np.array([4.0, 5, 6])), [5, 7, 17])
    assert np.array_equal(heis.mul(np.array([1.0, 0, 0]), np.array([0.0, 1, 0])), [1, 1, 0])
    assert np.array_equal(heis.mul(np.array([0.0, 1, 0]), np.array([1.0, 0, 0])), [1, 1, 1])
    assert np.array_equal(heis.inv(np.array([1.0, 1, 1])), [-1, -1, 0])
    assert np.array_equal(heis.dilate_arr(3.0, np.array([1.0, 2, 5])), [3, 6, 45])


def test_point_api():
    p = HeisPoint([1.0], [2.0], 3.0)
    e = HeisPoint.identity()
    assert heis.group_mul(p, e) == p
    assert heis.group_inv(heis.group_inv(p)) == p
    assert heis.dilate(1.0, p) == p
    assert heis.gauge_dist(e, HeisPoint([0.0], [0.0], 1.0)) == pytest.approx(1.0)
    assert heis.gauge_dist(p, p) == 0.0
    with pytest.raises(heis.DimensionMismatch):
        heis.group_mul(p, HeisPoint([0.0, 0.0], [0.0, 0.0], 0.0))
    with pytest.raises(ValueError):
        heis.dilate(0.0, p)
    with pytest.raises(ValueError):
        HeisPoint([np.nan], [0.0], 0.0)


@settings(max_examples=200, deadline=None)
@given(point, point, point)
def test_associativity(p, q, r):
    lhs = heis.mul(heis.mul(p, q), r)
    rhs = heis.mul(p, heis.mul(q, r))
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * (1 + np.abs(lhs).max()))


@settings(max_examples=200, deadline=None)
@given(point, point, point)
def test_left_invariance(p, q, g):
    for d in (heis.koranyi_dist, heis.path_bound_dist):
        a, b = d(p, q), d(heis.mul(g, p), heis.mul(g, q))
        assert abs(a - b) <= 1e-9 * (1 + a) + sqrt_slack(p, q, g)


@settings(max_examples=200, deadline=None)
@given(point, point, scale)
def test_homogeneity(p, q, r):
    for d in (heis.koranyi_dist, heis.path_bound_dist):
        a = d(heis.dilate_arr(r, p), heis.dilate_arr(r, q))
        assert a == pytest.approx(r * d(p, q), rel=1e-9, abs=r * sqrt_slack(p, q))


@settings(max_examples=100, deadline=None)
@given(point, point, scale, scale)
def test_dilation_homomorphism(p, q, r, s):
    lhs = heis.dilate_arr(r, heis.mul(p, q))
    rhs = heis.mul(heis.dilate_arr(r, p), heis.dilate_arr(r, q))
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)
    assert np.allclose(heis.dilate_arr(r, heis.dilate_arr(s, p)), heis.dilate_arr(r * s, p), rtol=1e-12)


def test_thousand_triples_tight():
    rng = np.random.default_rng(11)
    p, q, r = (heis.random_points(rng, 1000) for _ in range(3))
    assert np.abs(heis.mul(heis.mul(p, q), r) - heis.mul(p, heis.mul(q, r))).max() <= 1e-12
    d = heis.koranyi_dist
    assert np.abs(d(heis.dilate_arr(2.0, p), heis.dilate_arr(2.0, q)) - 2 * d(p, q)).max() <= 1e-12


def test_gauge_bracket_and_sqrt_bound():
    lo, hi = heis.gauge_bracket(samples=5000)
    assert 1.0 <= lo <= hi < 6.0
    K = heis.sqrt_bound_constant(np.random.default_rng(0), 2000)
    assert 0 < K < 10


def test_horizontal_segment_is_exact():
    g = heis.segment_lift(np.array([0.6]), np.array([0.8]))
    assert heis.koranyi_norm(g) == pytest.approx(1.0, abs=1e-15)
    assert heis.path_bound_norm(g) == pytest.approx(1.0, abs=1e-15)


def test_circle_holonomy():
    t = np.linspace(0, 2 * np.pi, 10001)
    c = heis.horizontal_lift(np.column_stack([np.cos(t), np.sin(t)]))
    assert c.points[-1, 2] - c.points[0, 2] == pytest.approx(-np.pi, abs=1e-6)
    assert heis.horizontality_residual(c.points).max() < 1e-12


def test_lift_special_curves():
    const = heis.horizontal_lift(np.tile([0.3, 0.4], (5, 1)), z0=2.0)
    assert np.all(const.points == [0.3, 0.4, 2.0])
    seg = np.column_stack([np.linspace(0, 1, 101), np.zeros(101)])
    c = heis.horizontal_lift(seg, z0=0.5)
    assert np.all(c.points[:, 2] == 0.5)
    assert heis.cc_length(c) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(heis.DimensionMismatch):
        heis.horizontal_lift(np.zeros((4, 3)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), scale)
def test_cc_length_homogeneous(seed, r):
    rng = np.random.default_rng(seed)
    c = heis.horizontal_lift(np.cumsum(rng.normal(size=(50, 2)) * 0.1, axis=0))
    assert heis.cc_length(c.dilate(r)) == pytest.approx(r * heis.cc_length(c), rel=1e-9)


def test_curve_text_roundtrip():
    t = np.linspace(0, 1, 7)
    c = heis.horizontal_lift(np.column_stack([t, t * t]))
    back = heis.HeisCurve.from_text(c.to_text())
    assert np.array_equal(back.points, c.points)
    assert np.array_equal(back.t, c.t)


def test_horizontal_path_endpoints():
    rng = np.random.default_rng(3)
    for p, q in zip(heis.random_points(rng, 20), heis.random_points(rng, 20)):
        P = heis.horizontal_path(p, q)
        assert np.allclose(P.at(0.0), p, atol=1e-12)
        assert np.allclose(P.at(1.0), q, atol=1e-9)
        assert P.length >= heis.koranyi_dist(p, q) - 1e-12
