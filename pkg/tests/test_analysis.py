import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipfill import analysis as an
from lipfill import heis


def box(dim):
    return lambda rng, m: rng.random((m, dim))


def test_metric_derivative_linear():
    f = an.SampledMap(lambda p: 2 * p, 2, lo=np.zeros(2) - 1, hi=np.ones(2) + 1)
    assert an.metric_derivative(f, [0.2, 0.3], [0.6, 0.8]) == pytest.approx(2.0, abs=1e-9)


def test_metric_derivative_horizontal_curve():
    # unit circle lifted horizontally: z' = y x' = -sin^2 t
    def lift(t):
        t = t[:, 0]
        return np.column_stack([np.cos(t), np.sin(t), -(t - np.sin(t) * np.cos(t)) / 2])

    f = an.SampledMap(lift, 1, heis.koranyi_dist, lo=np.array([-10.0]), hi=np.array([10.0]), euclidean_target=False)
    assert an.metric_derivative(f, [0.7], [1.0]) == pytest.approx(1.0, abs=1e-4)


def test_metric_derivative_vertical_diverges():
    f = an.SampledMap(lambda t: np.column_stack([0 * t[:, 0], 0 * t[:, 0], t[:, 0]]), 1, heis.koranyi_dist,
                      lo=np.array([-1.0]), hi=np.array([1.0]), euclidean_target=False)
    assert an.metric_derivative(f, [0.0], [1.0]) is an.DIVERGENT
    assert not an.DIVERGENT
    with pytest.raises(an.OutOfDomain):
        an.metric_derivative(f, [0.999999], [1.0])


def test_lipschitz_estimate_oracles():
    f = an.SampledMap(lambda p: 3 * p, 2, lo=np.zeros(2), hi=np.ones(2))
    est = an.lipschitz_estimate(f, box(2), 2000, seed=1)
    assert est.value == pytest.approx(3.0, abs=1e-9)
    const = an.SampledMap(lambda p: np.zeros_like(p), 2, lo=np.zeros(2), hi=np.ones(2))
    assert an.lipschitz_estimate(const, box(2), 1000).value == 0.0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0), st.integers(0, 1000))
def test_lipschitz_estimate_is_lower_bound(L, seed):
    f = an.SampledMap(lambda p: L * np.sin(p), 1, lo=np.zeros(1), hi=np.ones(1))
    est = an.lipschitz_estimate(f, box(1), 500, seed=seed)
    assert est.value <= L * (1 + 1e-9)
    a, b = est.argmax
    assert abs(L * np.sin(a[0]) - L * np.sin(b[0])) / abs(a[0] - b[0]) == pytest.approx(est.value)


def test_lipschitz_estimate_deterministic():
    f = an.SampledMap(lambda p: np.sin(5 * p), 2, lo=np.zeros(2), hi=np.ones(2))
    a = an.lipschitz_estimate(f, box(2), 3000, seed=7)
    b = an.lipschitz_estimate(f, box(2), 3000, seed=7)
    assert a.value == b.value and np.array_equal(a.argmax[0], b.argmax[0])


@pytest.mark.parametrize("k", [2, 3, 4])
def test_direction_family_covers(k):
    delta = 0.3
    V = an.direction_family(k, delta)
    assert np.allclose(np.linalg.norm(V, axis=1), 1)
    u = np.random.default_rng(0).normal(size=(3000, k))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    gap = np.min(np.linalg.norm(u[:, None] - V[None], axis=2), axis=1)
    assert gap.max() <= delta


def test_degeneracy_oracles():
    rng = np.random.default_rng(0)
    proj = an.SampledMap(lambda p: p[:, :2], 3, lo=np.zeros(3), hi=np.ones(3))
    X = rng.random((200, 3)) * 0.8 + 0.1
    assert an.degeneracy_fraction(proj, X, 1e-3, step=1e-4, rank=2).fraction == 1.0
    ident = an.SampledMap(lambda p: p.copy(), 2, lo=np.zeros(2), hi=np.ones(2))
    rep = an.degeneracy_fraction(ident, X[:, :2], 1e-3, step=1e-4)
    assert rep.fraction == 0.0 and rep.samples == 200


def test_degeneracy_exclusion_and_metric_mode():
    X = np.random.default_rng(1).random((100, 1)) * 0.5 + 0.25
    f = an.SampledMap(lambda t: heis.segment_lift(t, 0 * t), 1, heis.koranyi_dist, euclidean_target=False)
    V = an.direction_family(1, 0.1)
    rep = an.degeneracy_fraction(f, X, 0.5, step=1e-5, directions=V, exclude=lambda p: p[:, 0] > 0.5)
    assert rep.fraction == 0.0
    assert rep.excluded + rep.samples == 100
    with pytest.raises(ValueError):
        an.degeneracy_fraction(f, X, 0.5)
