from fractions import Fraction

import numpy as np
import pytest

from lipfill import kaufman as kf
from lipfill.complexes import square_wrap


@pytest.fixture(scope="module")
def F():
    return kf.build_self_similar(1, 2)


def boundary_points(rng, m, dim=3):
    p = rng.random((m, dim))
    axis = rng.integers(0, dim, m)
    p[np.arange(m), axis] = rng.integers(0, 2, m)
    return p


def test_flagship_parameters(F):
    b = F.base
    assert b.K.eps == Fraction(1, 10) and b.K.N == 100 and b.K.q == 5
    assert b.obstruction == (0,) * 100
    assert b.lip == pytest.approx(165.95, abs=0.01)
    assert b.lip_pieces["route"] == pytest.approx(144.0)


def test_boundary_restriction(F):
    rng = np.random.default_rng(0)
    X = boundary_points(rng, 500)
    assert np.allclose(F.base(X), F.base.beta(X), atol=1e-9)


def test_hole_rim_is_scaled_beta(F):
    rng = np.random.default_rng(1)
    loc = boundary_points(rng, 200)
    for i in (0, 6, 57, 99):
        want = F.base.J.corners[i] + F.eps * F.base.beta(loc)
        assert np.allclose(F.base.on_hole_rim(i, loc), want, atol=1e-9)


def test_image_in_skeleton(F):
    """A point resolved at level l maps into the 1-skeleton of the eps^(l+1) grid."""
    X = np.random.default_rng(2).random((2000, 3))
    for d in (0, 2):
        v, lev = F.evaluate_many(X, d)
        # holes below the truncation depth carry the cap filling, which leaves the skeleton
        ok = lev <= d
        assert ok.mean() > 0.85  # holes fill 10% of the cube
        side = F.eps ** (lev[ok] + 1.0)
        r = v[ok] / side[:, None]
        gap = (np.abs(r - np.round(r)).min(axis=1)) * side
        assert gap.max() <= 1e-9


def test_depth_independent_outside_holes(F):
    rng = np.random.default_rng(3)
    X = rng.random((3000, 3))
    X = X[F.base.K.locate(X) < 0][:500]
    a, _ = F.evaluate_many(X, 0)
    for d in (1, 3, 5):
        assert np.array_equal(F.evaluate_many(X, d)[0], a)


def test_hole_centre_geometric_series(F):
    c = F.base.K.centers[6]  # hole "7"
    for d in range(6):
        a, _, _ = F.evaluate(c, d)
        b, _, _ = F.evaluate(c, d + 1)
        # both lie in one closed cell of side eps^(d+1)
        assert np.linalg.norm(a - b) <= F.base.lip * F.error_bound(d)
        assert np.linalg.norm(a - b) <= F.error_bound(d) * (1 + 1e-9)


def test_kernels_agree(F):
    X = np.vstack([np.random.default_rng(4).random((4000, 3)),
                   kf.deep_points(F, 2, 2000, np.random.default_rng(5))])
    for d in (0, 1, 3):
        a, la = kf.evaluate_kernel(X, d, F.base.params, use_numba=True)
        b, lb = kf.evaluate_kernel(X, d, F.base.params, use_numba=False)
        assert np.allclose(a, b, atol=1e-12) and np.array_equal(la, lb)
    assert np.allclose(kf.h_kernel(X, F.base.params, True), kf.h_kernel(X, F.base.params, False), atol=1e-12)


def test_evaluate_cache_and_errors(F):
    x = np.array([0.31, 0.52, 0.77])
    r1 = F.evaluate(x, 2)
    hits = F.hits
    r2 = F.evaluate(x, 2)
    assert F.hits == hits + 1 and np.array_equal(r1[0], r2[0])
    with pytest.raises(ValueError):
        F.evaluate([2.0, 0.0, 0.0], 1)
    with pytest.raises(ValueError):
        F.evaluate([0.5, 0.5], 1)


def test_map_text_roundtrip(F):
    text = F.to_text()
    assert text.startswith(kf.MAP_SCHEMA)
    G = kf.SelfSimilarMap.from_text(text)
    assert G.to_text() == text
    with pytest.raises(ValueError):
        kf.SelfSimilarMap.from_text("garbage")


def test_beta_family():
    b = kf.BetaSpec(3, 2.0)
    assert kf.BetaSpec.from_text(b.to_text()) == b
    q = np.array([[0.0, 0.0, 0.125]])
    assert np.allclose(b(q), square_wrap(np.array([1.0])))
    with pytest.raises(kf.Unsupported):
        kf.BetaSpec(3, 1.0, "sphere-wrap")


def test_build_errors():
    with pytest.raises(kf.Unsupported):
        kf.build_self_similar(2, 4)
    with pytest.raises(Exception):
        kf.build_self_similar(1, 2, eps=Fraction(1, 9), N=81)


def test_small_instance_suites():
    G = kf.build_self_similar(1, 2, eps=Fraction(1, 12))
    rows = kf.verify_lipschitz(G, depths=(1, 2), pairs=5000)
    assert all(r["pass"] for r in rows)
    assert all(r["pass"] for r in kf.verify_consistency(G, depths=(0, 1), samples=2000))
    assert kf.coverage(G, 1)["fraction"] == 1.0


def test_flagship_suites_light(F):
    assert all(r["pass"] for r in kf.verify_lipschitz(F, depths=(1, 4), pairs=20000))
    assert kf.verify_rank(F, samples=3000)["pass"]
    cov = kf.coverage(F, 2)
    assert cov["hit"] == cov["cells"] == 10**4
