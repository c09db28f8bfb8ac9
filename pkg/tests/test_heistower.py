from fractions import Fraction

import numpy as np
import pytest

from lipfill import heis
from lipfill import heistower as ht
from lipfill.complexes import ConeComplex


def test_figure_eight_closed_and_horizontal():
    s = np.linspace(0, 4, 4001)
    p = ht.figure_eight(s)
    assert np.allclose(p[0], p[-1], atol=1e-15)
    lifted = heis.horizontal_lift(p[:, :2])
    assert np.abs(lifted.points[:, 2] - p[:, 2]).max() < 1e-5
    assert ht.rim_speed(ht.figure_eight) == pytest.approx(ht.FIGURE_EIGHT_LIP, rel=0.02)


def test_path_points_match_explicit_paths():
    rng = np.random.default_rng(0)
    P, Q = heis.random_points(rng, 30), heis.random_points(rng, 30)
    assert np.allclose(ht.path_points(P, Q, 0.0), P, atol=1e-12)
    assert np.allclose(ht.path_points(P, Q, 1.0), Q, atol=1e-9)
    lam = rng.random(30)
    got = ht.path_points(P, Q, lam)
    for i in range(30):
        want = heis.horizontal_path(P[i], Q[i]).at(lam[i])[0]
        assert np.allclose(got[i], want, atol=1e-9)
    assert np.allclose(ht.path_lengths(P, Q), [heis.horizontal_path(p, q).length for p, q in zip(P, Q)])


@pytest.mark.parametrize("eps", [Fraction(1, 4), Fraction(1, 8)])
def test_cone_extension_invariants(eps):
    cp = ht.root_copy(ht.figure_eight, eps)
    ext, cone = cp.ext, cp.cone
    f = ht.figure_eight(cone.rim_positions)
    assert np.array_equal(ext.values[cone.rim], f)
    R = cone.ring_size
    # the t = 0 ring collapses to the anchor
    assert np.allclose(ext.values[:R], ext.anchor, atol=1e-15)
    ring0 = ext.values[:R]
    assert np.all(heis.koranyi_dist(ring0, np.roll(ring0, 1, axis=0)) == 0)


def test_constant_rim_gives_constant_tower():
    p = (0.2, -0.1, 0.3)
    T = ht.build_heisenberg_tower(ht.constant_rim(p), eps=Fraction(1, 4), depth=2, beam=2, rim_lip=0.0)
    assert all(L == 0.0 for L in T.lip)
    assert np.allclose(T.root.values, p)
    assert np.allclose(T.copy((3, 5)).values, p)


def test_adjacent_constant_stable():
    Cs = [ht.root_copy(ht.figure_eight, Fraction(1, m)).ext.adjacent_constant() for m in (4, 8, 16)]
    assert max(Cs) / min(Cs) <= 1.5


def test_child_rim_is_parent_cell_boundary():
    root = ht.root_copy(ht.figure_eight, Fraction(1, 4))
    fn = root.cell_boundary_fn(7)
    assert np.allclose(fn(np.array([0.0])), fn(np.array([4.0])), atol=1e-12)
    ch = root.child(7)
    assert np.array_equal(ch.values[ch.cone.rim], fn(ch.cone.rim_positions))
    # the four corners of the cell are cone vertices of the parent
    corners = root.cone.cells[7]
    got = fn(np.arange(4.0))
    want = root.values[corners]
    assert np.allclose(np.sort(got, axis=0), np.sort(want, axis=0), atol=1e-9)


def test_small_tower_bounds():
    T = ht.build_heisenberg_tower(eps=Fraction(1, 8), depth=2, beam=3, seed=1)
    rows = ht.tower_rows(T)
    assert [r["level"] for r in rows] == [0, 1, 2]
    assert all(r["pass"] for r in rows)
    assert T.c > 1.0
    with pytest.raises(KeyError):
        T.copy((10**6,))


def test_scale_underflow():
    with pytest.raises(ht.ScaleUnderflow):
        ht.build_heisenberg_tower(eps=Fraction(1, 16), depth=300)


def test_domain_layout():
    assert ht.heis_domain_layout(2.1, Fraction(1, 16)) == (3, 9, pytest.approx(1 / 6))
    assert ConeComplex(1, Fraction(1, 16)).N <= 3**9
    with pytest.raises(ValueError):
        ht.heis_domain_layout(2.1, Fraction(1, 4))


@pytest.fixture(scope="module")
def tower_and_gamma():
    T = ht.build_heisenberg_tower(eps=Fraction(1, 16), depth=1, beam=2, seed=0)
    return T, ht.build_graph_base_map(T)


def test_graph_base_map_values(tower_and_gamma):
    T, G = tower_and_gamma
    y = np.random.default_rng(0).random((3000, G.D))
    y = y[G.locate(y)[0] < 0]
    eid, lam = G(y)
    assert np.all((lam >= 0) & (lam <= 1))
    assert np.all((eid >= 0) & (eid < len(T.root.cone.edges)))
    assert G.lip == max(G.lip_pieces.values())


def test_shellwise_bound(tower_and_gamma):
    T, G = tower_and_gamma
    val, used = ht.shellwise_lipschitz(T, G, (), pairs=3000, seed=1)
    assert used > 2000
    assert val <= 1.1 * T.c * G.lip * T.rim_lip
