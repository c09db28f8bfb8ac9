import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipfill import heis, meshes
from lipfill import treefactor as tf
from lipfill.suites import tree_factor


def path_mesh(n=30, seed=0):
    t = np.sort(np.random.default_rng(seed).random(n))
    V = np.column_stack([t, np.zeros(n), np.zeros(n)])
    E = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    return meshes.SphereMesh(V, E, "path"), t


@pytest.fixture(scope="module")
def height():
    return tree_factor(meshes.latitude_sphere(12, 24), "height", tau=0.0)


@pytest.fixture(scope="module")
def tripod():
    return tree_factor(meshes.tripod_sphere(1500), "tripod", tau=0.0)


def test_constant_map():
    m = meshes.fibonacci_sphere(200)
    dm = tf.build_domain_mesh(m, lambda P: np.zeros((len(P), 3)), heis.koranyi_dist)
    pm = tf.pullback_metric(dm)
    assert np.all(pm.dense() == 0)
    assert tf.quotient(pm, 0.0).size == 1


def test_isometric_curve_on_path_graph():
    m, t = path_mesh()
    dm = tf.build_domain_mesh(m, lambda P: heis.segment_lift(P[:, :1], 0 * P[:, :1]), heis.koranyi_dist)
    D = tf.pullback_metric(dm).dense()
    assert np.allclose(D, np.abs(t[:, None] - t[None]), atol=1e-9)


def test_disconnected():
    V = np.eye(3)
    with pytest.raises(tf.Disconnected):
        tf.build_domain_mesh(meshes.SphereMesh(V, [[0, 1]]), lambda P: P, tf.circle_arc_dist)


def test_pullback_below_path_sums(tripod):
    dm, Z, _ = tripod
    pm = tf.pullback_metric(dm)
    key = {(int(a), int(b)): w for (a, b), w in zip(dm.mesh.edges, dm.image_lengths)}
    for lp in tf.mesh_loops(dm, 100, steps=10, seed=3):
        a, b = lp[0], lp[len(lp) // 2]
        path = lp[: len(lp) // 2 + 1]
        s = sum(key[(min(x, y), max(x, y))] for x, y in zip(path[:-1].tolist(), path[1:].tolist()))
        assert pm(a, b) <= s + 1e-12


def test_height_quotient_is_interval(height):
    dm, Z, fp = height
    assert Z.size == 14  # two poles and twelve rings
    h = meshes.height(dm.mesh.vertices[Z.reps])
    assert np.allclose(Z.D, np.abs(h[:, None] - h[None]), atol=1e-12)
    assert fp.exact and fp.lip_phi <= 1.05 and fp.lip_psi <= fp.C * fp.lip_f * 1.1


def test_dense_and_component_quotients_agree(height):
    dm, Z, _ = height
    Zd = tf.quotient(tf.pullback_metric(dm).dense(), 0.0)
    assert Zd.size == Z.size
    assert np.allclose(np.sort(Zd.D, axis=None), np.sort(Z.D, axis=None))


def test_ambiguous_threshold(height):
    dm, _, _ = height
    pm = tf.pullback_metric(dm)
    gap = pm.Dc[pm.Dc > 0].min()
    with pytest.raises(tf.AmbiguousThreshold):
        tf.quotient(pm, 0.6 * gap)
    assert tf.quotient(pm, 0.4 * gap).size == Z_size(pm)
    with pytest.raises(ValueError):
        tf.quotient(pm, -1.0)


def Z_size(pm):
    return len(np.unique(pm.labels))


def test_tripod_pipeline(tripod):
    dm, Z, fp = tripod
    cert = tf.certify_tree(Z)
    assert cert.passes(1e-3) and cert.tripod_residual < 1e-9
    T = meshes.Tripod()
    leg, s = T.legs(dm.mesh.vertices[Z.reps])
    assert np.allclose(Z.D, T.tree_distance((leg[:, None], s[:, None]), (leg[None], s[None])), atol=1e-12)
    assert fp.lip_phi <= 1.05 and fp.lip_psi <= fp.C * fp.lip_f * 1.1
    loops = tf.mesh_loops(dm, 100, seed=1)
    assert tf.path_length_check(dm, Z, loops) <= 1e-12
    rows = tf.loop_area_test(Z, loops, seed=2)
    assert len(rows) == 100 and all(ok for _, _, ok in rows)


def test_generic_mesh_inflates_tripod():
    # without level-set rings the discrete d_f does not collapse level circles
    _, Z, _ = tree_factor(meshes.fibonacci_sphere(600), "tripod", tau=0.0)
    assert not tf.certify_tree(Z).passes(1e-3)


def test_projection_is_not_a_tree():
    _, Z, _ = tree_factor(meshes.fibonacci_sphere(400), "projection", tau=0.0)
    assert not tf.certify_tree(Z).passes(1e-3)


def test_four_point_oracles():
    star = np.array([[0, 2, 2, 2], [2, 0, 2, 2], [2, 2, 0, 2], [2, 2, 2, 0]], dtype=float)
    assert tf.four_point_defect(star)[0] == 0.0
    cycle = np.array([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]], dtype=float)
    delta, wit, count, ex = tf.four_point_defect(cycle)
    assert delta == 1.0 and ex and count == 1


def test_signed_area():
    t = np.linspace(0, 2 * np.pi, 10001)
    c = np.column_stack([np.cos(t), np.sin(t)])
    c[-1] = c[0]
    assert tf.signed_area(c) == pytest.approx(np.pi, abs=1e-6)
    assert tf.signed_area(c[::-1]) == pytest.approx(-np.pi, abs=1e-6)
    assert tf.signed_area(np.zeros((5, 2))) == 0.0
    flat = np.column_stack([np.ones(50), np.sin(np.linspace(0, 2 * np.pi, 50))])
    flat[-1] = flat[0]
    assert abs(tf.signed_area(flat)) <= 1e-15
    with pytest.raises(tf.OpenCurve):
        tf.signed_area(c[:-5])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_tree_interpolation_area_vanishes_on_star(seed):
    rng = np.random.default_rng(seed)
    legs = rng.integers(0, 3, 12)
    pos = rng.random(12)
    D = np.where(legs[:, None] == legs[None], np.abs(pos[:, None] - pos[None]), pos[:, None] + pos[None])
    seq = np.append(rng.permutation(12)[:6], 0)
    seq[-1] = seq[0]
    curve = tf.tree_interpolate(D, seq, rng.integers(0, 12, 2))
    assert abs(tf.signed_area(curve)) <= 1e-12


def test_circle_identity_chart_flagged():
    t = np.linspace(0, 2 * np.pi, 4001)
    area = tf.chart_area(lambda s: np.column_stack([np.cos(s), np.sin(s)]), t)
    assert area == pytest.approx(np.pi, abs=1e-5)


def test_witness_pair():
    t = np.linspace(0, 2 * np.pi, 4001)
    eps = 0.005
    w = tf.witness_pair(tf.circle_arc_dist, t, t, 0.0, np.pi / 2, 0.8 * eps, eps, 1.0)
    assert w.area > 0 and w.area >= w.lower_bound - 1e-6
    arc = t[t <= np.pi / 2]
    assert np.all(w.pi1(arc) == 1.0)
    far = t[(t > np.pi / 2 + 0.8 * eps) & (t < 2 * np.pi - 0.8 * eps)]
    assert np.all(w.pi1(far) == 0.0)
    with pytest.raises(tf.NoValidDelta) as exc:
        tf.witness_pair(tf.circle_arc_dist, t, t, 0.0, np.pi / 2, 2 * eps, eps, 1.0)
    assert exc.value.sample is not None
    with pytest.raises(ValueError):
        tf.witness_pair(tf.circle_arc_dist, t, t, 0.0, np.pi / 2, 0.001, 1.0, 1.0)


def test_prune_oracles(height, tripod):
    _, Z, _ = height
    P = tf.prune_project(Z, np.arange(Z.size))
    assert np.array_equal(P.projection, np.arange(Z.size)) and P.max_displacement == 0
    ends = [int(np.argmin(Z.D[0])), int(np.argmax(Z.D[0]))]
    P = tf.prune_project(Z, ends)
    assert len(P.nodes) == Z.size and P.max_displacement == 0.0
    assert len(P.edges) == Z.size - 1

    dm, Zt, _ = tripod
    T = meshes.Tripod()
    leg, s = T.legs(dm.mesh.vertices[Zt.reps])
    tips = [int(np.flatnonzero(leg == i)[np.argmax(s[leg == i])]) for i in (0, 1)]
    P = tf.prune_project(Zt, tips)
    third = leg == 2
    assert np.all(~np.isin(np.flatnonzero(third & (s > 0)), P.nodes))
    assert np.allclose(P.displacement[third], s[third], atol=1e-12)
    assert P.max_displacement <= T.radius + 1e-12


def test_prune_needs_certificate():
    _, Z, _ = tree_factor(meshes.fibonacci_sphere(300), "projection", tau=0.0)
    with pytest.raises(tf.NotCertified):
        tf.prune_project(Z, [0, 1])


def test_mesh_text_roundtrip(tmp_path):
    m = meshes.tripod_sphere(300)
    back = meshes.SphereMesh.from_text(m.to_text())
    assert np.array_equal(back.vertices, m.vertices) and np.array_equal(back.edges, m.edges)
    with pytest.raises(meshes.MeshFormatError):
        meshes.SphereMesh.from_text("nope\n")
    bad = m.to_text().replace(f"vertices {m.V}", f"vertices {m.V + 1}")
    with pytest.raises(meshes.MeshFormatError):
        meshes.SphereMesh.from_text(bad)


def test_custom_map(tmp_path):
    m = meshes.latitude_sphere(6, 12)
    f = tmp_path / "vals.txt"
    np.savetxt(f, meshes.height_map(m.vertices))
    dm, Z, fp = tree_factor(m, f"custom:{f}", tau=0.0)
    assert Z.size == 8 and fp.exact
    np.savetxt(f, np.zeros((3, 3)))
    with pytest.raises(meshes.MeshFormatError):
        tree_factor(m, f"custom:{f}")


def test_latitude_mesh_is_triangulated():
    m = meshes.latitude_sphere(9, 14)
    assert len(m.edges) == 3 * m.V - 6
