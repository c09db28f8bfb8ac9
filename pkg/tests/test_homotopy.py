from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipfill import _accel
from lipfill import homotopy as hp
from lipfill.complexes import GridSkeleton


@pytest.mark.parametrize("m", range(-3, 4))
def test_circle_winding(m):
    f = hp.circle_loop(1000, degree=m)
    assert hp.winding_number(f, np.zeros(2)) == m
    assert hp.winding_number(f, np.array([2.0, 0.3])) == 0


def test_constant_and_too_close():
    f = hp.loop(np.tile([0.5, 0.5], (8, 1)))
    assert hp.winding_number(f, np.zeros(2)) == 0
    with pytest.raises(hp.ImageTooClose):
        hp.winding_number(hp.circle_loop(64), np.array([1.0, 0.0]))


@pytest.mark.parametrize("eps", [Fraction(1, 3), Fraction(1, 5), Fraction(1, 10)])
def test_iota_all_ones(eps):
    g = GridSkeleton(1, eps)
    assert np.all(hp.decompose_in_basis(hp.iota(g), g) == 1)


def test_iota_sphere_and_single_cell():
    g = GridSkeleton(2, Fraction(1, 2))
    assert np.all(hp.decompose_in_basis(hp.iota(g), g) == 1)
    g1 = GridSkeleton(1, Fraction(1, 3))
    v = hp.decompose_in_basis(hp.iota(g1, cell=4), g1)
    assert np.array_equal(v, np.eye(9, dtype=int)[4])


def test_off_skeleton():
    g = GridSkeleton(1, Fraction(1, 2))
    with pytest.raises(hp.OffSkeleton):
        hp.decompose_in_basis(hp.circle_loop(64, radius=0.3, center=(0.5, 0.5)), g)


@pytest.mark.parametrize("d", [0, 1, 2, -1])
def test_obstruction_vanishes(d):
    g = GridSkeleton(1, Fraction(1, 3))
    assert np.all(hp.obstruction_vector(hp.circle_loop(256, degree=d), g) == 0)


def test_sphere_degree_and_suspension():
    assert hp.degree(hp.uv_sphere(24, 12)) == 1
    s0 = hp.suspend((-1.0, 1.0))
    assert s0.n == 1 and hp.degree(s0) == 1
    s2 = hp.suspend(hp.circle_loop(64, degree=2))
    assert s2.n == 2 and hp.degree(s2) == 2
    const = hp.suspend(hp.loop(np.tile([1.0, 0.0], (16, 1))))
    assert hp.degree(const) == 0


@pytest.mark.parametrize("d,m", [(1, 2), (2, 2), (-1, 3)])
def test_splitting(d, m):
    ok, lhs, rhs = hp.check_splitting(hp.circle_loop(256, degree=d), m)
    assert ok and np.all(lhs == d) and np.all(rhs == d)


def test_splitting_constant_and_suspension():
    assert hp.check_splitting(hp.loop(np.tile([1.0, 0.0], (8, 1))), 2)[0]
    assert hp.check_splitting(hp.suspend((-1.0, 1.0)), 2)[0]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_winding_kernels_agree(seed):
    rng = np.random.default_rng(seed)
    vals = np.cumsum(rng.normal(size=(40, 2)), axis=0)
    pts = rng.normal(size=(30, 2)) * 3
    a = hp.loop_winding(vals, pts, use_numba=True)
    b = hp.loop_winding(vals, pts, use_numba=False)
    assert np.allclose(a, b, atol=1e-9)


def test_solid_angle_kernels_agree():
    f = hp.uv_sphere(16, 8)
    u = np.random.default_rng(0).normal(size=(60, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = np.r_[np.full(30, 0.5), np.full(30, 1.5)]
    pts = u * r[:, None]
    a = hp.solid_angle_winding(f.values, f.triangles, pts, use_numba=True)
    b = hp.solid_angle_winding(f.values, f.triangles, pts, use_numba=False)
    assert np.allclose(a, b, atol=1e-9)
    assert np.allclose(a, r < 1, atol=1e-9)


def test_backend_flag():
    assert _accel.backend() in ("numba", "numpy")
