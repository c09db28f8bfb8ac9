"""Homotopy-side operators on cellular maps of spheres.

A 1-sphere map is a closed polygon (vertex values in R^2); a 2-sphere map is
an oriented triangulated surface (vertex values in R^3, triangles (m, 3)).
Degrees are winding numbers about points of the complement; ``JGrid``
degree vectors are winding numbers about the cell centres of a grid, which
compute the class of a map into the skeleton in H_n = Z^N.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import USE_NUMBA, njit
from .complexes import GridSkeleton


class ImageTooClose(ValueError):
    """The image of the map passes within the margin of the query point."""


class OffSkeleton(ValueError):
    """The map does not land in the skeleton."""


class DegenerateRay(RuntimeError):
    pass


@dataclass(frozen=True)
class CellularMap:
    n: int
    values: np.ndarray
    triangles: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != self.n + 1:
            raise ValueError(f"values must have shape (V, {self.n + 1})")
        object.__setattr__(self, "values", v)
        if self.n == 2:
            if self.triangles is None:
                raise ValueError("2-sphere maps need triangles")
            object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=np.int64))
        elif self.n != 1:
            raise NotImplementedError("only 1- and 2-sphere maps are supported")

    def with_values(self, values):
        return CellularMap(self.n, values, self.triangles)

    def apply(self, fn):
        return self.with_values(fn(self.values))


def loop(values) -> CellularMap:
    return CellularMap(1, values)


def sphere_map(values, triangles) -> CellularMap:
    return CellularMap(2, values, triangles)


# ---------------------------------------------------------------------------
# kernels


@njit
def _loop_winding_nb(vals, pts):
    out = np.empty(pts.shape[0])
    V = vals.shape[0]
    for p in range(pts.shape[0]):
        tot = 0.0
        for i in range(V):
            j = (i + 1) % V
            ax = vals[i, 0] - pts[p, 0]
            ay = vals[i, 1] - pts[p, 1]
            bx = vals[j, 0] - pts[p, 0]
            by = vals[j, 1] - pts[p, 1]
            tot += math.atan2(ax * by - ay * bx, ax * bx + ay * by)
        out[p] = tot / (2.0 * math.pi)
    return out


def _loop_winding_np(vals, pts, chunk=256):
    out = np.empty(len(pts))
    a = vals
    b = np.roll(vals, -1, axis=0)
    for s in range(0, len(pts), chunk):
        p = pts[s : s + chunk, None, :]
        A = a[None] - p
        B = b[None] - p
        cr = A[..., 0] * B[..., 1] - A[..., 1] * B[..., 0]
        dt = (A * B).sum(-1)
        out[s : s + chunk] = np.arctan2(cr, dt).sum(-1) / (2 * np.pi)
    return out


@njit
def _solid_angle_nb(vals, tris, pts):
    out = np.empty(pts.shape[0])
    for p in range(pts.shape[0]):
        tot = 0.0
        for t in range(tris.shape[0]):
            a0 = vals[tris[t, 0], 0] - pts[p, 0]
            a1 = vals[tris[t, 0], 1] - pts[p, 1]
            a2 = vals[tris[t, 0], 2] - pts[p, 2]
            b0 = vals[tris[t, 1], 0] - pts[p, 0]
            b1 = vals[tris[t, 1], 1] - pts[p, 1]
            b2 = vals[tris[t, 1], 2] - pts[p, 2]
            c0 = vals[tris[t, 2], 0] - pts[p, 0]
            c1 = vals[tris[t, 2], 1] - pts[p, 1]
            c2 = vals[tris[t, 2], 2] - pts[p, 2]
            la = math.sqrt(a0 * a0 + a1 * a1 + a2 * a2)
            lb = math.sqrt(b0 * b0 + b1 * b1 + b2 * b2)
            lc = math.sqrt(c0 * c0 + c1 * c1 + c2 * c2)
            det = a0 * (b1 * c2 - b2 * c1) - a1 * (b0 * c2 - b2 * c0) + a2 * (b0 * c1 - b1 * c0)
            den = (la * lb * lc + (a0 * b0 + a1 * b1 + a2 * b2) * lc
                   + (a0 * c0 + a1 * c1 + a2 * c2) * lb + (b0 * c0 + b1 * c1 + b2 * c2) * la)
            tot += 2.0 * math.atan2(det, den)
        out[p] = tot / (4.0 * math.pi)
    return out


def _solid_angle_np(vals, tris, pts, chunk=64):
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        p = pts[s : s + chunk, None, :]
        A = vals[tris[:, 0]][None] - p
        B = vals[tris[:, 1]][None] - p
        C = vals[tris[:, 2]][None] - p
        la, lb, lc = (np.linalg.norm(X, axis=-1) for X in (A, B, C))
        det = np.einsum("...i,...i", A, np.cross(B, C))
        den = la * lb * lc + (A * B).sum(-1) * lc + (A * C).sum(-1) * lb + (B * C).sum(-1) * la
        out[s : s + chunk] = 2 * np.arctan2(det, den).sum(-1) / (4 * np.pi)
    return out


def loop_winding(vals, pts, use_numba=None):
    use = USE_NUMBA if use_numba is None else use_numba
    vals = np.ascontiguousarray(vals, dtype=float)
    pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=float)
    return _loop_winding_nb(vals, pts) if use else _loop_winding_np(vals, pts)


def solid_angle_winding(vals, tris, pts, use_numba=None):
    use = USE_NUMBA if use_numba is None else use_numba
    vals = np.ascontiguousarray(vals, dtype=float)
    tris = np.ascontiguousarray(tris, dtype=np.int64)
    pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=float)
    return _solid_angle_nb(vals, tris, pts) if use else _solid_angle_np(vals, tris, pts)


# ---------------------------------------------------------------------------
# distances to images


def _segment_dist(a, b, p):
    d = b - a
    L2 = (d * d).sum(-1)
    t = np.clip(((p - a) * d).sum(-1) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
    return np.linalg.norm(a + t[..., None] * d - p, axis=-1)


def _triangle_dist(A, B, C, p):
    n = np.cross(B - A, C - A)
    nn = np.linalg.norm(n, axis=-1)
    safe = np.where(nn > 0, nn, 1.0)
    h = ((p - A) * n).sum(-1) / safe
    proj = p - (h / safe)[..., None] * n
    # barycentric test of the projection
    e0, e1, e2 = np.cross(B - A, proj - A), np.cross(C - B, proj - B), np.cross(A - C, proj - C)
    inside = ((e0 * n).sum(-1) >= 0) & ((e1 * n).sum(-1) >= 0) & ((e2 * n).sum(-1) >= 0) & (nn > 0)
    edge = np.minimum(np.minimum(_segment_dist(A, B, p), _segment_dist(B, C, p)), _segment_dist(C, A, p))
    return np.where(inside, np.abs(h), edge)


def image_distance(f: CellularMap, z):
    z = np.asarray(z, dtype=float)
    v = f.values
    if f.n == 1:
        return float(_segment_dist(v, np.roll(v, -1, axis=0), z).min())
    t = f.triangles
    return float(_triangle_dist(v[t[:, 0]], v[t[:, 1]], v[t[:, 2]], z).min())


# ---------------------------------------------------------------------------
# degrees


def _round_degree(w, tol=1e-6):
    r = np.round(w)
    if np.any(np.abs(w - r) > tol):
        raise ImageTooClose(f"winding sum {w} is not near an integer")
    return r.astype(np.int64)


def _ray_crossings(vals, tris, z, d, tol=1e-10):
    A = vals[tris[:, 0]] - z
    B = vals[tris[:, 1]] - z
    C = vals[tris[:, 2]] - z
    e1, e2 = B - A, C - A
    pv = np.cross(d, e2)
    det = (e1 * pv).sum(-1)
    ok = np.abs(det) > tol
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tv = -A
    u = (tv * pv).sum(-1) * inv
    qv = np.cross(tv, e1)
    v = (d * qv).sum(-1) * inv
    s = (e2 * qv).sum(-1) * inv
    hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (s > 0)
    near = ok & (s > 0) & (
        (np.abs(u) < tol) | (np.abs(v) < tol) | (np.abs(1 - u - v) < tol)
    ) & (u > -tol) & (v > -tol) & (u + v < 1 + tol)
    if near.any():
        raise DegenerateRay
    normal = np.cross(e1, e2)
    sign = np.sign((normal * d).sum(-1))
    return int(sign[hit].sum())


def winding_number(f: CellularMap, z, margin=1e-9, seed=0, retries=16) -> int:
    """Degree of f about z.

    Loops use exact angle summation.  Surfaces use signed crossings of a
    generic ray, redrawn if the ray meets a triangle edge.
    """
    z = np.asarray(z, dtype=float)
    if image_distance(f, z) < margin:
        raise ImageTooClose(f"image of f passes within {margin} of {z.tolist()}")
    if f.n == 1:
        return int(_round_degree(loop_winding(f.values, z[None]))[0])
    rng = np.random.default_rng(seed)
    for _ in range(retries):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        try:
            return _ray_crossings(f.values, f.triangles, z, d)
        except DegenerateRay:
            continue
    raise DegenerateRay("no generic ray found")


def winding_numbers(f: CellularMap, pts, margin=1e-9):
    """Vectorised degrees about many points (angle / solid-angle sums)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if f.n == 1:
        w = loop_winding(f.values, pts)
    else:
        w = solid_angle_winding(f.values, f.triangles, pts)
    return _round_degree(w)


def decompose_in_basis(f: CellularMap, grid: GridSkeleton, margin=None, samples=4):
    """Class of f (which must land in |J|) as an integer vector in Z^N."""
    if f.n != grid.n:
        raise ValueError("sphere dimension does not match the skeleton")
    margin = float(grid.eps) / 100 if margin is None else margin
    v = f.values
    if f.n == 1:
        w = np.linspace(0, 1, samples, endpoint=False)
        b = np.roll(v, -1, axis=0)
        pts = (v[:, None, :] * (1 - w)[None, :, None] + b[:, None, :] * w[None, :, None]).reshape(-1, 2)
    else:
        pts = v
    dist = grid.distance_to_skeleton(pts)
    if dist.max() > margin:
        raise OffSkeleton(f"image leaves |J| by {dist.max():.3g} > margin {margin:.3g}")
    return winding_numbers(f, grid.centers)


# ---------------------------------------------------------------------------
# standard spheres and maps


def circle_loop(samples=256, degree=1, radius=1.0, center=(0.0, 0.0)):
    th = 2 * np.pi * degree * np.arange(samples) / samples
    return loop(np.column_stack([np.cos(th), np.sin(th)]) * radius + np.asarray(center))


def uv_sphere(n_theta=32, n_t=16):
    """Triangulated round 2-sphere, outward oriented, with explicit poles."""
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    t = np.arange(1, n_t) / n_t
    rows = [np.array([[0.0, 0.0, -1.0]])]
    for tt in t:
        r = np.sin(np.pi * tt)
        rows.append(np.column_stack([r * np.cos(th), r * np.sin(th), np.full(n_theta, -np.cos(np.pi * tt))]))
    rows.append(np.array([[0.0, 0.0, 1.0]]))
    vals = np.vstack(rows)
    tris = _uv_triangles(n_theta, n_t)
    return sphere_map(vals, tris)


def _uv_triangles(n_theta, n_t):
    south, north = 0, 1 + (n_t - 1) * n_theta
    ring = lambda r, j: 1 + r * n_theta + (j % n_theta)  # noqa: E731
    tris = []
    for j in range(n_theta):
        tris.append((south, ring(0, j + 1), ring(0, j)))
        tris.append((north, ring(n_t - 2, j), ring(n_t - 2, j + 1)))
    for r in range(n_t - 2):
        for j in range(n_theta):
            a, b, c, d = ring(r, j), ring(r, j + 1), ring(r + 1, j + 1), ring(r + 1, j)
            tris.append((a, b, c))
            tris.append((a, c, d))
    return np.array(tris, dtype=np.int64)


def _orient_outward(vals, tris):
    c = vals.mean(0)
    A, B, C = vals[tris[:, 0]], vals[tris[:, 1]], vals[tris[:, 2]]
    nrm = np.cross(B - A, C - A)
    flip = ((nrm * ((A + B + C) / 3 - c)).sum(-1)) < 0
    tris = tris.copy()
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def box_radial(values, lo, hi):
    """Send directions about the origin to the boundary of a box: u -> c + r u / |u|_inf."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    c = (lo + hi) / 2
    r = (hi - lo) / 2
    d = np.asarray(values, dtype=float)
    s = np.max(np.abs(d), axis=-1, keepdims=True)
    if np.any(s == 0):
        raise ImageTooClose("value at the box centre cannot be projected")
    return c + r * d / s


def _loop_box_corners(values, lo, hi):
    """Radially project a loop onto a rectangle boundary, inserting the corners it sweeps past."""
    c = (lo + hi) / 2
    r = (hi - lo) / 2
    d = np.asarray(values, dtype=float)
    phi = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
    gap = np.angle(np.exp(1j * (phi[0] - phi[-1])))
    phi = np.append(phi, phi[-1] + gap)
    out = []
    for i in range(len(values)):
        a, b = phi[i], phi[i + 1]
        out.append(d[i])
        lo_k, hi_k = sorted((a, b))
        ks = np.arange(np.ceil((lo_k - np.pi / 4) / (np.pi / 2)), np.floor((hi_k - np.pi / 4) / (np.pi / 2)) + 1)
        corners = np.pi / 4 + ks * np.pi / 2
        corners = corners[(corners > lo_k) & (corners < hi_k)]
        if b < a:
            corners = corners[::-1]
        for t in corners:
            out.append(np.array([np.cos(t), np.sin(t)]))
    d = np.array(out)
    s = np.max(np.abs(d), axis=-1, keepdims=True)
    return c + r * d / s


def compose_box(f: CellularMap, lo, hi):
    """Post-compose a map into a sphere about the origin with radial projection to a box boundary.

    Loops get the swept box corners inserted so that the image lies exactly on the boundary.
    """
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    if f.n == 1:
        if np.any(np.all(f.values == 0, axis=-1)):
            raise ImageTooClose("value at the origin cannot be projected")
        return f.with_values(_loop_box_corners(f.values, lo, hi))
    return f.with_values(box_radial(f.values, lo, hi))


def refine_loop(f: CellularMap, factor):
    v = f.values
    b = np.roll(v, -1, axis=0)
    w = np.arange(factor) / factor
    return f.with_values((v[:, None] * (1 - w)[None, :, None] + b[:, None] * w[None, :, None]).reshape(-1, v.shape[1]))


def iota(grid: GridSkeleton, cell=None, samples=64):
    """Inclusion of the boundary of the whole cube (or of one cell) into |J|."""
    d = grid.dim
    if cell is None:
        lo, hi = np.zeros(d), np.ones(d)
    else:
        lo = grid.corners[cell]
        hi = lo + 1.0 / grid.m
    if d == 2:
        base = circle_loop(samples)
    else:
        base = uv_sphere(samples, samples // 2)
    return compose_box(base, lo, hi)


def obstruction_vector(beta: CellularMap, grid: GridSkeleton, margin=None):
    """Degree vector of iota∘beta minus the sum over cells of iota_i∘beta.

    ``beta`` maps a sphere into the unit sphere about the origin.
    """
    total = decompose_in_basis(compose_box(beta, np.zeros(grid.dim), np.ones(grid.dim)), grid, margin)
    parts = np.zeros(grid.N, dtype=np.int64)
    for i in range(grid.N):
        lo = grid.corners[i]
        parts += decompose_in_basis(compose_box(beta, lo, lo + 1.0 / grid.m), grid, margin)
    return total - parts


def suspend(g, samples=64):
    """Suspension Σg.

    ``g`` is either a pair ``(g(-1), g(+1))`` of signs (a map S^0 -> S^0)
    giving a loop, or a loop with values around the origin giving a map
    S^2 -> S^2.
    """
    if isinstance(g, tuple):
        gm, gp = g
        if {gm, gp} - {-1, 1}:
            raise ValueError("S^0 maps take values in {-1, +1}")
        t = np.arange(samples + 1) / samples
        right = np.column_stack([gp * np.sin(np.pi * t), -np.cos(np.pi * t)])
        left = np.column_stack([gm * np.sin(np.pi * t[::-1]), -np.cos(np.pi * t[::-1])])
        vals = np.vstack([right[:-1], left[:-1]])
        # the two meridians are traversed in the domain order x=+1 up, x=-1 down
        return loop(vals)
    if not isinstance(g, CellularMap) or g.n != 1:
        raise TypeError("suspend expects a sign pair or a loop")
    u = g.values / np.linalg.norm(g.values, axis=1, keepdims=True)
    n_theta = len(u)
    n_t = samples // 2
    rows = [np.array([[0.0, 0.0, -1.0]])]
    for j in range(1, n_t):
        tt = j / n_t
        rows.append(np.column_stack([np.sin(np.pi * tt) * u, np.full(n_theta, -np.cos(np.pi * tt))]))
    rows.append(np.array([[0.0, 0.0, 1.0]]))
    return sphere_map(np.vstack(rows), _uv_triangles(n_theta, n_t))


def degree(f: CellularMap) -> int:
    return winding_number(f, np.zeros(f.n + 1))


def strip_grid_centers(m, n):
    """Cell centres of a 1 x ... x m strip of unit cubes (a wedge of m n-spheres up to homotopy)."""
    c = np.full((m, n + 1), 0.5)
    c[:, 0] = np.arange(m) + 0.5
    return c


def check_splitting(beta: CellularMap, m: int):
    """Homology-level test of (sum_j i_j)∘beta = sum_j (i_j∘beta) for a wedge of m spheres.

    The wedge is modelled by the boundaries of m unit cubes in a row; the
    sum of inclusions is the boundary of the whole strip.  The check is
    necessary, not sufficient, for the homotopy identity.
    """
    d = beta.n + 1
    centers = strip_grid_centers(m, beta.n)
    hi = np.ones(d)
    hi[0] = m
    lhs = winding_numbers(compose_box(beta, np.zeros(d), hi), centers)
    rhs = np.zeros(m, dtype=np.int64)
    for j in range(m):
        lo = np.zeros(d)
        lo[0] = j
        h = lo + 1
        rhs += winding_numbers(compose_box(beta, lo, h), centers)
    return bool(np.array_equal(lhs, rhs)), lhs, rhs
