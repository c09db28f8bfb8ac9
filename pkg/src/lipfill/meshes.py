"""Meshed spheres and the test maps of the tree-factorisation corpus."""
from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull

from . import heis

MESH_SCHEMA = "lipfill-mesh 1"


class MeshFormatError(ValueError):
    pass


@dataclass
class SphereMesh:
    """Vertices on the unit sphere S^2 with the edges of their convex hull."""

    vertices: np.ndarray
    edges: np.ndarray
    name: str = "mesh"

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        e = np.sort(np.asarray(self.edges, dtype=np.int64), axis=1)
        self.edges = np.unique(e, axis=0)

    @property
    def V(self):
        return len(self.vertices)

    @cached_property
    def edge_lengths(self):
        return np.linalg.norm(self.vertices[self.edges[:, 0]] - self.vertices[self.edges[:, 1]], axis=1)

    @property
    def mesh_size(self):
        return float(self.edge_lengths.max())

    def to_text(self):
        buf = io.StringIO()
        buf.write(f"{MESH_SCHEMA}\nname {self.name}\nvertices {self.V}\nedges {len(self.edges)}\n")
        np.savetxt(buf, self.vertices, fmt="%.17g")
        np.savetxt(buf, self.edges, fmt="%d")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text):
        lines = text.splitlines()
        if not lines or lines[0].strip() != MESH_SCHEMA:
            raise MeshFormatError("missing mesh header")
        try:
            name = lines[1].split(None, 1)[1]
            V = int(lines[2].split()[1])
            E = int(lines[3].split()[1])
            verts = np.loadtxt(io.StringIO("\n".join(lines[4 : 4 + V])), ndmin=2)
            edges = np.loadtxt(io.StringIO("\n".join(lines[4 + V : 4 + V + E])), dtype=np.int64, ndmin=2)
        except (IndexError, ValueError) as exc:
            raise MeshFormatError(str(exc)) from exc
        if verts.shape != (V, 3) or edges.shape != (E, 2):
            raise MeshFormatError("row counts do not match the header")
        return cls(verts, edges, name)


def _hull_edges(pts):
    hull = ConvexHull(pts)
    t = hull.simplices
    return np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])


def fibonacci_sphere(count) -> SphereMesh:
    i = np.arange(count) + 0.5
    z = 1 - 2 * i / count
    r = np.sqrt(1 - z * z)
    th = np.pi * (1 + 5**0.5) * i
    pts = np.column_stack([r * np.cos(th), r * np.sin(th), z])
    return SphereMesh(pts, _hull_edges(pts), f"fibonacci-{count}")


def latitude_sphere(rings=24, per_ring=48) -> SphereMesh:
    """Poles plus ``rings`` latitude circles; every ring has exactly one height."""
    phi = np.pi * np.arange(1, rings + 1) / (rings + 1)
    th = 2 * np.pi * np.arange(per_ring) / per_ring
    pts = [np.array([[0.0, 0.0, -1.0]])]
    for k, p in enumerate(phi):
        off = 0.5 * (k % 2) * (2 * np.pi / per_ring)
        pts.append(np.column_stack([np.sin(p) * np.cos(th + off), np.sin(p) * np.sin(th + off),
                                    np.full(per_ring, -np.cos(p))]))
    pts.append(np.array([[0.0, 0.0, 1.0]]))
    pts = np.vstack(pts)
    # explicit edges: a hull of this symmetric lattice has coplanar quads and may drop ring edges
    i = np.arange(per_ring)
    ring = lambda k, j: 1 + k * per_ring + np.mod(j, per_ring)
    top = len(pts) - 1
    E = [np.column_stack([np.zeros_like(i), ring(0, i)]), np.column_stack([np.full_like(i, top), ring(rings - 1, i)])]
    for k in range(rings):
        E.append(np.column_stack([ring(k, i), ring(k, i + 1)]))
        if k + 1 < rings:
            shift = -1 if k % 2 == 0 else 1
            E.append(np.column_stack([ring(k, i), ring(k + 1, i)]))
            E.append(np.column_stack([ring(k, i), ring(k + 1, i + shift)]))
    return SphereMesh(pts, np.vstack(E), f"latitude-{rings}x{per_ring}")


def _ring(axis, r, count, phase=0.0):
    """``count`` points at sphere distance r from the unit vector ``axis``."""
    axis = np.asarray(axis, dtype=float)
    u = np.cross(axis, [0.0, 0.0, 1.0] if abs(axis[2]) < 0.9 else [1.0, 0.0, 0.0])
    u /= np.linalg.norm(u)
    w = np.cross(axis, u)
    th = phase + 2 * np.pi * np.arange(count) / count
    return np.cos(r) * axis + np.sin(r) * (np.cos(th)[:, None] * u + np.sin(th)[:, None] * w)


def cap_ring_sphere(anchors, radius, count=1000) -> SphereMesh:
    """Concentric rings around each anchor out to ``radius``, Fibonacci fill elsewhere.

    Every ring lies on one level set of the distance to its anchor, which is
    what makes the tripod map exact on vertices.
    """
    anchors = np.asarray(anchors, dtype=float)
    h = np.sqrt(8 * np.pi / (np.sqrt(3) * count))
    K = max(1, int(round(radius / h)))
    pts = []
    for a in anchors:
        pts.append(a[None])
        for j in range(1, K + 1):
            r = radius * j / K
            pts.append(_ring(a, r, max(6, int(round(2 * np.pi * np.sin(r) / h))), 0.5 * (j % 2)))
    fill = fibonacci_sphere(count).vertices
    d = np.arccos(np.clip(fill @ anchors.T, -1, 1)).min(axis=1)
    pts.append(fill[d > radius + 0.5 * h])
    pts = np.vstack(pts)
    return SphereMesh(pts, _hull_edges(pts), f"capring-{len(pts)}")


def tripod_sphere(count=1000, tripod=None) -> SphereMesh:
    T = Tripod() if tripod is None else tripod
    return cap_ring_sphere(T.anchors, T.radius, count)


# ---------------------------------------------------------------------------
# test maps into H^1


def height(pts):
    return (np.asarray(pts)[:, 2] + 1.0) / 2.0


def height_map(pts):
    """f = gamma∘height with gamma(h) = (h, 0, 0), a unit-speed horizontal line."""
    h = height(pts)
    return np.column_stack([h, np.zeros_like(h), np.zeros_like(h)])


@dataclass(frozen=True)
class Tripod:
    """psi_0: caps around three equatorial anchors onto the legs of a tripod; phi_0: horizontal rays.

    A point at sphere distance d < R from anchor i sits at position R - d on
    leg i; every point outside the caps goes to the centre.
    """

    radius: float = 0.9
    angles: tuple = (0.0, 2 * np.pi / 3, 4 * np.pi / 3)
    directions: tuple = (0.0, 2 * np.pi / 3, 4 * np.pi / 3)

    def __post_init__(self):
        if not 0 < self.radius < np.pi / 3:
            raise ValueError("caps overlap unless radius < pi/3")

    @property
    def anchors(self):
        a = np.asarray(self.angles)
        return np.column_stack([np.cos(a), np.sin(a), np.zeros_like(a)])

    def legs(self, pts):
        pts = np.asarray(pts, dtype=float)
        A = self.anchors
        cr = np.linalg.norm(np.cross(pts[:, None, :], A[None, :, :]), axis=2)
        d = np.arctan2(cr, pts @ A.T)
        leg = np.argmin(d, axis=1)
        s = np.clip(self.radius - d[np.arange(len(pts)), leg], 0.0, None)
        # one level circle must give one image point; the gauge would amplify 1e-16 noise to 1e-8
        s = np.round(s, 12)
        return leg, s

    def tree_distance(self, a, b):
        la, sa = a
        lb, sb = b
        return np.where(la == lb, np.abs(sa - sb), sa + sb)

    def embed(self, leg, s):
        th = np.asarray(self.directions)[leg]
        return heis.segment_lift((s * np.cos(th))[:, None], (s * np.sin(th))[:, None])

    def __call__(self, pts):
        return self.embed(*self.legs(pts))


def projection_map(pts):
    """Negative control: (x, y) coordinates, a map S^2 -> R^2."""
    return np.asarray(pts)[:, :2].copy()


def map_by_name(name, pts):
    """Target values and distance for a corpus map name or ``custom:<file>``."""
    if name == "height":
        return height_map(pts), heis.koranyi_dist
    if name == "tripod":
        return Tripod()(pts), heis.koranyi_dist
    if name == "projection":
        return projection_map(pts), _euclid
    if name.startswith("custom:"):
        vals = np.loadtxt(name.split(":", 1)[1], ndmin=2)
        if len(vals) != len(pts):
            raise MeshFormatError("custom map has the wrong number of rows")
        if vals.shape[1] == 3:
            return vals, heis.koranyi_dist
        return vals, _euclid
    raise ValueError(f"unknown map {name!r}")


def _euclid(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b), axis=-1)
