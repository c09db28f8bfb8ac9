"""Factoring a Lipschitz map on a meshed sphere through its pull-back quotient.

d_f is the shortest-path metric of the mesh graph weighted by edge image
lengths; Z is its metric quotient, psi the quotient map and phi the induced
1-Lipschitz map.  Tree certification uses the four-point condition and
Gromov-product tripod residuals; the signed-area functional and the witness
pair probe loops in non-tree spaces.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra, minimum_spanning_tree

from .meshes import SphereMesh


class Disconnected(ValueError):
    pass


class AmbiguousThreshold(ValueError):
    pass


class OpenCurve(ValueError):
    pass


class NoValidDelta(ValueError):
    def __init__(self, msg, sample=None):
        super().__init__(msg)
        self.sample = sample


class NotCertified(ValueError):
    pass


# ---------------------------------------------------------------------------
# pull-back metric


@dataclass
class DomainMesh:
    mesh: SphereMesh
    values: np.ndarray
    dist: callable
    edge_samples: int = 0
    fn: callable | None = field(default=None, repr=False)

    @cached_property
    def image_lengths(self):
        """Sum of target distances along each edge, sampled at ``edge_samples`` interior points."""
        e = self.mesh.edges
        if self.edge_samples == 0 or self.fn is None:
            return self.dist(self.values[e[:, 0]], self.values[e[:, 1]])
        P = self.mesh.vertices
        t = np.linspace(0, 1, self.edge_samples + 2)
        tot = np.zeros(len(e))
        prev = self.values[e[:, 0]]
        for a in t[1:-1]:
            q = (1 - a) * P[e[:, 0]] + a * P[e[:, 1]]
            q /= np.linalg.norm(q, axis=1, keepdims=True)
            cur = self.fn(q)
            tot += self.dist(prev, cur)
            prev = cur
        return tot + self.dist(prev, self.values[e[:, 1]])

    @cached_property
    def lip_f(self):
        """Largest edge image length per unit edge length."""
        return float((self.image_lengths / self.mesh.edge_lengths).max())

    @cached_property
    def _graph(self):
        e = self.mesh.edges
        V = self.mesh.V
        return coo_matrix((self.mesh.edge_lengths, (e[:, 0], e[:, 1])), shape=(V, V)).tocsr()

    def graph_distances(self, sources=None):
        """Mesh graph distances with Euclidean edge lengths, rows for ``sources``."""
        return dijkstra(self._graph, directed=False, indices=sources)

    def probe_sources(self, limit=400, seed=0):
        """All vertices for small meshes, otherwise a seeded sample of ``limit`` rows."""
        V = self.mesh.V
        if V <= limit:
            return np.arange(V)
        return np.sort(np.random.default_rng(seed).choice(V, limit, replace=False))

    @cached_property
    def quasiconvexity(self):
        """C = max of graph distance / chordal distance over the probe rows."""
        P = self.mesh.vertices
        src = self.probe_sources()
        G = self.graph_distances(src)
        ch = np.linalg.norm(P[src][:, None, :] - P[None, :, :], axis=2)
        ok = ch > 0
        return float((G[ok] / ch[ok]).max())


def build_domain_mesh(mesh: SphereMesh, fn, dist, edge_samples=0) -> DomainMesh:
    vals = fn(mesh.vertices)
    n, _ = connected_components(coo_matrix((np.ones(len(mesh.edges)), mesh.edges.T), shape=(mesh.V, mesh.V)),
                                directed=False)
    if n != 1:
        raise Disconnected(f"mesh has {n} components")
    return DomainMesh(mesh, vals, dist, edge_samples, fn)


@dataclass
class PullbackMetric:
    """d_f stored on the components of the zero-weight subgraph."""

    labels: np.ndarray  # vertex -> component
    Dc: np.ndarray  # component distance matrix

    @property
    def V(self):
        return len(self.labels)

    def __call__(self, i, j):
        return self.Dc[self.labels[i], self.labels[j]]

    def dense(self):
        return self.Dc[np.ix_(self.labels, self.labels)]


def pullback_metric(dm: DomainMesh) -> PullbackMetric:
    e = dm.mesh.edges
    w = dm.image_lengths
    V = dm.mesh.V
    pos = w > 0
    zero = ~pos
    # scipy drops explicit zeros, so zero-weight edges are contracted first
    Zg = coo_matrix((np.ones(zero.sum()), (e[zero, 0], e[zero, 1])), shape=(V, V))
    ncomp, lab = connected_components(Zg, directed=False)
    rows, cols = lab[e[pos, 0]], lab[e[pos, 1]]
    wp = w[pos]
    key = np.minimum(rows, cols) * ncomp + np.maximum(rows, cols)
    order = np.lexsort((wp, key))
    first = np.r_[True, key[order][1:] != key[order][:-1]][: len(order)]
    sel = order[first]
    sel = sel[rows[sel] != cols[sel]]
    W = coo_matrix((wp[sel], (rows[sel], cols[sel])), shape=(ncomp, ncomp)).tocsr()
    return PullbackMetric(lab, dijkstra(W, directed=False))


# ---------------------------------------------------------------------------
# quotient and factor maps


@dataclass
class QuotientSpace:
    labels: np.ndarray  # vertex -> class
    reps: np.ndarray  # class -> representative vertex
    D: np.ndarray  # class distance matrix
    tau: float
    triangle_violation: float

    @property
    def size(self):
        return len(self.reps)

    @property
    def diameter(self):
        return float(self.D.max()) if self.size else 0.0


def default_tau(dm: DomainMesh):
    P = dm.mesh.vertices
    diam = float(np.linalg.norm(P.max(0) - P.min(0)))
    return 1e-6 * dm.lip_f * diam


def _union_find(n, pairs):
    parent = np.arange(n)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return np.array([find(a) for a in range(n)])


def quotient(Df, tau: float) -> QuotientSpace:
    """Identify points at d_f <= tau; ``Df`` is a :class:`PullbackMetric` or a dense matrix."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if isinstance(Df, PullbackMetric):
        base, M0 = Df.labels, Df.Dc
    else:
        M0 = np.asarray(Df, dtype=float)
        base = np.arange(len(M0))
    n = len(M0)
    if tau > 0:
        nz = M0[M0 > 0]
        if len(nz) and tau > 0.5 * nz.min():
            raise AmbiguousThreshold(f"tau={tau:g} exceeds half the smallest nonzero distance {nz.min():g}")
    i, j = np.nonzero(np.triu(M0 <= tau, 1))
    roots = _union_find(n, zip(i.tolist(), j.tolist()))
    _, comp_lab = np.unique(roots, return_inverse=True)
    labels = comp_lab[base]
    # representative: the smallest vertex of each class
    reps = np.full(comp_lab.max() + 1, len(labels), dtype=np.int64)
    np.minimum.at(reps, labels, np.arange(len(labels)))
    if len(i) == 0:
        M = M0.copy()
    else:
        # class distance = min over members
        order = np.argsort(comp_lab, kind="stable")
        starts = np.flatnonzero(np.r_[True, comp_lab[order][1:] != comp_lab[order][:-1]])
        M = np.minimum.reduceat(M0[order], starts, axis=0)
        M = np.minimum.reduceat(M[:, order], starts, axis=1)
        np.fill_diagonal(M, 0.0)
        M = np.minimum(M, M.T)
    return QuotientSpace(labels, reps, M, tau, triangle_violation(M))


def triangle_violation(M, block=64, exhaustive_limit=1500, samples=1000000, seed=0):
    """max of M[i,j] - M[i,k] - M[k,j]; exhaustive on small spaces, sampled triples otherwise."""
    n = len(M)
    if n > exhaustive_limit:
        rng = np.random.default_rng(seed)
        i, j, k = rng.integers(0, n, size=(3, samples))
        return float(max(0.0, (M[i, j] - M[i, k] - M[k, j]).max()))
    worst = 0.0
    for s in range(0, n, block):
        Mi = M[s : s + block]
        via = (Mi[:, :, None] + M[None, :, :]).min(axis=1)
        worst = max(worst, float((Mi - via).max()))
    return worst


@dataclass
class FactorPair:
    psi: np.ndarray
    phi: np.ndarray
    lip_psi: float
    lip_phi: float
    lip_f: float
    C: float
    exact: bool


def factor_maps(dm: DomainMesh, Z: QuotientSpace, chunk=256) -> FactorPair:
    """psi, phi and their Lipschitz constants.

    Lip(psi) uses the same probe rows as the quasiconvexity constant, so that
    Lip(psi) <= C Lip(f) holds row by row.  Lip(phi) runs over all class pairs.
    """
    psi = Z.labels
    phi = dm.values[Z.reps]
    exact = bool(np.array_equal(phi[psi], dm.values))
    P = dm.mesh.vertices
    src = dm.probe_sources()
    ch = np.linalg.norm(P[src][:, None, :] - P[None, :, :], axis=2)
    dz = Z.D[psi[src]][:, psi]
    ok = ch > 0
    lip_psi = float((dz[ok] / ch[ok]).max())
    lip_phi = 0.0
    for s in range(0, Z.size, chunk):
        a = np.arange(s, min(s + chunk, Z.size))
        A, B = np.meshgrid(a, np.arange(Z.size), indexing="ij")
        A, B = A.ravel(), B.ravel()
        keep = B > A
        A, B = A[keep], B[keep]
        d = Z.D[A, B]
        pos = d > 0
        if pos.any():
            lip_phi = max(lip_phi, float((dm.dist(phi[A[pos]], phi[B[pos]]) / d[pos]).max()))
    return FactorPair(psi, phi, lip_psi, lip_phi, dm.lip_f, dm.quasiconvexity, exact)


def mesh_loops(dm: DomainMesh, count=100, steps=20, seed=0):
    """Random walks closed by a graph-shortest path back to the start."""
    rng = np.random.default_rng(seed)
    V = dm.mesh.V
    e = dm.mesh.edges
    nbrs = [[] for _ in range(V)]
    for a, b in e:
        nbrs[a].append(b)
        nbrs[b].append(a)
    A = coo_matrix((dm.mesh.edge_lengths, (e[:, 0], e[:, 1])), shape=(V, V)).tocsr()
    loops = []
    for _ in range(count):
        v0 = int(rng.integers(V))
        path = [v0]
        for _ in range(steps):
            path.append(int(rng.choice(nbrs[path[-1]])))
        _, pred = dijkstra(A, directed=False, indices=path[-1], return_predecessors=True)
        back = []
        cur = v0
        while cur != path[-1]:
            back.append(cur)
            cur = int(pred[cur])
        path.extend(reversed(back))
        loops.append(np.array(path))
    return loops


def path_length_check(dm: DomainMesh, Z: QuotientSpace, loops):
    """length(psi∘gamma) <= length(f∘gamma) for each vertex loop, from edge data."""
    key = {(int(a), int(b)): w for (a, b), w in zip(dm.mesh.edges, dm.image_lengths)}
    worst = -np.inf
    for lp in loops:
        a, b = lp[:-1], lp[1:]
        fl = sum(key[(min(x, y), max(x, y))] for x, y in zip(a.tolist(), b.tolist()))
        zl = float(Z.D[Z.labels[a], Z.labels[b]].sum())
        worst = max(worst, zl - fl)
    return worst


# ---------------------------------------------------------------------------
# tree certification


@dataclass
class TreeCertificate:
    delta: float
    relative: float
    witness: tuple
    quadruples: int
    exhaustive: bool
    tripod_residual: float

    def passes(self, tol=1e-3):
        return self.relative <= tol


def _four_point(D, q):
    a, b, c, d = q.T
    s1 = D[a, b] + D[c, d]
    s2 = D[a, c] + D[b, d]
    s3 = D[a, d] + D[b, c]
    S = np.sort(np.stack([s1, s2, s3], axis=1), axis=1)
    return np.clip(S[:, 2] - S[:, 1], 0.0, None) / 2.0


def four_point_defect(D, samples=200000, seed=0, exhaustive_limit=40):
    n = len(D)
    if n < 4:
        return 0.0, (), 0, True
    if n <= exhaustive_limit:
        q = np.array(list(itertools.combinations(range(n), 4)))
        ex = True
    else:
        rng = np.random.default_rng(seed)
        q = np.array([rng.choice(n, 4, replace=False) for _ in range(min(samples, 20000))])
        q = np.vstack([q, rng.integers(0, n, size=(samples, 4))])
        ex = False
    best, arg = 0.0, ()
    for s in range(0, len(q), 50000):
        chunk = q[s : s + 50000]
        d = _four_point(D, chunk)
        i = int(np.argmax(d))
        if d[i] > best:
            best, arg = float(d[i]), tuple(int(x) for x in chunk[i])
    return best, arg, len(q), ex


def tripod_residual(D, triples=2000, seed=0):
    """max over sampled triples of min over points c of the tripod-centre mismatch."""
    n = len(D)
    if n < 3:
        return 0.0
    rng = np.random.default_rng(seed)
    t = rng.integers(0, n, size=(triples, 3))
    x, y, z = t.T
    gx = (D[x, y] + D[x, z] - D[y, z]) / 2
    gy = (D[y, x] + D[y, z] - D[x, z]) / 2
    gz = (D[z, x] + D[z, y] - D[x, y]) / 2
    r = np.abs(D[x] - gx[:, None]) + np.abs(D[y] - gy[:, None]) + np.abs(D[z] - gz[:, None])
    return float(r.min(axis=1).max())


def certify_tree(Z: QuotientSpace | np.ndarray, samples=200000, seed=0) -> TreeCertificate:
    D = Z.D if isinstance(Z, QuotientSpace) else np.asarray(Z, dtype=float)
    delta, arg, count, ex = four_point_defect(D, samples, seed)
    diam = float(D.max()) if D.size else 0.0
    rel = delta / diam if diam > 0 else 0.0
    return TreeCertificate(delta, rel, arg, count, ex, tripod_residual(D, seed=seed))


# ---------------------------------------------------------------------------
# signed area


def signed_area(curve):
    """Trapezoid value of the integral of x dy over a closed sampled planar curve."""
    c = np.asarray(curve, dtype=float)
    if len(c) < 2 or not np.array_equal(c[0], c[-1]):
        raise OpenCurve("first and last samples differ")
    x, y = c[:, 0], c[:, 1]
    return float(np.sum(0.5 * (x[1:] + x[:-1]) * (y[1:] - y[:-1])))


def tree_interpolate(D, seq, centers):
    """Planar curve (d(., c1), d(., c2)) along tree geodesics through the class sequence.

    Along a geodesic [u, v] of a tree, d(., c) is piecewise linear with one
    kink at the Gromov product (v|c)_u; the kinks of both coordinates are
    inserted so that the polyline equals the image exactly.
    """
    c1, c2 = centers
    pts = []
    for u, v in zip(seq[:-1], seq[1:]):
        L = D[u, v]
        ss = [0.0]
        for c in (c1, c2):
            k = 0.5 * (L + D[u, c] - D[v, c])
            if 0 < k < L:
                ss.append(k)
        ss = sorted(ss)
        for s in ss:
            pts.append([_along(D, u, v, s, c1), _along(D, u, v, s, c2)])
    pts.append([D[seq[-1], c1], D[seq[-1], c2]])
    return np.array(pts)


def _along(D, u, v, s, c):
    if s == 0:
        return D[u, c]
    L = D[u, v]
    k = np.clip(0.5 * (L + D[u, c] - D[v, c]), 0.0, L)
    dp = D[u, c] - k
    return dp + abs(s - k)


def loop_area_test(Z: QuotientSpace, loops, pairs=1, seed=0, tol=1e-3):
    """|A(pi∘loop)| for loops of vertices and random coordinate pairs pi = (d(., c1), d(., c2))."""
    rng = np.random.default_rng(seed)
    rows = []
    for lp in loops:
        seq = Z.labels[lp]
        seq = seq[np.r_[True, seq[1:] != seq[:-1]]]
        if seq[0] != seq[-1]:
            seq = np.append(seq, seq[0])
        length = float(Z.D[seq[:-1], seq[1:]].sum())
        for _ in range(pairs):
            c = rng.integers(0, Z.size, size=2)
            if len(seq) < 3:
                rows.append((0.0, 0.0, True))
                continue
            curve = tree_interpolate(Z.D, seq, c)
            a = abs(signed_area(curve))
            norm = length**2
            rows.append((a, norm, a <= tol * norm))
    return rows


def chart_area(points_fn, samples):
    """Area of a chart pi applied to a sampled loop in any space.

    A periodic parameter seldom maps its two ends to bit-equal points, so an
    end gap below 1e-9 of the image scale is closed exactly.
    """
    c = np.array(points_fn(samples), dtype=float)
    if np.abs(c[-1] - c[0]).max() <= 1e-9 * max(1.0, np.abs(c).max()):
        c[-1] = c[0]
    return signed_area(c)


# ---------------------------------------------------------------------------
# witness pair


@dataclass
class WitnessPair:
    pi1: callable
    pi2: callable
    lower_bound: float
    area: float


def witness_pair(dist, gamma, t, a, b, delta, eps, lip_gamma):
    """Lipschitz pair whose area on the loop gamma is at least d(gamma(b), gamma(a)) - 2 eps Lip(gamma).

    ``gamma`` is an array of samples of an injective loop at parameters ``t``
    (a full period, first sample repeated at the end); ``dist(p, Q)`` returns
    distances from one point to many.  The parameter interval is cyclic.
    """
    gamma = np.asarray(gamma)
    t = np.asarray(t, dtype=float)
    period = t[-1] - t[0]
    span = np.mod(t - a, period)
    inside = span <= np.mod(b - a, period) + 1e-12
    seg = gamma[inside]
    gb = gamma[np.argmin(np.abs(np.mod(t - b + period / 2, period) - period / 2))]
    ga = gamma[np.argmin(np.abs(np.mod(t - a + period / 2, period) - period / 2))]
    if not 0 < eps < dist(gb, ga[None])[0] / (2 * lip_gamma):
        raise ValueError("eps outside the admissible range")
    far = (span > np.mod(b - a, period) + eps) & (span < period - eps)
    for i in np.flatnonzero(far):
        if np.min(dist(gamma[i], seg)) < delta:
            raise NoValidDelta(f"delta-neighbourhood of the arc meets the loop at t={t[i]:.6g}", t[i])

    def rows(P):
        return np.asarray(P).reshape((-1,) + gamma.shape[1:])

    def pi1(P):
        d = np.array([np.min(dist(p, seg)) for p in rows(P)])
        return np.maximum(0.0, 1.0 - d / delta)

    def pi2(P):
        return dist(ga, rows(P))

    curve = np.column_stack([pi1(gamma), pi2(gamma)])
    curve[-1] = curve[0]
    A = signed_area(curve)
    bound = float(dist(gb, ga[None])[0] - 2 * eps * lip_gamma)
    return WitnessPair(pi1, pi2, bound, A)


def circle_arc_dist(p, Q):
    """Arc metric on the unit circle, points given by angle."""
    d = np.abs(np.mod(np.asarray(Q, dtype=float).reshape(-1) - float(np.asarray(p).reshape(-1)[0]), 2 * np.pi))
    return np.minimum(d, 2 * np.pi - d)


# ---------------------------------------------------------------------------
# finite subtree


@dataclass
class PrunedTree:
    nodes: np.ndarray
    edges: np.ndarray
    projection: np.ndarray
    displacement: np.ndarray

    @property
    def max_displacement(self):
        return float(self.displacement.max()) if len(self.displacement) else 0.0


def prune_project(Z: QuotientSpace, E, cert: TreeCertificate | None = None, tol=1e-3, slack=None):
    """Geodesic hull of the classes E together with the closest-point projection onto it."""
    cert = certify_tree(Z) if cert is None else cert
    if not cert.passes(tol):
        raise NotCertified(f"four-point defect {cert.relative:.3g} of the diameter exceeds {tol}")
    D = Z.D
    E = np.unique(np.asarray(E, dtype=np.int64))
    slack = 2 * cert.delta + 1e-9 * max(Z.diameter, 1.0) if slack is None else slack
    on = np.zeros(Z.size, dtype=bool)
    on[E] = True
    for i, j in itertools.combinations(E.tolist(), 2):
        on |= D[i] + D[j] - D[i, j] <= slack
    nodes = np.flatnonzero(on)
    sub = D[np.ix_(nodes, nodes)]
    T = minimum_spanning_tree(sub).tocoo()
    edges = np.column_stack([nodes[T.row], nodes[T.col]])
    near = nodes[np.argmin(D[:, nodes], axis=1)]
    disp = D[np.arange(Z.size), near]
    return PrunedTree(nodes, edges, near, disp)
