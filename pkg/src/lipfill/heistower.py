"""Lipschitz extensions into the first Heisenberg group through cone complexes.

A map f on the rim of a cone complex J(eps) is extended over the vertices
by dilation towards the identity (after a normalising left translation and
dilation), edges are filled by explicit horizontal paths, and the
substitution tower glues scaled cone complexes onto every square cell.
Copies of J(eps) are evaluated lazily from their parent's edges, so only the
copies along sampled addresses are ever materialised.

Target points are arrays ``(x, y, z)`` with the group law of :mod:`lipfill.heis`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import heis
from .complexes import ConeComplex, as_fraction


class ZeroDiameter(ValueError):
    """The rim map is constant only up to a nonzero spread, or cannot be normalised."""


class ScaleUnderflow(ValueError):
    pass


# ---------------------------------------------------------------------------
# rim maps


def figure_eight(s):
    """Closed horizontal curve over the planar figure eight, parametrised by rim position s in [0, 4).

    Planar part (sin th, sin th cos th) with th = pi s/2; the exact lift is
    z = (1 - cos^3 th)/3, which returns to 0 since the enclosed signed area vanishes.
    """
    th = 0.5 * np.pi * np.asarray(s, dtype=float)
    x = np.sin(th)
    y = np.sin(th) * np.cos(th)
    z = (1.0 - np.cos(th) ** 3) / 3.0
    return np.stack([x, y, z], axis=-1)


FIGURE_EIGHT_LIP = 0.5 * np.pi * math.sqrt(2.0)


def constant_rim(point=(0.0, 0.0, 0.0)):
    p = np.asarray(point, dtype=float)
    return lambda s: np.broadcast_to(p, np.shape(s) + (3,)).copy()


# ---------------------------------------------------------------------------
# vectorised horizontal edge paths (n = 1)


def _path_legs(P, Q):
    g = heis.left_quotient(P, Q)
    a, b = g[..., 0], g[..., 1]
    t = heis.symmetric_height(g)
    s = np.sqrt(np.abs(t))
    z = np.zeros_like(s)
    neg = t < 0
    # x, y, -x, -y adds -s^2 to the height; y, x, -y, -x adds +s^2
    l1 = np.where(neg[..., None], np.stack([s, z], -1), np.stack([z, s], -1))
    l2 = np.where(neg[..., None], np.stack([z, s], -1), np.stack([s, z], -1))
    legs = np.stack([np.stack([a, b], -1), l1, l2, -l1, -l2], axis=-2)
    return legs


def path_lengths(P, Q):
    g = heis.left_quotient(P, Q)
    return np.hypot(g[..., 0], g[..., 1]) + 4.0 * np.sqrt(np.abs(heis.symmetric_height(g)))


def path_points(P, Q, lam):
    """Points at arclength fraction ``lam`` along the horizontal paths P -> Q (row-wise)."""
    P = np.atleast_2d(P)
    Q = np.atleast_2d(Q)
    lam = np.clip(np.broadcast_to(np.asarray(lam, dtype=float), P.shape[:-1]), 0.0, 1.0)
    legs = _path_legs(P, Q)
    lens = np.linalg.norm(legs, axis=-1)
    cum = np.concatenate([np.zeros(lens.shape[:-1] + (1,)), np.cumsum(lens, axis=-1)], axis=-1)
    target = lam * cum[..., -1]
    idx = np.clip((cum[..., 1:-1] <= target[..., None]).sum(-1), 0, 4)
    cur = P.copy()
    rows = np.arange(len(P))
    for k in range(5):
        full = idx > k
        part = idx == k
        f = np.where(part, (target - cum[:, k]) / np.where(lens[:, k] > 0, lens[:, k], 1.0), 1.0)
        f = np.where(full | part, np.clip(f, 0.0, 1.0), 0.0)
        step = heis.segment_lift(legs[rows, k, :1] * f[:, None], legs[rows, k, 1:] * f[:, None])
        cur = heis.mul(cur, step)
    return cur


# ---------------------------------------------------------------------------
# cone extension


def rim_lipschitz(vals, eps):
    """Lipschitz constant of a rim vertex map for the path metric of the rim (perimeter 4)."""
    R = len(vals)
    i, j = np.triu_indices(R, 1)
    gap = np.abs(i - j)
    dom = np.minimum(gap, R - gap) * float(eps)
    d = heis.koranyi_dist(vals[i], vals[j])
    return float((d / dom).max())


@dataclass
class ConeExtension:
    cone: ConeComplex
    values: np.ndarray  # (V, 3)
    scale: float  # L, Lipschitz constant of the rim map used for normalisation
    anchor: np.ndarray  # f(v0)
    normalized: np.ndarray = field(repr=False)

    def adjacent_constant(self):
        """max over edges of the normalised gauge distance divided by eps."""
        e = self.cone.edges
        d = heis.koranyi_dist(self.normalized[e[:, 0]], self.normalized[e[:, 1]])
        return float(d.max() / float(self.cone.eps))


def _vertex_formula(fn, cone: ConeComplex):
    """s_{eps t}(f(v)) on ring vertices, identity on the base."""
    R, Lv = cone.ring_size, cone.levels
    e = float(cone.eps)
    V = cone.vertex_count
    out = np.zeros((V, 3))
    t = np.repeat(np.arange(Lv), R) * e  # height index * eps
    ring = np.tile(fn, (Lv, 1))
    out[: R * Lv] = heis.dilate_arr(e * t, ring)
    return out


def cone_extend(rim_values, cone: ConeComplex, zero_tol=0.0) -> ConeExtension:
    """Extend a map from the rim vertices of ``cone`` over all its vertices."""
    f = np.asarray(rim_values, dtype=float)
    if f.shape != (cone.ring_size, 3):
        raise ValueError(f"need {cone.ring_size} rim values")
    g0 = f[0]
    L = rim_lipschitz(f, cone.eps)
    if L <= zero_tol:
        spread = float(heis.koranyi_dist(f, g0[None]).max())
        if spread > 0:
            raise ZeroDiameter("rim map too small to normalise")
        vals = np.repeat(g0[None], cone.vertex_count, axis=0)
        return ConeExtension(cone, vals, 0.0, g0, np.zeros_like(vals))
    fn = heis.dilate_arr(1.0 / L, heis.left_quotient(g0[None], f))
    radius = float(heis.koranyi_norm(fn).max())
    if radius > 2.0 + 1e-9:
        raise ZeroDiameter(f"normalised rim leaves the radius-2 ball ({radius:.3g})")
    nv = _vertex_formula(fn, cone)
    vals = heis.mul(g0[None], heis.dilate_arr(L, nv))
    # rim reproduces f up to rounding; snap it exactly
    vals[cone.rim] = f
    return ConeExtension(cone, vals, L, g0, nv)


# ---------------------------------------------------------------------------
# tower copies


@dataclass
class ConeCopy:
    """One copy of J(eps) in the tower.

    ``level`` 0 is the root; a copy at level i has global edge length eps^(i+1).
    Rim edges are inherited: they follow ``rim_fn`` (root: the rim map itself;
    children: the parent's cell boundary).
    """

    address: tuple
    level: int
    ext: ConeExtension
    rim_fn: callable = field(repr=False)
    parent: "ConeCopy | None" = field(default=None, repr=False)
    cell: int | None = None

    @property
    def cone(self):
        return self.ext.cone

    @property
    def values(self):
        return self.ext.values

    @property
    def edge_length(self):
        return float(self.cone.eps) ** (self.level + 1)

    @cached_property
    def interior_speeds(self):
        e = self.cone.edges[~self.cone.rim_edges]
        return path_lengths(self.values[e[:, 0]], self.values[e[:, 1]]) / self.edge_length

    def lipschitz(self):
        return float(self.interior_speeds.max()) if len(self.interior_speeds) else 0.0

    def edge_points(self, edge, lam):
        """Points on edge ``edge`` (id) at fraction ``lam`` measured from its lower vertex."""
        edge = np.atleast_1d(edge)
        lam = np.broadcast_to(np.asarray(lam, dtype=float), edge.shape)
        cone = self.cone
        E = cone.edges[edge]
        out = np.empty((len(edge), 3))
        rim = cone.rim_edges[edge]
        if rim.any():
            # rim ring edges run from ring_id(j) to ring_id(j+1) except the wrap edge
            top = (cone.levels - 1) * cone.ring_size
            j0 = E[rim, 0] - top
            j1 = E[rim, 1] - top
            wrap = (j1 - j0) != 1
            start = np.where(wrap, j1, j0).astype(float)
            dirn = np.where(wrap, -1.0, 1.0)
            # for the wrap edge (0, R-1) the lower vertex is j=0, running backwards from 4
            pos = np.where(wrap, cone.ring_size - lam[rim], start + lam[rim] * dirn)
            pos = np.where(wrap, np.mod(pos, cone.ring_size), pos)
            out[rim] = self.rim_fn(pos / cone.m)
        if (~rim).any():
            out[~rim] = path_points(self.values[E[~rim, 0]], self.values[E[~rim, 1]], lam[~rim])
        return out

    def cell_boundary_fn(self, c):
        """The boundary of cell ``c`` as a map of rim position s in [0, 4)."""
        parts = self.cone.cell_edges(c)

        def fn(s):
            s = np.asarray(s, dtype=float)
            flat = np.mod(s.reshape(-1), 4.0)
            k = np.minimum(np.floor(flat).astype(np.int64), 3)
            f = flat - k
            out = np.empty((flat.size, 3))
            for side in range(4):
                sel = k == side
                if sel.any():
                    eid, forward = parts[side]
                    lam = f[sel] if forward else 1.0 - f[sel]
                    out[sel] = self.edge_points(np.full(sel.sum(), eid), lam)
            return out.reshape(s.shape + (3,))

        return fn

    def child(self, c):
        fn = self.cell_boundary_fn(c)
        cone = self.cone
        ext = cone_extend(fn(cone.rim_positions), cone)
        return ConeCopy(self.address + (int(c),), self.level + 1, ext, fn, self, int(c))


def root_copy(rim_fn, eps) -> ConeCopy:
    cone = ConeComplex(1, as_fraction(eps))
    ext = cone_extend(rim_fn(cone.rim_positions), cone)
    return ConeCopy((), 0, ext, rim_fn)


def rim_speed(rim_fn, samples=4096):
    s = np.arange(samples + 1) / samples * 4.0
    p = rim_fn(s)
    d = path_lengths(p[:-1], p[1:])
    return float(d.max() / (4.0 / samples))


# ---------------------------------------------------------------------------
# the tower


def _cell_edge_ids(cone: ConeComplex):
    cyc = cone.cells
    nxt = np.roll(cyc, -1, axis=1)
    lo, hi = np.minimum(cyc, nxt), np.maximum(cyc, nxt)
    idx = cone.edge_index
    return np.array([[idx[(int(a), int(b))] for a, b in zip(r0, r1)] for r0, r1 in zip(lo, hi)])


@dataclass
class HeisenbergTower:
    """sigma_0 = cone extension of the rim map; level i+1 glues cones onto level-i cells.

    Lip(sigma_i) is measured on a beam of copies per level: the ``beam``
    copies fed most strongly by their parent (largest bounding edge speed)
    plus ``beam`` seeded random cells.  The measurement is therefore a lower
    estimate of the true level maximum.
    """

    eps: Fraction
    rim_fn: callable = field(repr=False)
    rim_lip: float = FIGURE_EIGHT_LIP
    depth: int = 0
    beam: int = 8
    seed: int = 0
    root: ConeCopy | None = field(default=None, repr=False)
    lip: list = field(default_factory=list)
    copies_measured: list = field(default_factory=list)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def c(self):
        return self.lip[0] / self.rim_lip if self.rim_lip > 0 else 0.0

    @cached_property
    def cell_edge_ids(self):
        return _cell_edge_ids(self.root.cone)

    def copy(self, address):
        """The copy glued along the given cell address (built on demand)."""
        address = tuple(int(a) for a in address)
        if address in self._cache:
            return self._cache[address]
        if not address:
            return self.root
        parent = self.copy(address[:-1])
        if not 0 <= address[-1] < parent.cone.N:
            raise KeyError(f"cell {address[-1]} out of range")
        ch = parent.child(address[-1])
        if len(self._cache) < 4096:
            self._cache[address] = ch
        return ch

    def _cell_scores(self, cp: ConeCopy):
        cone = cp.cone
        sp = np.zeros(len(cone.edges))
        sp[~cone.rim_edges] = cp.interior_speeds
        # rim edges inherit the speed of the copy's own rim, bounded by its parent level
        sp[cone.rim_edges] = self.lip[cp.level - 1] if cp.level else self.rim_lip
        return sp[self.cell_edge_ids].max(axis=1)


def build_heisenberg_tower(rim_fn=figure_eight, eps=Fraction(1, 16), depth=3, beam=6, seed=0,
                           rim_lip=None) -> HeisenbergTower:
    eps = as_fraction(eps)
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if (depth + 1) * math.log10(eps.denominator) > 300:
        raise ScaleUnderflow("edge lengths underflow double precision at this depth")
    rim_lip = rim_speed(rim_fn) if rim_lip is None else rim_lip
    root = root_copy(rim_fn, eps)
    T = HeisenbergTower(eps, rim_fn, rim_lip, depth, beam, seed, root)
    T.lip.append(max(root.lipschitz(), rim_lip))
    T.copies_measured.append(1)
    rng = np.random.default_rng(seed)
    level = [root]
    for _ in range(depth):
        nxt = []
        for cp in level:
            sc = T._cell_scores(cp)
            top = np.argsort(-sc, kind="stable")[:beam]
            rnd = rng.choice(len(sc), size=min(beam, len(sc)), replace=False)
            for cell in np.unique(np.concatenate([top, rnd])):
                ch = cp.child(int(cell))
                nxt.append(ch)
                T._cache[ch.address] = ch
        worst = max(x.lipschitz() for x in nxt)
        T.lip.append(max(T.lip[-1], worst))
        T.copies_measured.append(len(nxt))
        nxt.sort(key=lambda x: -x.lipschitz())
        level = nxt[:beam]
    return T


def tower_rows(T: HeisenbergTower, slack=1.1):
    rows = []
    for i, L in enumerate(T.lip):
        bound = T.c ** (i + 1) * T.rim_lip
        ratio = L / T.lip[i - 1] if i and T.lip[i - 1] > 0 else float("nan")
        rows.append({"level": i, "lip": L, "bound": bound, "ratio": ratio, "copies": T.copies_measured[i],
                     "pass": L <= bound * slack})
    return rows


# ---------------------------------------------------------------------------
# graph-valued base map on a high-dimensional cube with holes


def heis_domain_layout(c, eps, min_q=2):
    """Holes of side rho = 1/(2q) >= c eps with N(eps) <= q^D, returning (q, D, rho)."""
    eps = as_fraction(eps)
    N = ConeComplex(1, eps).N
    q = int(math.floor(1.0 / (2.0 * c * float(eps))))
    if q < min_q:
        raise ValueError(f"eps = {eps} too large for c = {c:.3g}: need eps <= 1/(4c)")
    D = 1
    while q**D < N:
        D += 1
    return q, D, 1.0 / (2 * q)


@dataclass
class GraphBaseMap:
    """h: K -> |J(eps)| for the cone complex, with values (edge id, fraction from lower vertex).

    K is I^D with N(eps) holes of side rho centred in the first N of q^D
    subcubes.  Collars and shells mirror the Euclidean base map; the
    contraction routes follow a breadth-first spanning tree rooted at the
    rim vertex over (0, 0).
    """

    cone: ConeComplex
    q: int
    D: int
    turns: float = 1.0

    @property
    def rho(self):
        return 1.0 / (2 * self.q)

    @property
    def eps(self):
        return float(self.cone.eps)

    @property
    def N(self):
        return self.cone.N

    @cached_property
    def tree(self):
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import breadth_first_order

        V = self.cone.vertex_count
        e = self.cone.edges
        A = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(V, V)).tocsr()
        order, pred = breadth_first_order(A, int(self.root), directed=False, return_predecessors=True)
        depth = np.zeros(V, dtype=np.int64)
        for v in order[1:]:
            depth[v] = depth[pred[v]] + 1
        return pred, depth

    @property
    def root(self):
        return int(self.cone.rim[0])

    @cached_property
    def cell_edges(self):
        return _cell_edge_ids(self.cone)

    @cached_property
    def route_max(self):
        _, depth = self.tree
        corners = self.cone.cells[:, 0]
        return float(depth[corners].max()) * self.eps

    @cached_property
    def lip_pieces(self):
        r = self.rho
        Lt = Th = 4.0 * abs(self.turns)
        k = math.sqrt(2.0)
        return {
            "outer": Lt * k * 0.5 / (0.5 - 0.25 * r) + 4.0 * Th / r,
            "shell": (self.eps / r) * (Lt * k + 8.0 * Th),
            "route": 8.0 * self.route_max / r,
        }

    @property
    def lip(self):
        return max(self.lip_pieces.values())

    @cached_property
    def _edge_keys(self):
        e = self.cone.edges
        keys = e[:, 0] * self.cone.vertex_count + e[:, 1]
        order = np.argsort(keys)
        return keys[order], order

    @cached_property
    def _incident(self):
        """One incident edge per vertex, and whether the vertex is its lower end."""
        e = self.cone.edges
        V = self.cone.vertex_count
        inc = np.empty(V, dtype=np.int64)
        low = np.empty(V, dtype=bool)
        inc[e[::-1, 1]] = np.arange(len(e))[::-1]
        low[e[::-1, 1]] = False
        inc[e[::-1, 0]] = np.arange(len(e))[::-1]
        low[e[::-1, 0]] = True
        return inc, low

    @cached_property
    def _routes(self):
        """Vertex sequence from each cell corner to the root along the tree (padded with the root)."""
        pred, depth = self.tree
        start = self.cone.cells[:, 0]
        H = int(depth[start].max())
        out = np.empty((len(start), H + 1), dtype=np.int64)
        cur = start.copy()
        out[:, 0] = cur
        for j in range(1, H + 1):
            nxt = pred[cur]
            cur = np.where(nxt >= 0, nxt, cur)
            out[:, j] = cur
        return out

    def _edge_of(self, u, v):
        keys, order = self._edge_keys
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        k = lo * self.cone.vertex_count + hi
        pos = np.searchsorted(keys, k)
        if np.any(keys[np.minimum(pos, len(keys) - 1)] != k):
            raise KeyError("not an edge")
        return order[pos], u < v

    def _rim_point(self, pos):
        R = self.cone.ring_size
        s = np.mod(pos * self.cone.m, R)
        j = np.minimum(np.floor(s).astype(np.int64), R - 1)
        f = s - j
        u = self.cone.rim[j]
        v = self.cone.rim[(j + 1) % R]
        eid, fwd = self._edge_of(u, v)
        return eid, np.where(fwd, f, 1.0 - f)

    def _cell_point(self, cell, pos):
        pos = np.mod(pos, 4.0)
        side = np.minimum(np.floor(pos).astype(np.int64), 3)
        f = pos - side
        cyc = self.cone.cells[cell]
        u = cyc[np.arange(len(cell)), side]
        v = cyc[np.arange(len(cell)), (side + 1) % 4]
        eid, fwd = self._edge_of(u, v)
        return eid, np.where(fwd, f, 1.0 - f)

    def _route_point(self, cell, tau):
        _, depth = self.tree
        routes = self._routes
        start = routes[cell, 0]
        L = depth[start]
        s = tau * L
        hop = np.minimum(np.floor(s).astype(np.int64), np.maximum(L - 1, 0))
        f = np.where(L > 0, s - hop, 0.0)
        u = routes[cell, hop]
        v = np.where(L > 0, routes[cell, np.minimum(hop + 1, routes.shape[1] - 1)], u)
        return self._vertex_or_edge(u, v, f)

    def _vertex_or_edge(self, u, v, f):
        same = u == v
        eid = np.empty(len(u), dtype=np.int64)
        lam = np.empty(len(u))
        if (~same).any():
            e, fwd = self._edge_of(u[~same], v[~same])
            eid[~same] = e
            lam[~same] = np.where(fwd, f[~same], 1.0 - f[~same])
        if same.any():
            inc, low = self._incident
            eid[same] = inc[u[same]]
            lam[same] = np.where(low[u[same]], 0.0, 1.0)
        return eid, lam

    def __call__(self, y):
        """Graph points (edge ids, fractions) for points of K given in unit coordinates."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        P = len(y)
        r = self.rho
        eid = np.empty(P, dtype=np.int64)
        lam = np.empty(P)
        delta = np.minimum(y, 1 - y).min(axis=1)
        outer = delta < 0.25 * r
        if outer.any():
            yo = y[outer]
            u = delta[outer] / (0.25 * r)
            rr = np.abs(yo - 0.5).max(axis=1)
            last = 0.5 + (yo[:, -1] - 0.5) * 0.5 / rr
            eid[outer], lam[outer] = self._rim_point((1 - u) * 4 * self.turns * last)
        s = np.clip(np.floor(y * self.q).astype(np.int64), 0, self.q - 1)
        lex = np.zeros(P, dtype=np.int64)
        for a in range(self.D):
            lex = lex * self.q + s[:, a]
        c = (s + 0.5) / self.q
        rho = np.abs(y - c).max(axis=1)
        shell = ~outer & (lex < self.N) & (rho <= 0.75 * r)
        if np.any(~outer & (lex < self.N) & (rho < 0.5 * r)):
            raise ValueError("point lies inside a hole")
        bulk = ~outer & ~shell
        if bulk.any():
            root = np.full(bulk.sum(), self.root)
            eid[bulk], lam[bulk] = self._vertex_or_edge(root, root, np.zeros(bulk.sum()))
        if shell.any():
            sel = np.flatnonzero(shell)
            u = np.clip((rho[sel] - 0.5 * r) / (0.25 * r), 0.0, None)
            a_ = u <= 0.5
            if a_.any():
                i = sel[a_]
                ql = (y[i, -1] - c[i, -1]) * (0.5 * r / rho[i]) / r + 0.5
                eid[i], lam[i] = self._cell_point(lex[i], (1 - 2 * u[a_]) * 4 * self.turns * ql)
            if (~a_).any():
                i = sel[~a_]
                eid[i], lam[i] = self._route_point(lex[i], 2 * u[~a_] - 1)
        return eid, lam

    def locate(self, y):
        """Hole index containing each point (-1 for points of K)."""
        y = np.atleast_2d(y)
        s = np.clip(np.floor(y * self.q).astype(np.int64), 0, self.q - 1)
        lex = np.zeros(len(y), dtype=np.int64)
        for a in range(self.D):
            lex = lex * self.q + s[:, a]
        rho = np.abs(y - (s + 0.5) / self.q).max(axis=1)
        return np.where((lex < self.N) & (rho < 0.5 * self.rho), lex, -1), (s + 0.5) / self.q


def build_graph_base_map(tower: HeisenbergTower, turns=1.0) -> GraphBaseMap:
    q, D, _ = heis_domain_layout(tower.c, tower.eps)
    return GraphBaseMap(tower.root.cone, q, D, turns)


def evaluate_heis(tower: HeisenbergTower, gamma: GraphBaseMap, x, depth):
    """r_depth(x) = sigma(gamma(x)); points still inside a depth-level hole get its corner value.

    Returns (values, levels); level depth+1 marks the anchored points.
    """
    if gamma.cone.eps != tower.eps:
        raise ValueError("tower and base map use different eps")
    X = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.empty((len(X), 3))
    levels = np.empty(len(X), dtype=np.int64)
    for p, y0 in enumerate(X):
        y = y0.copy()
        addr = ()
        for lev in range(depth + 1):
            hole, c = gamma.locate(y[None])
            hole = int(hole[0])
            if hole < 0:
                e, l = gamma(y[None])
                out[p] = tower.copy(addr).edge_points(e, l)[0]
                levels[p] = lev
                break
            if lev == depth:
                cp = tower.copy(addr)
                out[p] = cp.values[cp.cone.cells[hole, 0]]
                levels[p] = depth + 1
                break
            y = (y - (c[0] - 0.5 * gamma.rho)) / gamma.rho
            addr = addr + (hole,)
    return out, levels


def shellwise_lipschitz(tower: HeisenbergTower, gamma: GraphBaseMap, address, pairs=10000, seed=0):
    """Lipschitz ratio of sigma∘gamma over random pairs in the level-i piece of K at ``address``.

    Distances in the domain are global: the piece is a copy of K scaled by rho^i.
    """
    rng = np.random.default_rng(seed)
    cp = tower.copy(address)
    scale = gamma.rho ** len(address)
    D = gamma.D

    def draw(m):
        out = np.empty((0, D))
        while len(out) < m:
            y = rng.random((2 * m, D))
            y = y[gamma.locate(y)[0] < 0]
            out = np.vstack([out, y])
        return out[:m]

    h = pairs // 2
    a1, b1 = draw(h), draw(h)
    a2 = draw(pairs - h)
    u = rng.normal(size=a2.shape)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    b2 = np.clip(a2 + u * 10.0 ** rng.uniform(-6, -1, size=(len(a2), 1)), 0, 1)
    keep = gamma.locate(b2)[0] < 0
    a = np.vstack([a1, a2[keep]])
    b = np.vstack([b1, b2[keep]])
    fa = cp.edge_points(*gamma(a))
    fb = cp.edge_points(*gamma(b))
    dx = np.linalg.norm(a - b, axis=1) * scale
    ok = dx > 0
    q = heis.koranyi_dist(fa[ok], fb[ok]) / dx[ok]
    return float(q.max()), int(ok.sum())
