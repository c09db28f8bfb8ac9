"""Cubical complexes: grid skeleta, cubes with holes, cone complexes and
substitution towers with address-based genealogy.

Side lengths are exact :class:`fractions.Fraction` values so that the
reciprocal-integer conditions are checked without rounding.  Cells, holes and
faces are numbered lexicographically with the first coordinate most
significant; hole ``i`` of a cube with holes corresponds to cell ``i`` of the
grid it is mapped to.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np


class InvalidEpsilon(ValueError):
    pass


class TooManyHoles(ValueError):
    pass


def as_fraction(eps) -> Fraction:
    if isinstance(eps, Fraction):
        return eps
    if isinstance(eps, int):
        return Fraction(eps)
    if isinstance(eps, str):
        return Fraction(eps)
    if isinstance(eps, float):
        # floats are accepted only when they are exact reciprocals of integers
        f = Fraction(eps).limit_denominator(10**9)
        if float(f) != eps:
            raise InvalidEpsilon(f"epsilon {eps!r} is not an exact rational")
        return f
    raise InvalidEpsilon(f"cannot interpret epsilon {eps!r}")


def reciprocal_int(eps) -> int:
    eps = as_fraction(eps)
    if eps <= 0 or eps.numerator != 1:
        raise InvalidEpsilon(f"1/epsilon must be a positive integer, got epsilon={eps}")
    return eps.denominator


def epsilon_inequality(eps, n, k) -> bool:
    """(2 eps)^-(k+1) > eps^-(n+1), evaluated exactly."""
    eps = as_fraction(eps)
    return (1 / (2 * eps)) ** (k + 1) > (1 / eps) ** (n + 1)


def choose_epsilon(n: int, k: int, even: bool = False) -> Fraction:
    """Largest eps = 1/m with (2 eps)^-(k+1) > eps^-(n+1).

    With ``even=True`` only even m are considered, so that the cube with
    holes (which needs 1/(2 eps) integral) can be built from the result.
    """
    if n < 1 or k < n + 1:
        raise ValueError("need n >= 1 and k >= n + 1")
    m = 2 if even else 1
    while True:
        if m ** (k + 1) > 2 ** (k + 1) * m ** (n + 1):
            return Fraction(1, m)
        m += 2 if even else 1


def lex_multi_index(i, m, dim):
    """Multi-index of ``i`` in an m^dim grid, first coordinate most significant."""
    out = []
    for _ in range(dim):
        out.append(i % m)
        i //= m
    return tuple(reversed(out))


def lex_index(idx, m):
    i = 0
    for a in idx:
        i = i * m + a
    return i


@dataclass(frozen=True)
class GridSkeleton:
    """n-skeleton of the subdivision of I^{n+1} into cubes of side eps."""

    n: int
    eps: Fraction

    def __post_init__(self):
        object.__setattr__(self, "eps", as_fraction(self.eps))
        reciprocal_int(self.eps)
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def m(self):
        return self.eps.denominator

    @property
    def dim(self):
        return self.n + 1

    @property
    def N(self):
        return self.m ** self.dim

    def cell_index(self, i):
        return lex_multi_index(i, self.m, self.dim)

    @cached_property
    def corners(self):
        idx = np.array([self.cell_index(i) for i in range(self.N)], dtype=float)
        return idx / self.m

    @cached_property
    def centers(self):
        return self.corners + 0.5 / self.m

    def face_count(self, j):
        """Number of j-dimensional faces of the grid."""
        d, m = self.dim, self.m
        return math.comb(d, j) * m**j * (m + 1) ** (d - j)

    def skeleton_counts(self):
        return {j: self.face_count(j) for j in range(self.n + 1)}

    def faces(self, j):
        """Enumerate j-faces as (free axes, anchor multi-index)."""
        d, m = self.dim, self.m
        for free in itertools.combinations(range(d), j):
            ranges = [range(m) if a in free else range(m + 1) for a in range(d)]
            for anchor in itertools.product(*ranges):
                yield free, anchor

    def incident_cells(self, free, anchor):
        """Top cells containing the face ``(free, anchor)``."""
        d, m = self.dim, self.m
        fixed = [a for a in range(d) if a not in free]
        out = []
        for shifts in itertools.product((-1, 0), repeat=len(fixed)):
            idx = list(anchor)
            ok = True
            for a, s in zip(fixed, shifts):
                idx[a] += s
                ok &= 0 <= idx[a] < m
            if ok:
                out.append(lex_index(idx, m))
        return out

    @cached_property
    def vertices(self):
        m = self.m
        return np.array(list(itertools.product(range(m + 1), repeat=self.dim)), dtype=float) / m

    @cached_property
    def edges(self):
        """Edges as index pairs into :attr:`vertices`."""
        m = self.m
        out = []
        for free, anchor in self.faces(1):
            a = free[0]
            hi = list(anchor)
            hi[a] += 1
            out.append((lex_index(anchor, m + 1), lex_index(hi, m + 1)))
        return np.array(out, dtype=np.int64)

    def distance_to_skeleton(self, pts):
        """Euclidean distance from points of I^{n+1} to the n-skeleton |J|.

        A point is on |J| iff one coordinate is a multiple of eps.
        """
        pts = np.asarray(pts, dtype=float)
        e = 1.0 / self.m
        off = np.abs(pts - np.round(pts / e) * e)
        outside = np.clip(-pts, 0, None) + np.clip(pts - 1.0, 0, None)
        return off.min(axis=-1) + np.sqrt((outside**2).sum(-1))

    def locate(self, pts):
        pts = np.asarray(pts, dtype=float)
        idx = np.clip(np.floor(pts * self.m).astype(np.int64), 0, self.m - 1)
        out = np.zeros(pts.shape[:-1], dtype=np.int64)
        for a in range(self.dim):
            out = out * self.m + idx[..., a]
        return out

    def to_text(self):
        lines = ["lipfill-grid 1", f"n = {self.n}", f"epsilon = {self.eps}", f"N = {self.N}", "# index corner..."]
        for i in range(self.N):
            lines.append(f"{i + 1} " + " ".join(f"{Fraction(c, self.m)}" for c in self.cell_index(i)))
        return "\n".join(lines) + "\n"


def build_grid_skeleton(n, eps) -> GridSkeleton:
    return GridSkeleton(n, as_fraction(eps))


@dataclass(frozen=True)
class HoleDomain:
    """I^{k+1} with N cubical holes of side ``hole_side``.

    The cube is cut into subcubes of side ``2 * hole_side``; the first N in
    lexicographic order carry a hole centred in them.  For the Euclidean
    construction ``hole_side == eps``.
    """

    k: int
    eps: Fraction
    N: int

    def __post_init__(self):
        object.__setattr__(self, "eps", as_fraction(self.eps))
        two = 2 * self.eps
        if two.numerator != 1:
            raise InvalidEpsilon(f"1/(2 eps) = {1 / two} is not an integer")
        if self.N < 0 or self.N > self.q ** self.dim:
            raise TooManyHoles(f"N={self.N} exceeds (2 eps)^-(k+1) = {self.q ** self.dim}")

    @property
    def dim(self):
        return self.k + 1

    @property
    def q(self):
        """Subcubes per axis, 1/(2 eps)."""
        return (1 / (2 * self.eps)).numerator

    @property
    def hole_side(self):
        return float(self.eps)

    def subcube_index(self, i):
        return lex_multi_index(i, self.q, self.dim)

    @cached_property
    def centers(self):
        idx = np.array([self.subcube_index(i) for i in range(self.N)], dtype=float).reshape(self.N, self.dim)
        return (idx + 0.5) / self.q

    def locate(self, pts):
        """Hole index (0-based) containing each point, or -1 for points of K.

        Hole boundaries belong to K.
        """
        pts = np.asarray(pts, dtype=float)
        q = self.q
        idx = np.clip(np.floor(pts * q).astype(np.int64), 0, q - 1)
        lex = np.zeros(pts.shape[:-1], dtype=np.int64)
        for a in range(self.dim):
            lex = lex * q + idx[..., a]
        center = (idx + 0.5) / q
        inside = np.max(np.abs(pts - center), axis=-1) < 0.5 * self.hole_side
        return np.where((lex < self.N) & inside, lex, -1)

    def hole_volume(self):
        return self.N * self.hole_side**self.dim


def build_hole_domain(k, eps, N) -> HoleDomain:
    return HoleDomain(k, as_fraction(eps), int(N))


def cone_cell_count(n, eps) -> int:
    m = reciprocal_int(eps)
    return (2 * n + 2) * m ** (n + 2) + m ** (n + 1)


def square_wrap(theta):
    """Arclength parametrisation of the boundary of the unit square.

    Starts at (0, 0) and runs counterclockwise; period 4.
    """
    th = np.mod(np.asarray(theta, dtype=float), 4.0)
    seg = np.minimum(np.floor(th), 3.0)
    f = th - seg
    x = np.select([seg == 0, seg == 1, seg == 2], [f, np.ones_like(f), 1.0 - f], np.zeros_like(f))
    y = np.select([seg == 0, seg == 1, seg == 2], [np.zeros_like(f), f, np.ones_like(f)], 1.0 - f)
    return np.stack([x, y], axis=-1)


@dataclass(frozen=True)
class ConeComplex:
    """Tiling of ((boundary of I^{n+1}) x [0, 1/eps]) union (I^{n+1} x {0}) by eps-cubes.

    Only n = 1 is materialised (the 1-skeleton is a graph).  Ring vertex
    ``(j, l)`` sits at perimeter position ``j * eps`` and height ``l * eps``;
    the rim is the ring at height ``1/eps`` and is identified with the
    boundary of the unit square, starting at (0, 0) and running
    counterclockwise.
    """

    n: int
    eps: Fraction

    def __post_init__(self):
        object.__setattr__(self, "eps", as_fraction(self.eps))
        reciprocal_int(self.eps)

    @property
    def m(self):
        return self.eps.denominator

    @property
    def N(self):
        return cone_cell_count(self.n, self.eps)

    @property
    def ring_size(self):
        return 4 * self.m

    @property
    def levels(self):
        return self.m * self.m + 1

    def _require_graph(self):
        if self.n != 1:
            raise NotImplementedError("cone complexes are materialised for n = 1 only")

    def ring_id(self, j, l):
        return l * self.ring_size + (j % self.ring_size)

    @cached_property
    def _base_interior(self):
        m = self.m
        return [(a, b) for a in range(1, m) for b in range(1, m)]

    @cached_property
    def base_grid_id(self):
        """Map from base grid node (a, b), 0 <= a, b <= m, to a vertex id."""
        self._require_graph()
        m, R = self.m, self.ring_size
        ids = {}
        for j in range(R):
            pos = square_wrap(j / m)
            ids[(int(round(pos[0] * m)), int(round(pos[1] * m)))] = j
        start = R * self.levels
        for off, ab in enumerate(self._base_interior):
            ids[ab] = start + off
        return ids

    @property
    def vertex_count(self):
        return self.ring_size * self.levels + len(self._base_interior)

    @cached_property
    def coords(self):
        """Vertex coordinates in R^{n+2}: (v, t)."""
        self._require_graph()
        m, R = self.m, self.ring_size
        j = np.tile(np.arange(R), self.levels)
        l = np.repeat(np.arange(self.levels), R)
        v = square_wrap(j / m)
        ring = np.column_stack([v, l / m])
        base = np.array([(a / m, b / m, 0.0) for a, b in self._base_interior]).reshape(-1, 3)
        return np.vstack([ring, base])

    @cached_property
    def vertex_t(self):
        return self.coords[:, 2]

    @cached_property
    def rim(self):
        """Rim vertex ids in counterclockwise order from (0, 0)."""
        self._require_graph()
        return np.arange(self.ring_size) + (self.levels - 1) * self.ring_size

    @cached_property
    def rim_positions(self):
        return np.arange(self.ring_size) / self.m

    @cached_property
    def edges(self):
        self._require_graph()
        R, L = self.ring_size, self.levels
        out = []
        for l in range(L):
            for j in range(R):
                out.append((self.ring_id(j, l), self.ring_id(j + 1, l)))
                if l + 1 < L:
                    out.append((self.ring_id(j, l), self.ring_id(j, l + 1)))
        ids = self.base_grid_id
        for (a, b), u in ids.items():
            for da, db in ((1, 0), (0, 1)):
                nb = (a + da, b + db)
                if nb in ids:
                    v = ids[nb]
                    # base boundary edges are already ring edges at l = 0
                    if u < R and v < R:
                        continue
                    out.append((u, v))
        e = np.array(out, dtype=np.int64)
        return np.sort(e, axis=1)

    @cached_property
    def edge_index(self):
        return {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}

    @cached_property
    def rim_edges(self):
        """Boolean mask of edges lying on the rim ring."""
        top = (self.levels - 1) * self.ring_size
        return (self.edges[:, 0] >= top) & (self.edges[:, 1] < top + self.ring_size)

    @cached_property
    def cells(self):
        """Square cells as 4 vertex ids in cyclic order (rim-compatible orientation)."""
        self._require_graph()
        R = self.ring_size
        out = []
        for l in range(self.levels - 1):
            for j in range(R):
                out.append((self.ring_id(j, l), self.ring_id(j + 1, l), self.ring_id(j + 1, l + 1), self.ring_id(j, l + 1)))
        ids = self.base_grid_id
        for a in range(self.m):
            for b in range(self.m):
                out.append((ids[(a, b)], ids[(a + 1, b)], ids[(a + 1, b + 1)], ids[(a, b + 1)]))
        return np.array(out, dtype=np.int64)

    def cell_edges(self, c):
        """Edge ids of cell ``c`` with orientation flags (True if stored u->v matches the cycle)."""
        cyc = self.cells[c]
        out = []
        for i in range(4):
            u, v = int(cyc[i]), int(cyc[(i + 1) % 4])
            key = (min(u, v), max(u, v))
            out.append((self.edge_index[key], u < v))
        return out

    def count_cells_by_enumeration(self):
        """Count eps-cells of the tiling by enumeration (any n)."""
        m, n = self.m, self.n
        side_faces = 2 * (n + 1)
        per_face = sum(1 for _ in itertools.product(range(m), repeat=n)) * (m * m)
        base = sum(1 for _ in itertools.product(range(m), repeat=n + 1))
        return side_faces * per_face + base


def build_cone_complex(n, eps) -> ConeComplex:
    return ConeComplex(n, as_fraction(eps))


# ---------------------------------------------------------------------------
# substitution towers


def format_address(addr):
    return ".".join(str(a + 1) for a in addr)


def parse_address(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(int(tok) - 1 for tok in text.split("."))


@dataclass(frozen=True)
class SubstitutionTower:
    """X_0 = K inside X_1 inside ...: every hole of X_i receives a copy of K.

    Addresses are tuples of 0-based hole indices (printed 1-based, dotted);
    the hole with address ``(a_0, ..., a_i)`` has side ``domain_scale^(i+1)``
    and corresponds to the codomain cell of side ``codomain_scale^(i+1)``.
    """

    base: HoleDomain
    depth: int = 0
    domain_scale: float | None = None
    codomain_scale: float | None = None

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.domain_scale is None:
            object.__setattr__(self, "domain_scale", float(self.base.eps))
        if self.codomain_scale is None:
            object.__setattr__(self, "codomain_scale", float(self.base.eps))

    @property
    def N(self):
        return self.base.N

    def hole_count(self, level=None):
        level = self.depth if level is None else level
        return self.N ** (level + 1)

    def hole_side(self, level=None):
        level = self.depth if level is None else level
        return self.domain_scale ** (level + 1)

    def codomain_side(self, level=None):
        level = self.depth if level is None else level
        return self.codomain_scale ** (level + 1)

    def total_hole_volume(self, level=None):
        level = self.depth if level is None else level
        return self.hole_count(level) * self.hole_side(level) ** self.base.dim

    def refine(self):
        return SubstitutionTower(self.base, self.depth + 1, self.domain_scale, self.codomain_scale)

    def is_hole(self, addr):
        return 1 <= len(addr) <= self.depth + 1 and all(0 <= a < self.N for a in addr)

    def hole_box(self, addr):
        """Lower corner and side of the hole with the given address."""
        if not self.is_hole(addr):
            raise KeyError(f"{format_address(addr)!r} is not a hole address at depth {self.depth}")
        corner = np.zeros(self.base.dim)
        scale = 1.0
        centers = self.base.centers
        h = self.base.hole_side
        for a in addr:
            corner = corner + scale * (centers[a] - 0.5 * h)
            scale *= self.domain_scale
        return corner, scale

    def addresses(self, level=None):
        level = self.depth if level is None else level
        return itertools.product(range(self.N), repeat=level + 1)

    def address_of(self, pts, max_level=None):
        """Deepest hole address (up to ``max_level``) containing each point."""
        max_level = self.depth if max_level is None else max_level
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = []
        for p in pts:
            y = p.copy()
            addr = []
            for _ in range(max_level + 1):
                j = int(self.base.locate(y[None])[0])
                if j < 0:
                    break
                addr.append(j)
                y = (y - (self.base.centers[j] - 0.5 * self.base.hole_side)) / self.base.hole_side
            out.append(tuple(addr))
        return out

    def to_text(self, max_rows=100000):
        lines = [
            "lipfill-tower 1",
            f"k = {self.base.k}",
            f"epsilon = {self.base.eps}",
            f"N = {self.N}",
            f"depth = {self.depth}",
            f"domain_scale = {self.domain_scale!r}",
            f"codomain_scale = {self.codomain_scale!r}",
            "# address corner... side",
        ]
        rows = 0
        for level in range(self.depth + 1):
            for addr in self.addresses(level):
                if rows >= max_rows:
                    raise ValueError("address table too large to export")
                corner, side = self.hole_box(addr)
                lines.append(f"{format_address(addr)} " + " ".join(f"{c:.17g}" for c in corner) + f" {side:.17g}")
                rows += 1
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        head = {}
        for ln in text.splitlines()[1:]:
            if ln.startswith("#"):
                break
            key, _, val = ln.partition("=")
            head[key.strip()] = val.strip()
        base = HoleDomain(int(head["k"]), Fraction(head["epsilon"]), int(head["N"]))
        return cls(base, int(head["depth"]), float(head["domain_scale"]), float(head["codomain_scale"]))


def refine_tower(t: SubstitutionTower) -> SubstitutionTower:
    return t.refine()
