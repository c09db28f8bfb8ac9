"""Self-similar Lipschitz maps I^{k+1} -> I^{n+1} built from a base map h: K -> |J|.

Only n = 1 is constructed explicitly.  The codomain skeleton J is the grid
graph of side eps in I^2 and the boundary map beta: S^k -> S^1 factors
through the height coordinate of the cube boundary,

    beta(q) = w(lift(q)),   lift(q) = 4 * turns * q_last,

with ``w`` the counterclockwise arclength parametrisation of the boundary
of the unit square from (0, 0).  ``h`` is assembled from three pieces:

* an outer collar contracting the lift to 0 towards the inside of the cube,
* a shell of width eps/4 around every hole whose outer half contracts the
  scaled copy of beta to the cell corner and whose inner half then runs the
  corner back to the origin along a comb tree (bottom row plus all
  vertical grid lines),
* the constant value (0, 0) everywhere else.

The self-similar map replaces every hole by a scaled copy of itself.  At a
finite depth the innermost holes are filled by a contraction of the scaled
copy of beta over the cell, which keeps the truncated map Lipschitz and
within sqrt(2) eps^{d+1} of the limit.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from ._accel import USE_NUMBA, njit
from .analysis import SampledMap, degeneracy_fraction, lipschitz_estimate
from .complexes import GridSkeleton, HoleDomain, as_fraction, choose_epsilon, square_wrap
from .homotopy import loop, winding_numbers

MAP_SCHEMA = "lipfill-map 1"


class Unsupported(NotImplementedError):
    pass


class NotNullHomotopic(ValueError):
    """The boundary map has a nonzero obstruction vector on some probing loop."""


class Incompatible(ValueError):
    pass


@dataclass(frozen=True)
class BetaSpec:
    """Boundary map family: the height coordinate wrapped ``turns`` times around the square."""

    dim: int
    turns: float = 1.0
    family: str = "height-wrap"

    def __post_init__(self):
        if self.family != "height-wrap":
            raise Unsupported(f"unknown boundary map family {self.family!r}")
        if self.dim < 2:
            raise ValueError("domain cube must have dimension >= 2")

    @property
    def lift_lip(self):
        return 4.0 * abs(self.turns)

    @property
    def lift_max(self):
        return 4.0 * abs(self.turns)

    def lift(self, q):
        q = np.atleast_2d(np.asarray(q, dtype=float))
        return 4.0 * self.turns * q[:, -1]

    def __call__(self, q):
        return square_wrap(self.lift(q))

    def to_text(self):
        return f"family = {self.family}\ndim = {self.dim}\nturns = {self.turns!r}\n"

    @classmethod
    def from_text(cls, text):
        kv = _parse_kv(text)
        return cls(int(kv["dim"]), float(kv["turns"]), kv.get("family", "height-wrap"))


# ---------------------------------------------------------------------------
# kernels
#
# All kernels share the parameter layout (D, q, N, m, eps, turns).  ``q`` is the
# number of subcubes per axis of K, ``m`` = 1/eps the cells per axis of J.


@njit
def _wrap_nb(th):
    th = th - 4.0 * math.floor(th / 4.0)
    if th >= 4.0:
        th = 0.0
    s = math.floor(th)
    f = th - s
    if s == 0:
        return f, 0.0
    if s == 1:
        return 1.0, f
    if s == 2:
        return 1.0 - f, 1.0
    return 0.0, 1.0 - f


@njit
def _route_nb(a, b, tau):
    # corner (a, b) to the origin: down the column, then left along the bottom row
    L = a + b
    if L <= 0.0:
        return 0.0, 0.0
    s = tau * L
    if s <= b:
        return a, b - s
    return a - (s - b), 0.0


@njit
def _h_point_nb(y, D, q, N, m, eps, turns):
    """Base map at one point of I^D; returns (x, y) in I^2."""
    delta = 1.0
    for a in range(D):
        v = min(y[a], 1.0 - y[a])
        if v < delta:
            delta = v
    if delta < 0.25 * eps:
        # outer collar
        u = delta / (0.25 * eps)
        r = 0.0
        for a in range(D):
            v = abs(y[a] - 0.5)
            if v > r:
                r = v
        ylast = 0.5 + (y[D - 1] - 0.5) * 0.5 / r
        return _wrap_nb((1.0 - u) * 4.0 * turns * ylast)
    lex = 0
    for a in range(D):
        s = int(y[a] * q)
        if s > q - 1:
            s = q - 1
        lex = lex * q + s
    if lex >= N:
        return 0.0, 0.0
    rho = 0.0
    rem = lex
    ylast_c = 0.0
    for a in range(D - 1, -1, -1):
        s = rem % q
        rem //= q
        c = (s + 0.5) / q
        if a == D - 1:
            ylast_c = c
        v = abs(y[a] - c)
        if v > rho:
            rho = v
    if rho > 0.75 * eps:
        return 0.0, 0.0
    i0 = lex // m
    i1 = lex % m
    ca = i0 / m
    cb = i1 / m
    u = (rho - 0.5 * eps) / (0.25 * eps)
    if u < 0.0:
        u = 0.0
    if u <= 0.5:
        ql = (y[D - 1] - ylast_c) * (0.5 * eps / rho) / eps + 0.5
        wx, wy = _wrap_nb((1.0 - 2.0 * u) * 4.0 * turns * ql)
        return ca + eps * wx, cb + eps * wy
    return _route_nb(ca, cb, 2.0 * u - 1.0)


@njit
def _cap_point_nb(y, D, turns):
    """Filling of a unit hole: contraction of beta over sup-radius [1/4, 1/2]."""
    r = 0.0
    for a in range(D):
        v = abs(y[a] - 0.5)
        if v > r:
            r = v
    if r <= 0.25:
        return 0.0, 0.0
    u = (0.5 - r) / 0.25
    if u < 0.0:
        u = 0.0
    ylast = 0.5 + (y[D - 1] - 0.5) * 0.5 / r
    return _wrap_nb((1.0 - u) * 4.0 * turns * ylast)


@njit
def _eval_nb(X, depth, D, q, N, m, eps, turns, out, level):
    y = np.empty(D)
    for p in range(X.shape[0]):
        for a in range(D):
            y[a] = X[p, a]
        ox = 0.0
        oy = 0.0
        scale = 1.0
        done = False
        for lev in range(depth + 1):
            lex = 0
            for a in range(D):
                s = int(y[a] * q)
                if s > q - 1:
                    s = q - 1
                if s < 0:
                    s = 0
                lex = lex * q + s
            inside = False
            if lex < N:
                rho = 0.0
                rem = lex
                for a in range(D - 1, -1, -1):
                    s = rem % q
                    rem //= q
                    v = abs(y[a] - (s + 0.5) / q)
                    if v > rho:
                        rho = v
                inside = rho < 0.5 * eps
            if not inside:
                hx, hy = _h_point_nb(y, D, q, N, m, eps, turns)
                out[p, 0] = ox + scale * hx
                out[p, 1] = oy + scale * hy
                level[p] = lev
                done = True
                break
            ca = (lex // m) / m
            cb = (lex % m) / m
            rem = lex
            for a in range(D - 1, -1, -1):
                s = rem % q
                rem //= q
                y[a] = (y[a] - ((s + 0.5) / q - 0.5 * eps)) / eps
            if lev == depth:
                cx, cy = _cap_point_nb(y, D, turns)
                out[p, 0] = ox + scale * (ca + eps * cx)
                out[p, 1] = oy + scale * (cb + eps * cy)
                level[p] = depth + 1
                done = True
                break
            ox += scale * ca
            oy += scale * cb
            scale *= eps
        if not done:
            out[p, 0] = ox
            out[p, 1] = oy
            level[p] = depth + 1


def _wrap_np(th):
    return square_wrap(th)


def _lex_np(y, q):
    s = np.clip(np.floor(y * q).astype(np.int64), 0, q - 1)
    lex = np.zeros(len(y), dtype=np.int64)
    for a in range(y.shape[1]):
        lex = lex * q + s[:, a]
    return lex, (s + 0.5) / q


def _h_np(y, D, q, N, m, eps, turns):
    out = np.zeros((len(y), 2))
    delta = np.minimum(y, 1.0 - y).min(axis=1)
    outer = delta < 0.25 * eps
    if outer.any():
        yo = y[outer]
        u = delta[outer] / (0.25 * eps)
        r = np.abs(yo - 0.5).max(axis=1)
        ylast = 0.5 + (yo[:, -1] - 0.5) * 0.5 / r
        out[outer] = _wrap_np((1.0 - u) * 4.0 * turns * ylast)
    rest = ~outer
    lex, c = _lex_np(y, q)
    rho = np.abs(y - c).max(axis=1)
    shell = rest & (lex < N) & (rho <= 0.75 * eps)
    if shell.any():
        ys, cs, ls, rs = y[shell], c[shell], lex[shell], rho[shell]
        ca = (ls // m) / m
        cb = (ls % m) / m
        u = np.clip((rs - 0.5 * eps) / (0.25 * eps), 0.0, None)
        val = np.empty((len(ys), 2))
        a_ = u <= 0.5
        if a_.any():
            ql = (ys[a_, -1] - cs[a_, -1]) * (0.5 * eps / rs[a_]) / eps + 0.5
            w = _wrap_np((1.0 - 2.0 * u[a_]) * 4.0 * turns * ql)
            val[a_, 0] = ca[a_] + eps * w[:, 0]
            val[a_, 1] = cb[a_] + eps * w[:, 1]
        b_ = ~a_
        if b_.any():
            tau = 2.0 * u[b_] - 1.0
            A, B = ca[b_], cb[b_]
            s = tau * (A + B)
            down = s <= B
            val[b_, 0] = np.where(down, A, A - (s - B))
            val[b_, 1] = np.where(down, B - s, 0.0)
        out[shell] = val
    return out


def _cap_np(y, turns):
    r = np.abs(y - 0.5).max(axis=1)
    out = np.zeros((len(y), 2))
    ring = r > 0.25
    if ring.any():
        u = np.clip((0.5 - r[ring]) / 0.25, 0.0, None)
        ylast = 0.5 + (y[ring, -1] - 0.5) * 0.5 / r[ring]
        out[ring] = _wrap_np((1.0 - u) * 4.0 * turns * ylast)
    return out


def _eval_np(X, depth, D, q, N, m, eps, turns):
    P = len(X)
    out = np.zeros((P, 2))
    level = np.full(P, depth + 1, dtype=np.int64)
    y = X.copy()
    off = np.zeros((P, 2))
    scale = np.ones(P)
    active = np.arange(P)
    for lev in range(depth + 1):
        if not len(active):
            break
        ya = y[active]
        lex, c = _lex_np(ya, q)
        rho = np.abs(ya - c).max(axis=1)
        inside = (lex < N) & (rho < 0.5 * eps)
        fin = active[~inside]
        if len(fin):
            h = _h_np(y[fin], D, q, N, m, eps, turns)
            out[fin] = off[fin] + scale[fin, None] * h
            level[fin] = lev
        go = active[inside]
        if not len(go):
            active = go
            break
        lx = lex[inside]
        corner = np.column_stack([(lx // m) / m, (lx % m) / m])
        y[go] = (y[go] - (c[inside] - 0.5 * eps)) / eps
        if lev == depth:
            cap = _cap_np(y[go], turns)
            out[go] = off[go] + scale[go, None] * (corner + eps * cap)
            level[go] = depth + 1
            active = go[:0]
            break
        off[go] += scale[go, None] * corner
        scale[go] *= eps
        active = go
    return out, level


@njit
def _h_many_nb(X, D, q, N, m, eps, turns, out):
    for p in range(X.shape[0]):
        hx, hy = _h_point_nb(X[p], D, q, N, m, eps, turns)
        out[p, 0] = hx
        out[p, 1] = hy


def h_kernel(X, params, use_numba=None):
    """The base map alone (points inside holes get the bulk value)."""
    use = USE_NUMBA if use_numba is None else use_numba
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    if use:
        out = np.empty((len(X), 2))
        _h_many_nb(X, *params, out)
        return out
    return _h_np(X, *params)


def evaluate_kernel(X, depth, params, use_numba=None):
    use = USE_NUMBA if use_numba is None else use_numba
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    D, q, N, m, eps, turns = params
    if use:
        out = np.empty((len(X), 2))
        level = np.empty(len(X), dtype=np.int64)
        _eval_nb(X, int(depth), D, q, N, m, eps, turns, out, level)
        return out, level
    return _eval_np(X, int(depth), D, q, N, m, eps, turns)


# ---------------------------------------------------------------------------
# base map


def _parse_kv(text):
    kv = {}
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#") or "=" not in ln:
            continue
        k, _, v = ln.partition("=")
        kv[k.strip()] = v.strip()
    return kv


def cube_probe_loops(D, samples=256):
    """Boundaries of the unit squares in every coordinate plane through the cube centre.

    These loops lie on the boundary of I^D.
    """
    t = np.arange(samples) / samples
    sq = square_wrap(4 * t)
    loops = []
    for a in range(D):
        for b in range(a + 1, D):
            pts = np.full((samples, D), 0.5)
            pts[:, a] = sq[:, 0]
            pts[:, b] = sq[:, 1]
            loops.append(pts)
    return loops


@dataclass(frozen=True)
class BaseMap:
    K: HoleDomain
    J: GridSkeleton
    beta: BetaSpec
    obstruction: tuple = field(default=(), repr=False)

    @property
    def eps(self):
        return float(self.K.eps)

    @property
    def params(self):
        return (self.K.dim, self.K.q, self.K.N, self.J.m, self.eps, float(self.beta.turns))

    @cached_property
    def route_max(self):
        if self.K.N == 0:
            return 0.0
        return float(self.J.corners[: self.K.N].sum(axis=1).max())

    @cached_property
    def lip_pieces(self):
        """Gradient bounds of each piece of h (Euclidean, a.e.)."""
        e = self.eps
        Lt = self.beta.lift_lip
        Th = self.beta.lift_max
        proj = math.sqrt(2.0)
        outer = Lt * proj * 0.5 / (0.5 - 0.25 * e) + Th * 4.0 / e
        shell = Lt * proj + 8.0 * Th
        route = 8.0 * self.route_max / e
        cap = Lt * proj * 2.0 + 4.0 * Th
        return {"outer": outer, "shell": shell, "route": route, "cap": cap}

    @property
    def lip(self):
        p = self.lip_pieces
        return max(p["outer"], p["shell"], p["route"])

    @property
    def lip_eval(self):
        """Bound for the truncated self-similar map (base pieces or the hole filling)."""
        return max(self.lip, self.lip_pieces["cap"])

    def __call__(self, pts):
        return h_kernel(pts, self.params)

    def on_hole_rim(self, i, local):
        """Values of h on the boundary of hole i from local unit coordinates."""
        c = self.K.centers[i] - 0.5 * self.eps
        return h_kernel(c + self.eps * np.atleast_2d(local), self.params)


def assemble_base_map(beta: BetaSpec, K: HoleDomain, J: GridSkeleton) -> BaseMap:
    """Build h: K -> |J| with h = beta on the outer boundary and scaled beta on hole boundaries."""
    if J.n != 1:
        raise Unsupported("explicit base maps are built for n = 1 only")
    if K.dim != beta.dim:
        raise Incompatible("beta is defined on a sphere of the wrong dimension")
    if K.eps != J.eps:
        raise Incompatible("K and J must use the same eps")
    if K.N != J.N:
        raise Incompatible(f"K has {K.N} holes but J has {J.N} cells")
    obs = []
    for lp in cube_probe_loops(K.dim):
        tot = winding_numbers(loop(beta(lp)), J.centers)
        parts = np.zeros(J.N, dtype=np.int64)
        # iota_i∘beta lies on the boundary of cell i; only the centre of cell i can see it
        for i in range(J.N):
            v = J.corners[i] + float(J.eps) * beta(lp)
            parts[i] = winding_numbers(loop(v), J.centers[i : i + 1])[0]
        obs.append(tot - parts)
    obs = np.array(obs)
    if np.any(obs != 0):
        raise NotNullHomotopic("obstruction vector is nonzero on a probing loop")
    return BaseMap(K, J, beta, tuple(int(x) for x in np.abs(obs).max(axis=0)))


# ---------------------------------------------------------------------------
# self-similar map


@dataclass
class SelfSimilarMap:
    base: BaseMap
    cache_size: int = 4096
    _cache: OrderedDict = field(default_factory=OrderedDict, repr=False)
    hits: int = 0
    misses: int = 0

    @property
    def eps(self):
        return self.base.eps

    @property
    def n(self):
        return self.base.J.n

    @property
    def k(self):
        return self.base.K.k

    def error_bound(self, depth):
        return math.sqrt(self.n + 1) * self.eps ** (depth + 1)

    def evaluate_many(self, X, depth, use_numba=None):
        return evaluate_kernel(X, depth, self.base.params, use_numba)

    def evaluate(self, x, depth):
        """Value, error bound and resolution level at a single point.

        Results are cached by (point, depth); hits are bit-identical.
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.base.K.dim:
            raise ValueError("point has the wrong dimension")
        if np.any(x < 0) or np.any(x > 1):
            raise ValueError("point outside the unit cube")
        key = (x.tobytes(), int(depth))
        if key in self._cache:
            self._cache.move_to_end(key)
            self.hits += 1
            return self._cache[key]
        out, level = self.evaluate_many(x[None], depth)
        lev = int(level[0])
        err = self.error_bound(depth) if lev > depth else 0.0
        res = (out[0].copy(), err, lev)
        self._cache[key] = res
        self.misses += 1
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return res

    def sampled(self, depth):
        dim = self.base.K.dim
        return SampledMap(lambda p: self.evaluate_many(p, depth)[0], dim, lo=np.zeros(dim), hi=np.ones(dim))

    # -- serialisation

    def to_text(self):
        b = self.base
        lines = [
            MAP_SCHEMA,
            f"n = {b.J.n}",
            f"k = {b.K.k}",
            f"epsilon = {b.K.eps}",
            f"N = {b.K.N}",
            f"beta_family = {b.beta.family}",
            f"beta_turns = {b.beta.turns!r}",
        ]
        for name, v in sorted(b.lip_pieces.items()):
            lines.append(f"lip_{name} = {v!r}")
        lines.append(f"lip_h = {b.lip!r}")
        lines.append(f"lip_eval = {b.lip_eval!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        if not text.startswith(MAP_SCHEMA):
            raise ValueError("not a lipfill map file")
        kv = _parse_kv(text)
        m = build_self_similar(int(kv["n"]), int(kv["k"]), Fraction(kv["epsilon"]), int(kv["N"]),
                               float(kv["beta_turns"]))
        if abs(m.base.lip - float(kv["lip_h"])) > 1e-9 * max(1.0, m.base.lip):
            raise ValueError("stored Lipschitz bound does not match the rebuilt map")
        return m


def default_hole_count(n, eps):
    return (as_fraction(eps).denominator) ** (n + 1)


def build_self_similar(n=1, k=2, eps=None, N=None, turns=1.0) -> SelfSimilarMap:
    if n != 1:
        raise Unsupported("explicit self-similar maps are built for n = 1 only")
    eps = choose_epsilon(n, k, even=True) if eps is None else as_fraction(eps)
    N = default_hole_count(n, eps) if N is None else int(N)
    K = HoleDomain(k, eps, N)
    J = GridSkeleton(n, eps)
    beta = BetaSpec(k + 1, turns)
    return SelfSimilarMap(assemble_base_map(beta, K, J))


# ---------------------------------------------------------------------------
# verification suites


def _uniform(dim):
    return lambda rng, m: rng.random((m, dim))


def verify_lipschitz(F: SelfSimilarMap, depths=(1, 2, 3, 4), pairs=100000, seed=0, slack=1.05):
    rows = []
    for d in depths:
        est = lipschitz_estimate(F.sampled(d), _uniform(F.base.K.dim), pairs, seed + d)
        bound = F.base.lip_eval
        rows.append({"depth": d, "estimate": est.value, "bound": bound, "pass": est.value <= slack * bound})
    return rows


def verify_consistency(F: SelfSimilarMap, depths=(0, 1, 2, 3), samples=10000, seed=0):
    """|F_{d+1} - F_d| at uniform points and at points inside depth-d holes.

    ``limit`` is Lip(h) sqrt(n+1) eps^(d+1); ``strict`` drops the Lip(h)
    factor, which the construction also satisfies since both values lie in
    the same closed cell of side eps^(d+1).
    """
    rng = np.random.default_rng(seed)
    dim = F.base.K.dim
    rows = []
    for d in depths:
        X = np.vstack([rng.random((samples - samples // 2, dim)), deep_points(F, d, samples // 2, rng)])
        a, _ = F.evaluate_many(X, d)
        b, _ = F.evaluate_many(X, d + 1)
        gap = float(np.linalg.norm(a - b, axis=1).max())
        strict = math.sqrt(F.n + 1) * F.eps ** (d + 1)
        lim = F.base.lip * strict
        rows.append({"depth": d, "max_gap": gap, "limit": lim, "strict": strict,
                     "pass": gap <= lim, "pass_strict": gap <= strict * (1 + 1e-9)})
    return rows


def deep_points(F: SelfSimilarMap, level, count, rng):
    """Random points inside random holes of the given level (level 0 = holes of K)."""
    b = F.base
    e = b.eps
    dim = b.K.dim
    corner = np.zeros((count, dim))
    scale = np.ones((count, 1))
    for _ in range(level + 1):
        j = rng.integers(0, b.K.N, size=count)
        corner += scale * (b.K.centers[j] - 0.5 * e)
        scale *= e
    return corner + scale * rng.random((count, dim))


def verify_rank(F: SelfSimilarMap, samples=10000, depth=2, tol=0.05, seed=0, threshold=0.95):
    """Degeneracy of the derivative of the truncated map on K-points.

    Finite-difference steps are eps^(depth+1); samples within one step of a
    hole or collar boundary at any resolved level are excluded.
    """
    b = F.base
    dim = b.K.dim
    step = F.eps ** (depth + 1)
    rng = np.random.default_rng(seed)
    X = rng.random((samples, dim)) * (1 - 2 * step) + step

    def near_boundary(pts):
        return _near_piece_boundary(b, pts, step, depth)

    rep = degeneracy_fraction(F.sampled(depth), X, tol, step=step, rank=1, exclude=near_boundary, seed=seed)
    return {"fraction": rep.fraction, "excluded": rep.excluded, "samples": rep.samples, "tol": tol,
            "step": step, "pass": rep.fraction >= threshold}


def _near_piece_boundary(b: BaseMap, pts, step, depth):
    """Points within ``step`` (in the global metric) of a seam between pieces of h at some level."""
    e = b.eps
    y = np.array(pts, dtype=float)
    scale = np.ones(len(y))
    near = np.zeros(len(y), dtype=bool)
    alive = np.ones(len(y), dtype=bool)
    q, N = b.K.q, b.K.N
    for _ in range(depth + 1):
        lex, c = _lex_np(y, q)
        rho = np.abs(y - c).max(axis=1)
        delta = np.minimum(y, 1 - y).min(axis=1)
        s = step / scale
        seams = [np.abs(delta - 0.25 * e)]
        hole = lex < N
        for r0 in (0.5 * e, 0.625 * e, 0.75 * e):
            seams.append(np.where(hole, np.abs(rho - r0), np.inf))
        # kinks of the square wrap and of the sup-norm projection
        seams.append(np.where(hole & (rho <= 0.75 * e), _sup_tie(y - c), np.inf))
        seams.append(np.where(delta < 0.25 * e + s, _sup_tie(y - 0.5), np.inf))
        m = np.min(np.stack(seams), axis=0) < 2 * s
        near |= alive & m
        inside = hole & (rho < 0.5 * e)
        alive &= inside
        y = np.where(inside[:, None], (y - (c - 0.5 * e)) / e, y)
        scale = np.where(inside, scale * e, scale)
        if not alive.any():
            break
    return near


def _sup_tie(d):
    a = np.sort(np.abs(d), axis=1)
    return a[:, -1] - a[:, -2]


def coverage(F: SelfSimilarMap, depth, per_hole=1):
    """Fraction of the eps^depth codomain grid whose closed cells contain a sampled image point.

    Samples sit just outside every hole of level depth-1, on the face
    where the scaled copy of beta passes through the interior of the
    corresponding cell edge.
    """
    b = F.base
    e = b.eps
    dim = b.K.dim
    N = b.K.N
    if depth < 1:
        raise ValueError("depth must be >= 1")
    total = N**depth
    corners = np.zeros((1, dim))
    scale = 1.0
    for _ in range(depth):
        corners = (corners[:, None, :] + scale * (b.K.centers[None] - 0.5 * e)).reshape(-1, dim)
        scale *= e
    local = []
    for j in range(per_hole):
        p = np.full(dim, 0.5)
        p[0] = 1.0 + 1e-6
        p[-1] = (j + 0.5) / (per_hole * 4 * abs(b.beta.turns) or 1.0)
        local.append(p)
    local = np.array(local)
    pts = (corners[:, None, :] + scale * local[None]).reshape(-1, dim)
    vals, _ = F.evaluate_many(pts, depth)
    side = e**depth
    g = 1.0 / side
    cells = set()
    scaled = vals * g
    base = np.floor(scaled + 1e-9)
    m = int(round(g))
    for dx in (0, -1):
        for dy in (0, -1):
            i = base[:, 0] + dx
            jj = base[:, 1] + dy
            onx = (dx == 0) | (np.abs(scaled[:, 0] - base[:, 0]) < 1e-6)
            ony = (dy == 0) | (np.abs(scaled[:, 1] - base[:, 1]) < 1e-6)
            ok = onx & ony & (i >= 0) & (i < m) & (jj >= 0) & (jj < m)
            cells.update((i[ok] * m + jj[ok]).astype(np.int64).tolist())
    return {"depth": depth, "cells": m * m, "hit": len(cells), "fraction": len(cells) / (m * m), "holes": total}
