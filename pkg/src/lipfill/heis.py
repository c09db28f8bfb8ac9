"""Heisenberg group arithmetic, gauge distances and horizontal curves.

Coordinates are ``(x, y, z)`` with ``x, y`` in R^n and the group law

    (x, y, z) * (x', y', z') = (x + x', y + y', z + z' + <y, x'>).

Array helpers (``mul``, ``inv``, ``dilate_arr``, ``koranyi_dist`` ...) work on
float arrays of shape ``(..., 2n + 1)`` laid out as ``[x_1..x_n, y_1..y_n, z]``.
The :class:`HeisPoint` wrappers validate inputs and are what the rest of the
package exposes publicly.
"""
from __future__ import annotations

import functools
import io
from dataclasses import dataclass, field

import numpy as np


class DimensionMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# array level


def _split(p):
    p = np.asarray(p, dtype=float)
    n = (p.shape[-1] - 1) // 2
    return p[..., :n], p[..., n : 2 * n], p[..., 2 * n], n


def _check_pair(p, q):
    if np.shape(p)[-1] != np.shape(q)[-1]:
        raise DimensionMismatch(f"dimension mismatch: {np.shape(p)[-1]} vs {np.shape(q)[-1]}")


def mul(p, q):
    _check_pair(p, q)
    x, y, z, n = _split(p)
    x2, y2, z2, _ = _split(q)
    zz = z + z2 + np.einsum("...i,...i->...", y, x2)
    return np.concatenate([x + x2, y + y2, zz[..., None]], axis=-1)


def inv(p):
    x, y, z, _ = _split(p)
    zz = -z + np.einsum("...i,...i->...", y, x)
    return np.concatenate([-x, -y, zz[..., None]], axis=-1)


def left_quotient(p, q):
    """p^-1 q in closed form, (dx, dy, dz - <y_p, dx>); exactly zero when p == q."""
    _check_pair(p, q)
    x, y, z, _ = _split(p)
    x2, y2, z2, _ = _split(q)
    dx = x2 - x
    dz = (z2 - z) - np.einsum("...i,...i->...", y, dx)
    return np.concatenate([dx, y2 - y, dz[..., None]], axis=-1)


def dilate_arr(r, p):
    x, y, z, _ = _split(p)
    r = np.asarray(r, dtype=float)
    rr = r[..., None] if r.ndim else r
    return np.concatenate([rr * x, rr * y, (r * r * z)[..., None]], axis=-1)


def symmetric_height(g):
    """Central coordinate in exponential coordinates, ``z - <x, y>/2``.

    It vanishes along horizontal straight lines through the identity, which
    is what makes the gauge below exact on horizontal segments.
    """
    x, y, z, _ = _split(g)
    return z - 0.5 * np.einsum("...i,...i->...", x, y)


def koranyi_norm(g):
    x, y, _, _ = _split(g)
    t = symmetric_height(g)
    h2 = np.einsum("...i,...i->...", x, x) + np.einsum("...i,...i->...", y, y)
    return np.sqrt(np.sqrt(h2 * h2 + t * t))


def path_bound_norm(g):
    """Length of an explicit horizontal path from the identity to ``g``.

    Three candidate paths are compared: straight diagonal move then a
    commutator square closing the height, and the two axis-ordered variants.
    The minimum is symmetric under ``g -> g^-1``.
    """
    x, y, z, _ = _split(g)
    hx = np.sqrt(np.einsum("...i,...i->...", x, x))
    hy = np.sqrt(np.einsum("...i,...i->...", y, y))
    diag = np.sqrt(hx * hx + hy * hy) + 4.0 * np.sqrt(np.abs(symmetric_height(g)))
    xy = np.einsum("...i,...i->...", x, y)
    axis1 = hx + hy + 4.0 * np.sqrt(np.abs(z))
    axis2 = hx + hy + 4.0 * np.sqrt(np.abs(z - xy))
    return np.minimum(diag, np.minimum(axis1, axis2))


def koranyi_dist(p, q):
    return koranyi_norm(left_quotient(p, q))


def path_bound_dist(p, q):
    return path_bound_norm(left_quotient(p, q))


def segment_lift(u, v):
    """Group element reached from the identity by the horizontal straight move (u, v)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    z = 0.5 * np.einsum("...i,...i->...", u, v)
    return np.concatenate([u, v, z[..., None]], axis=-1)


# ---------------------------------------------------------------------------
# value types


@dataclass(frozen=True)
class HeisPoint:
    x: np.ndarray
    y: np.ndarray
    z: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float)).copy()
        y = np.atleast_1d(np.asarray(self.y, dtype=float)).copy()
        if x.ndim != 1 or x.shape != y.shape or x.size < 1:
            raise DimensionMismatch("x and y must be vectors of equal length n >= 1")
        z = float(self.z)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.isfinite(z)):
            raise ValueError("HeisPoint coordinates must be finite")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @property
    def n(self):
        return self.x.size

    def as_array(self):
        return np.concatenate([self.x, self.y, [self.z]])

    @classmethod
    def from_array(cls, a):
        x, y, z, _ = _split(a)
        return cls(x, y, float(z))

    @classmethod
    def identity(cls, n=1):
        return cls(np.zeros(n), np.zeros(n), 0.0)

    def __eq__(self, other):
        if not isinstance(other, HeisPoint):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.as_array(), other.as_array())

    def __hash__(self):
        return hash(self.as_array().tobytes())

    def __repr__(self):
        return f"HeisPoint(x={self.x.tolist()}, y={self.y.tolist()}, z={self.z!r})"


def group_mul(p: HeisPoint, q: HeisPoint) -> HeisPoint:
    if p.n != q.n:
        raise DimensionMismatch(f"dimension mismatch: n={p.n} vs n={q.n}")
    return HeisPoint.from_array(mul(p.as_array(), q.as_array()))


def group_inv(p: HeisPoint) -> HeisPoint:
    return HeisPoint.from_array(inv(p.as_array()))


def dilate(r: float, p: HeisPoint) -> HeisPoint:
    # r -> 0 would collapse everything to the identity; keep dilations injective
    if not r > 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    return HeisPoint.from_array(dilate_arr(r, p.as_array()))


@dataclass(frozen=True)
class GaugeMetric:
    """A left-invariant distance on H^n, exactly 1-homogeneous under dilations.

    ``lower``/``upper`` bracket the ratio against the Carnot-Caratheodory
    distance as far as the toolkit knows it.  For the Koranyi gauge the values
    are the empirical range of ``path-upper-bound / koranyi`` (see
    :func:`gauge_bracket`); they are measured, never taken from literature.
    """

    variant: str = "koranyi"
    lower: float = 1.0
    upper: float = 1.0

    def __post_init__(self):
        if self.variant not in ("koranyi", "path-upper-bound"):
            raise ValueError(f"unknown gauge variant {self.variant!r}")
        if not (0 < self.lower <= self.upper):
            raise ValueError("need 0 < lower <= upper")

    def norm_arr(self, g):
        return koranyi_norm(g) if self.variant == "koranyi" else path_bound_norm(g)

    def dist_arr(self, p, q):
        _check_pair(p, q)
        return self.norm_arr(left_quotient(p, q))


KORANYI = GaugeMetric("koranyi")
PATH_BOUND = GaugeMetric("path-upper-bound")


def gauge_dist(p: HeisPoint, q: HeisPoint, m: GaugeMetric = KORANYI) -> float:
    if p.n != q.n:
        raise DimensionMismatch(f"dimension mismatch: n={p.n} vs n={q.n}")
    return float(m.dist_arr(p.as_array(), q.as_array()))


def random_points(rng, count, n=1, scale=1.0):
    """Random group elements with x, y ~ N(0, scale^2) and z ~ N(0, scale^4)."""
    a = rng.normal(size=(count, 2 * n + 1))
    a[:, : 2 * n] *= scale
    a[:, 2 * n] *= scale * scale
    return a


@functools.lru_cache(maxsize=8)
def gauge_bracket(n=1, samples=20000, seed=0):
    """Empirical (min, max) of path-upper-bound / koranyi over random elements.

    Both gauges are 1-homogeneous, so sampling the unit scale suffices.
    """
    rng = np.random.default_rng(seed)
    g = random_points(rng, samples, n)
    ratio = path_bound_norm(g) / koranyi_norm(g)
    return float(ratio.min()), float(ratio.max())


def koranyi_metric(n=1):
    lo, hi = gauge_bracket(n)
    return GaugeMetric("koranyi", lo, hi)


def sqrt_bound_constant(rng, pairs=20000, n=1, metric=KORANYI):
    """Fit K with d(p, q) <= K * (|dx| + |dy| + |dz|)^(1/2) on the unit gauge ball."""
    pts = []
    need = 2 * pairs
    while sum(len(a) for a in pts) < need:
        cand = rng.uniform(-1.0, 1.0, size=(4 * pairs, 2 * n + 1))
        pts.append(cand[koranyi_norm(cand) <= 1.0])
    pts = np.concatenate(pts)[:need]
    p, q = pts[:pairs], pts[pairs:]
    d = metric.dist_arr(p, q)
    x, y, z, _ = _split(q - p)
    euc = np.abs(x).sum(-1) + np.abs(y).sum(-1) + np.abs(z)
    keep = euc > 0
    return float(np.max(d[keep] / np.sqrt(euc[keep])))


# ---------------------------------------------------------------------------
# curves


@dataclass(frozen=True)
class HeisCurve:
    t: np.ndarray
    points: np.ndarray
    horizontal: bool = False
    tol: float = 1e-9

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if t.ndim != 1 or pts.shape[0] != t.size or pts.shape[1] % 2 != 1 or pts.shape[1] < 3:
            raise ValueError("HeisCurve needs t of shape (m,) and points of shape (m, 2n+1)")
        if t.size >= 2 and np.any(np.diff(t) <= 0):
            raise ValueError("curve parameters must be strictly increasing")
        if not np.all(np.isfinite(pts)):
            raise ValueError("curve samples must be finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "points", pts)
        if self.horizontal:
            res = horizontality_residual(pts)
            allowed = self.tol * step_sizes(pts) + 64 * np.finfo(float).eps * (1 + np.abs(pts[1:, -1]))
            if np.any(res > allowed):
                raise ValueError(f"curve is not horizontal: residual {res.max():.3e}")

    @property
    def n(self):
        return (self.points.shape[1] - 1) // 2

    def __len__(self):
        return self.t.size

    def dilate(self, r):
        return HeisCurve(self.t, dilate_arr(r, self.points), self.horizontal, self.tol)

    def to_text(self):
        n = self.n
        cols = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)] + ["z"]
        buf = io.StringIO()
        buf.write(" ".join(cols) + "\n")
        for ti, row in zip(self.t, self.points):
            buf.write(" ".join(f"{v:.17g}" for v in (ti, *row)) + "\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text, horizontal=False):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        header = lines[0].split()
        if header[0] != "t" or header[-1] != "z":
            raise ValueError("curve table header must read 't x.. y.. z'")
        data = np.array([[float(v) for v in ln.split()] for ln in lines[1:]], dtype=float)
        return cls(data[:, 0], data[:, 1:], horizontal)


def step_sizes(pts):
    d = np.diff(pts[:, :-1], axis=0)
    return np.sqrt((d * d).sum(-1))


def horizontality_residual(pts):
    """|dz - <y_mid, dx>| per step (midpoint rule)."""
    x, y, z, _ = _split(pts)
    ymid = 0.5 * (y[1:] + y[:-1])
    return np.abs(np.diff(z) - np.einsum("ij,ij->i", ymid, np.diff(x, axis=0)))


def horizontal_lift(c, z0=0.0, t=None, tol=1e-9) -> HeisCurve:
    """Lift a sampled planar curve in R^{2n} to a horizontal curve.

    The increment of z over each step is the midpoint rule for the integral of
    <y, dx>, which is exact on each straight chord of the sample polygon.
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] < 2:
        raise ValueError("horizontal_lift needs at least two samples")
    if c.shape[1] % 2:
        raise DimensionMismatch("planar curve must live in R^{2n}")
    n = c.shape[1] // 2
    x, y = c[:, :n], c[:, n:]
    dz = np.einsum("ij,ij->i", 0.5 * (y[1:] + y[:-1]), np.diff(x, axis=0))
    z = z0 + np.concatenate([[0.0], np.cumsum(dz)])
    if t is None:
        t = np.linspace(0.0, 1.0, c.shape[0])
    return HeisCurve(np.asarray(t, dtype=float), np.column_stack([c, z]), True, tol)


def cc_length(c: HeisCurve, m: GaugeMetric = KORANYI) -> float:
    if len(c) < 2:
        return 0.0
    return float(m.dist_arr(c.points[:-1], c.points[1:]).sum())


def euclidean_length(c):
    c = np.asarray(c, dtype=float)
    d = np.diff(c, axis=0)
    return float(np.sqrt((d * d).sum(-1)).sum())


# ---------------------------------------------------------------------------
# explicit horizontal paths between two points (used to fill graph edges)


@dataclass(frozen=True)
class HorizontalPath:
    """Piecewise straight horizontal path: a diagonal move then a commutator square."""

    start: np.ndarray
    legs: np.ndarray = field(repr=False)  # (L, 2n) planar leg vectors
    lengths: np.ndarray = field(repr=False)

    @property
    def length(self):
        return float(self.lengths.sum())

    def waypoints(self):
        pts = [np.asarray(self.start, dtype=float)]
        n = self.legs.shape[1] // 2
        for leg in self.legs:
            pts.append(mul(pts[-1], segment_lift(leg[:n], leg[n:])))
        return np.array(pts)

    def at(self, frac):
        """Points at arclength fractions ``frac`` (array) along the path."""
        frac = np.clip(np.atleast_1d(np.asarray(frac, dtype=float)), 0.0, 1.0)
        way = self.waypoints()
        total = self.length
        if total == 0.0:
            return np.repeat(way[:1], frac.size, axis=0)
        cum = np.concatenate([[0.0], np.cumsum(self.lengths)])
        s = frac * total
        idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(self.legs) - 1)
        local = np.where(self.lengths[idx] > 0, (s - cum[idx]) / np.where(self.lengths[idx] > 0, self.lengths[idx], 1.0), 0.0)
        n = self.legs.shape[1] // 2
        legs = self.legs[idx] * local[:, None]
        return mul(way[idx], segment_lift(legs[:, :n], legs[:, n:]))


def horizontal_path(p, q) -> HorizontalPath:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _check_pair(p, q)
    g = left_quotient(p, q)
    x, y, _, n = _split(g)
    t = float(symmetric_height(g))
    legs = [np.concatenate([x, y])]
    s = np.sqrt(abs(t))
    if s > 0:
        ex = np.zeros(2 * n)
        ey = np.zeros(2 * n)
        ex[0] = s
        ey[n] = s
        # x,y,-x,-y adds -s^2 to the height; y,x,-y,-x adds +s^2
        legs += [ex, ey, -ex, -ey] if t < 0 else [ey, ex, -ey, -ex]
    legs = np.array(legs)
    lengths = np.sqrt((legs * legs).sum(-1))
    return HorizontalPath(p, legs, lengths)
