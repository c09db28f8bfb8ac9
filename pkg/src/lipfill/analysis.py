"""Numerical probes of maps between metric spaces.

Maps are vectorised callables ``f(points) -> values`` acting on rows.  The
target metric is a vectorised ``dist(a, b) -> (m,)``; Euclidean by default.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class _Divergent:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "DIVERGENT"

    def __bool__(self):
        return False


DIVERGENT = _Divergent()


class OutOfDomain(ValueError):
    """A probe step leaves the declared domain."""


class CoincidentSamples(ValueError):
    pass


def euclidean_dist(a, b):
    return np.linalg.norm(np.asarray(a, float) - np.asarray(b, float), axis=-1)


@dataclass
class SampledMap:
    """A map with a vectorised evaluator, target metric and optional box domain."""

    fn: callable
    dim: int
    dist: callable = euclidean_dist
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    euclidean_target: bool = True

    def __call__(self, pts):
        return self.fn(np.atleast_2d(np.asarray(pts, dtype=float)))

    @property
    def diameter(self):
        if self.lo is None:
            return 1.0
        return float(np.linalg.norm(np.asarray(self.hi) - np.asarray(self.lo)))

    def contains(self, pts, tol=1e-12):
        if self.lo is None:
            return np.ones(len(np.atleast_2d(pts)), dtype=bool)
        p = np.atleast_2d(pts)
        return np.all((p >= np.asarray(self.lo) - tol) & (p <= np.asarray(self.hi) + tol), axis=-1)


def default_schedule(diameter=1.0, count=7):
    """Geometric step schedule from 1e-2 to 1e-5 of the domain diameter."""
    return diameter * np.logspace(-2, -5, count)


def metric_derivative(f: SampledMap, x, v, schedule=None, ceiling=1e3, slope_limit=-0.25):
    """md_x(v) from difference quotients along a step schedule.

    The estimate is Richardson-extrapolated from the two finest steps.
    When the quotients grow monotonically and either exceed ``ceiling`` or
    follow a power law steeper than ``slope_limit`` in log-log, the limit is
    reported as :data:`DIVERGENT`.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    r = default_schedule(f.diameter) if schedule is None else np.asarray(schedule, dtype=float)
    pts = x[None] + r[:, None] * v[None]
    if not np.all(f.contains(pts)) or not np.all(f.contains(x[None])):
        raise OutOfDomain("x is too close to the boundary for the largest step")
    fx = f(x[None])
    fp = f(pts)
    q = f.dist(fp, np.repeat(fx, len(r), axis=0)) / r
    nv = np.linalg.norm(v)
    if nv == 0:
        return 0.0
    growing = np.all(np.diff(q) > 0)
    if growing and len(r) >= 2:
        pos = q > 0
        if pos.all():
            slope = np.polyfit(np.log(r), np.log(q), 1)[0]
        else:
            slope = 0.0
        if q[-1] > ceiling or slope < slope_limit:
            return DIVERGENT
    if len(r) >= 2:
        ratio = r[-2] / r[-1]
        est = (ratio * q[-1] - q[-2]) / (ratio - 1)
        # a monotone sequence must not be extrapolated past its own trend
        lo_b, hi_b = min(q[-1], q[-2]), max(q[-1], q[-2])
        spread = hi_b - lo_b
        est = float(np.clip(est, lo_b - spread, hi_b + spread))
        return max(est, 0.0)
    return float(q[-1])


@dataclass
class LipschitzEstimate:
    value: float
    argmax: tuple
    pairs: int
    seed: int | None = None

    def __float__(self):
        return self.value


def _near_pairs(rng, sampler, count, diameter):
    a = sampler(rng, count)
    u = rng.normal(size=a.shape)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = diameter * 10.0 ** rng.uniform(-6, 0, size=(count, 1))
    return a, a + r * u


def lipschitz_estimate(f: SampledMap, sampler, pairs=100000, seed=0, chunk=20000, clip=True):
    """Max of d(f a, f b)/|a - b| over random pairs (half near-diagonal)."""
    rng = np.random.default_rng(seed)
    best, arg = 0.0, None
    seen = 0
    remaining = pairs
    while remaining > 0:
        m = min(chunk, remaining)
        h = m // 2
        a1, b1 = sampler(rng, h), sampler(rng, h)
        a2, b2 = _near_pairs(rng, sampler, m - h, f.diameter)
        a = np.vstack([a1, a2])
        b = np.vstack([b1, b2])
        if clip and f.lo is not None:
            b = np.clip(b, f.lo, f.hi)
        dx = np.linalg.norm(a - b, axis=1)
        keep = dx > 0
        if keep.any():
            a, b, dx = a[keep], b[keep], dx[keep]
            q = f.dist(f(a), f(b)) / dx
            i = int(np.argmax(q))
            if q[i] > best or arg is None:
                best, arg = float(q[i]), (a[i].copy(), b[i].copy())
            seen += int(keep.sum())
        remaining -= m
    if seen == 0:
        raise CoincidentSamples("sampler produced coincident points only")
    return LipschitzEstimate(best, arg, seen, seed)


def direction_family(k, delta):
    """Unit vectors in R^k such that every unit vector is within ``delta`` of one of them.

    k = 2 uses equally spaced angles; k >= 3 uses a normalised grid on the
    faces of the cube, whose covering radius is at most sqrt(k-1)/s.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if k == 1:
        return np.array([[1.0], [-1.0]])
    if k == 2:
        m = int(np.ceil(np.pi / delta))
        th = 2 * np.pi * np.arange(m) / m
        return np.column_stack([np.cos(th), np.sin(th)])
    s = int(np.ceil(np.sqrt(k - 1) / delta))
    g = (np.arange(s) + 0.5) / s * 2 - 1
    out = []
    for a in range(k):
        for sign in (-1.0, 1.0):
            grids = np.meshgrid(*([g] * (k - 1)), indexing="ij")
            face = np.column_stack([x.ravel() for x in grids])
            pts = np.insert(face, a, sign, axis=1)
            out.append(pts)
    v = np.vstack(out)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def jacobian_fd(f: SampledMap, x, step):
    """Central-difference Jacobian at each row of ``x`` (Euclidean targets)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m, k = x.shape
    cols = []
    for a in range(k):
        e = np.zeros(k)
        e[a] = step
        cols.append((f(x + e) - f(x - e)) / (2 * step))
    return np.stack(cols, axis=-1)


@dataclass
class DegeneracyReport:
    samples: int
    excluded: int
    fraction: float
    tol: float
    schedule: tuple
    directions: int
    minima: np.ndarray = field(repr=False)
    seed: int | None = None


def degeneracy_fraction(f: SampledMap, samples, tol, step=None, rank=None, directions=None,
                        exclude=None, seed=None):
    """Fraction of sample points where the derivative fails to have full rank.

    Euclidean targets: the Jacobian is degenerate when sigma_{rank+1} <= tol * sigma_1
    (sigma_1 = 0 counts as degenerate), with ``rank`` defaulting to one less
    than the target dimension.  Metric targets: degenerate when some
    direction of the supplied family has difference quotient <= tol.
    """
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    mask = np.ones(len(x), dtype=bool) if exclude is None else ~np.asarray(exclude(x), dtype=bool)
    xs = x[mask]
    step = 1e-6 * f.diameter if step is None else step
    if f.euclidean_target:
        J = jacobian_fd(f, xs, step)
        sv = np.linalg.svd(J, compute_uv=False)
        r = J.shape[1] - 1 if rank is None else rank
        # a singular value beyond the shape of J is zero
        s1 = sv[:, 0]
        sr = sv[:, r] if sv.shape[1] > r else np.zeros(len(sv))
        ratio = np.where(s1 > 0, sr / np.where(s1 > 0, s1, 1.0), 0.0)
        degenerate = ratio <= tol
        minima = ratio
        ndir = J.shape[2]
    else:
        if directions is None:
            raise ValueError("metric targets need a direction family")
        fx = f(xs)
        qs = []
        for v in directions:
            qs.append(f.dist(f(xs + step * v), fx) / step)
        minima = np.min(np.stack(qs, axis=1), axis=1)
        degenerate = minima <= tol
        ndir = len(directions)
    frac = float(degenerate.mean()) if len(xs) else 0.0
    return DegeneracyReport(len(xs), int((~mask).sum()), frac, tol, (step,), ndir, minima, seed)
