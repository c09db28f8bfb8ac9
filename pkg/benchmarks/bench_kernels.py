"""Time the numba and numpy paths of the hot kernels and check they agree.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np
from scipy.spatial import ConvexHull

from lipfill import homotopy, kaufman, meshes
from lipfill._accel import HAVE_NUMBA


def best(fn, repeat):
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        ts.append(time.perf_counter() - t0)
    return min(ts), out


def cases(rng):
    F = kaufman.build_self_similar(1, 2)
    X = rng.random((200000, F.base.K.dim))
    yield "evaluate_kernel depth 4 (2e5 pts)", lambda nb: kaufman.evaluate_kernel(X, 4, F.base.params, use_numba=nb)[0]

    t = np.linspace(0, 2 * np.pi, 2001)
    loop = np.column_stack([np.cos(t), np.sin(t)])
    pts = rng.uniform(-1.5, 1.5, (4000, 2))
    yield "loop_winding (2000 edges x 4000 pts)", lambda nb: homotopy.loop_winding(loop, pts, use_numba=nb)

    V = meshes.fibonacci_sphere(2000).vertices
    tris = ConvexHull(V).simplices
    q = rng.uniform(-0.5, 0.5, (2000, 3))
    yield "solid_angle_winding (~4000 tris x 2000 pts)", lambda nb: homotopy.solid_angle_winding(V, tris, q, use_numba=nb)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba not installed; only the numpy path is timed")
    print(f"{'kernel':48s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s}  max |diff|")
    for name, fn in cases(np.random.default_rng(a.seed)):
        tp, ref = best(lambda: fn(False), a.repeat)
        if HAVE_NUMBA:
            fn(True)  # compile outside the timing
            tn, out = best(lambda: fn(True), a.repeat)
            diff = float(np.max(np.abs(np.asarray(out, float) - np.asarray(ref, float))))
            print(f"{name:48s} {tn:9.4f} {tp:9.4f} {tp / tn:8.1f}  {diff:.2e}")
        else:
            print(f"{name:48s} {'-':>9s} {tp:9.4f} {'-':>8s}")


if __name__ == "__main__":
    main()
