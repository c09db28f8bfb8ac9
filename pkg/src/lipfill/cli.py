"""Command-line driver: ``lipfill {kaufman|heis|tree|report} ...``.

Exit status is 0 when every check passes, 1 when a suite fails (the report
is still written) and 2 for usage errors or malformed input files.
"""
from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

import numpy as np

from . import kaufman, meshes, suites
from . import treefactor as tf
from .report import Report, ReportFormatError, atomic_write, merge, output_path, write_csv


class UsageError(Exception):
    pass


def parse_epsilon(text) -> Fraction:
    """Exact rational: ``1/10`` or ``10`` (read as 1/10).  Decimals are rejected."""
    t = text.strip()
    if any(c in t for c in ".eE"):
        raise argparse.ArgumentTypeError(f"decimal epsilon {text!r} rejected; use a fraction such as 1/10")
    try:
        f = Fraction(t)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if f > 1 and f.denominator == 1:
        f = 1 / f
    if f <= 0 or f.numerator != 1:
        raise argparse.ArgumentTypeError(f"epsilon must be 1/m for a positive integer m, got {text}")
    return f


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(str(exc)) from exc


def _emit(rep: Report, out, default_name):
    path = output_path(default_name, out)
    rep.write(path)
    print(path)
    return 0 if rep.passed else 1


# ---------------------------------------------------------------------------
# kaufman


def _load_map(path):
    try:
        return kaufman.SelfSimilarMap.from_text(_read(path))
    except (KeyError, ValueError) as exc:
        raise UsageError(f"malformed map file {path}: {exc}") from exc


def cmd_kaufman_build(a):
    turns = a.turns
    if a.beta:
        try:
            beta = kaufman.BetaSpec.from_text(_read(a.beta))
        except (KeyError, ValueError) as exc:
            raise UsageError(f"malformed beta file {a.beta}: {exc}") from exc
        if beta.dim != a.k + 1:
            raise kaufman.Incompatible(f"beta lives on S^{beta.dim - 1}, expected S^{a.k}")
        turns = beta.turns
    F = kaufman.build_self_similar(a.n, a.k, a.epsilon, a.holes, turns)
    path = output_path("kaufman.map", a.out)
    atomic_write(path, F.to_text())
    print(path)
    return 0


def cmd_kaufman_eval(a):
    F = _load_map(a.map)
    x = np.asarray(a.point, dtype=float)
    if len(x) != F.base.K.dim:
        raise UsageError(f"point needs {F.base.K.dim} coordinates")
    val, err, level = F.evaluate(x, a.depth)
    print(" ".join(repr(float(v)) for v in np.atleast_1d(val)))
    print(f"error_bound={err!r} level={level}")
    return 0


def cmd_kaufman_verify(a):
    F = _load_map(a.map)
    which = ("lip", "consistency", "rank", "cover") if a.suite == "all" else (a.suite,)
    rep = suites.kaufman_suite(F, which, seed=a.seed, pairs=a.samples * 10, samples=a.samples)
    return _emit(rep, a.out, f"kaufman-{a.suite}.rep")


def cmd_kaufman_epsilon(a):
    return _emit(suites.epsilon_suite(a.seed), a.out, "epsilon.rep")


def cmd_kaufman_winding(a):
    return _emit(suites.winding_suite(a.seed), a.out, "winding.rep")


# ---------------------------------------------------------------------------
# heis


def cmd_heis_check(a):
    return _emit(suites.core_suite(a.seed, triples=a.samples), a.out, "core.rep")


def cmd_heis_tower(a):
    rep = suites.heis_suite(a.seed, tower_eps=a.epsilon, depth=a.depth, beam=a.beam, pairs=a.samples)
    return _emit(rep, a.out, "heis.rep")


# ---------------------------------------------------------------------------
# tree


def _load_mesh(path):
    try:
        return meshes.SphereMesh.from_text(_read(path))
    except meshes.MeshFormatError as exc:
        raise UsageError(f"malformed mesh file {path}: {exc}") from exc


def _side(path, tag):
    root, _ = os.path.splitext(path)
    return f"{root}.{tag}.csv"


def _load_dist(path):
    try:
        D = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    except (OSError, ValueError) as exc:
        raise UsageError(f"malformed distance table {path}: {exc}") from exc
    if D.shape[0] != D.shape[1]:
        raise UsageError("distance table must be square")
    return D


def cmd_tree_mesh(a):
    mesh = suites.corpus_mesh(a.kind, a.vertices)
    path = output_path(f"{a.kind}.mesh", a.out)
    atomic_write(path, mesh.to_text())
    print(path)
    return 0


def cmd_tree_factor(a):
    mesh = _load_mesh(a.mesh)
    dm, Z, fp = suites.tree_factor(mesh, a.map, a.tau)
    rep = Report("tree-factor", {"mesh": mesh.name, "map": a.map, "tau": Z.tau, "seed": a.seed})
    rep.add("quotient", Z.triangle_violation <= 1e-9, classes=Z.size, diameter=Z.diameter,
            triangle_violation=Z.triangle_violation)
    rep.add("lip_phi", fp.lip_phi <= 1.05, lip=fp.lip_phi, limit=1.05)
    limit = fp.C * fp.lip_f * 1.1
    rep.add("lip_psi", fp.lip_psi <= limit, lip=fp.lip_psi, C=fp.C, lip_f=fp.lip_f, limit=limit)
    rep.add("factorisation", fp.exact, exact=fp.exact)
    path = output_path("tree-factor.rep", a.out)
    write_csv(_side(path, "dist"), [f"c{i}" for i in range(Z.size)], Z.D)
    write_csv(_side(path, "labels"), ["vertex", "class"], zip(range(mesh.V), Z.labels))
    return _emit(rep, path, None)


def cmd_tree_certify(a):
    D = _load_dist(a.dist)
    cert = tf.certify_tree(D, samples=a.samples, seed=a.seed)
    rep = Report("tree-certify", {"dist": os.path.basename(a.dist), "seed": a.seed, "samples": a.samples,
                                  "tol": a.tol})
    rep.add("four_point", cert.passes(a.tol), delta=cert.delta, relative=cert.relative, witness=cert.witness,
            quadruples=cert.quadruples, exhaustive=cert.exhaustive)
    rep.add("tripod_residual", None, value=cert.tripod_residual)
    return _emit(rep, a.out, "tree-certify.rep")


def cmd_tree_witness(a):
    t = np.linspace(0.0, 2 * np.pi, a.samples + 1)
    rep = Report("tree-witness", {"a": a.a, "b": a.b, "delta": a.delta, "eps": a.eps, "samples": a.samples,
                                  "curve": "unit-circle"})
    try:
        w = tf.witness_pair(tf.circle_arc_dist, t, t, a.a, a.b, a.delta, a.eps, 1.0)
    except tf.NoValidDelta as exc:
        rep.add("witness", False, error="NO_VALID_DELTA", sample=exc.sample)
        return _emit(rep, a.out, "tree-witness.rep")
    need = w.lower_bound - 1e-6
    rep.add("witness", w.area >= need and need > 0, area=w.area, bound=w.lower_bound)
    return _emit(rep, a.out, "tree-witness.rep")


def cmd_tree_prune(a):
    D = _load_dist(a.dist)
    Z = tf.QuotientSpace(np.arange(len(D)), np.arange(len(D)), D, 0.0, 0.0)
    ids = [int(x) for x in a.net.split(",") if x.strip()]
    if not ids or min(ids) < 0 or max(ids) >= len(D):
        raise UsageError("net ids must be class indices of the distance table")
    try:
        P = tf.prune_project(Z, ids)
    except tf.NotCertified as exc:
        rep = Report("tree-prune", {"net": ids})
        rep.add("certified", False, error=str(exc))
        return _emit(rep, a.out, "tree-prune.rep")
    rep = Report("tree-prune", {"net": ids})
    rep.add("pruned", None, nodes=len(P.nodes), edges=len(P.edges), max_displacement=P.max_displacement)
    path = output_path("tree-prune.rep", a.out)
    write_csv(_side(path, "edges"), ["a", "b"], P.edges)
    return _emit(rep, path, None)


# ---------------------------------------------------------------------------
# report


def cmd_report(a):
    reps = []
    for p in a.merge:
        try:
            reps.append(Report.from_text(_read(p)))
        except ReportFormatError as exc:
            raise UsageError(f"malformed report {p}: {exc}") from exc
    return _emit(merge(reps), a.out, "merged.rep")


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="lipfill", description="Lipschitz extension and factorisation experiments")
    sub = p.add_subparsers(dest="group", required=True)

    def common(sp, samples=10000):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--samples", type=int, default=samples)
        sp.add_argument("--out")

    k = sub.add_parser("kaufman").add_subparsers(dest="cmd", required=True)
    b = k.add_parser("build")
    b.add_argument("--n", type=int, default=1)
    b.add_argument("--k", type=int, default=2)
    b.add_argument("--epsilon", type=parse_epsilon)
    b.add_argument("--holes", type=int)
    b.add_argument("--turns", type=float, default=1.0)
    b.add_argument("--beta")
    b.add_argument("--out")
    b.set_defaults(fn=cmd_kaufman_build)
    e = k.add_parser("eval")
    e.add_argument("--map", required=True)
    e.add_argument("--point", type=float, nargs="+", required=True)
    e.add_argument("--depth", type=int, default=3)
    e.set_defaults(fn=cmd_kaufman_eval)
    v = k.add_parser("verify")
    v.add_argument("--map", required=True)
    v.add_argument("--suite", choices=["lip", "rank", "cover", "consistency", "all"], default="all")
    common(v)
    v.set_defaults(fn=cmd_kaufman_verify)
    for name, fn in (("epsilon", cmd_kaufman_epsilon), ("winding", cmd_kaufman_winding)):
        sp = k.add_parser(name)
        common(sp)
        sp.set_defaults(fn=fn)

    h = sub.add_parser("heis").add_subparsers(dest="cmd", required=True)
    c = h.add_parser("check")
    common(c, 1000)
    c.set_defaults(fn=cmd_heis_check)
    t = h.add_parser("tower")
    t.add_argument("--epsilon", type=parse_epsilon, default=Fraction(1, 16))
    t.add_argument("--depth", type=int, default=3)
    t.add_argument("--beam", type=int, default=6)
    common(t)
    t.set_defaults(fn=cmd_heis_tower)

    tr = sub.add_parser("tree").add_subparsers(dest="cmd", required=True)
    m = tr.add_parser("mesh")
    m.add_argument("--kind", choices=["height", "tripod", "fibonacci"], required=True)
    m.add_argument("--vertices", type=int, default=10000)
    m.add_argument("--out")
    m.set_defaults(fn=cmd_tree_mesh)
    f = tr.add_parser("factor")
    f.add_argument("--mesh", required=True)
    f.add_argument("--map", required=True, help="height | tripod | projection | custom:<file>")
    f.add_argument("--tau", type=float)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out")
    f.set_defaults(fn=cmd_tree_factor)
    ce = tr.add_parser("certify")
    ce.add_argument("--dist", required=True, help="distance table written by tree factor")
    ce.add_argument("--tol", type=float, default=1e-3)
    common(ce, 200000)
    ce.set_defaults(fn=cmd_tree_certify)
    w = tr.add_parser("witness")
    w.add_argument("--a", type=float, default=0.0)
    w.add_argument("--b", type=float, default=float(np.pi / 2))
    w.add_argument("--delta", type=float, default=0.004)
    w.add_argument("--eps", type=float, default=0.005)
    w.add_argument("--samples", type=int, default=4000)
    w.add_argument("--out")
    w.set_defaults(fn=cmd_tree_witness)
    pr = tr.add_parser("prune")
    pr.add_argument("--dist", required=True)
    pr.add_argument("--net", required=True, help="comma-separated class ids")
    pr.add_argument("--out")
    pr.set_defaults(fn=cmd_tree_prune)

    r = sub.add_parser("report")
    r.add_argument("--merge", nargs="+", required=True)
    r.add_argument("--out")
    r.set_defaults(fn=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"lipfill: error: {exc}", file=sys.stderr)
        return 2
    except (kaufman.Unsupported, kaufman.Incompatible, tf.AmbiguousThreshold, tf.Disconnected, ValueError) as exc:
        print(f"lipfill: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
