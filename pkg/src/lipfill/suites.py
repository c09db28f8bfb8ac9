"""Verification suites shared by the CLI and the acceptance tests.

Every suite takes an integer seed, derives its stream with
:func:`report.suite_seed`, and returns a :class:`report.Report`.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import heis, heistower, homotopy, kaufman, meshes
from . import treefactor as tf
from .complexes import GridSkeleton, choose_epsilon, epsilon_inequality
from .report import Report, suite_int_seed

HOMOLOGY_NOTE = "degree vectors are homology classes; agreement is necessary, not sufficient, for homotopy"


def _rng(seed, name):
    return np.random.default_rng(suite_int_seed(seed, name))


# ---------------------------------------------------------------------------


def core_suite(seed=0, triples=1000, lift_samples=10000, tol=1e-12) -> Report:
    rep = Report("core", {"seed": seed, "triples": triples, "lift_samples": lift_samples, "tol": tol})
    rng = _rng(seed, "core")
    p, q, r = (heis.random_points(rng, triples) for _ in range(3))
    assoc = np.abs(heis.mul(heis.mul(p, q), r) - heis.mul(p, heis.mul(q, r))).max()
    rep.add("associativity", assoc <= tol, residual=assoc)
    ident = np.abs(heis.mul(p, heis.inv(p))).max()
    rep.add("inverse", ident <= tol, residual=ident)
    for name, d in (("koranyi", heis.koranyi_dist), ("path_bound", heis.path_bound_dist)):
        base = d(p, q)
        li = np.abs(d(heis.mul(r, p), heis.mul(r, q)) - base).max()
        rep.add(f"left_invariance_{name}", li <= tol, residual=li)
        s = np.exp(rng.uniform(-2, 2, size=triples))
        hom = np.abs(d(heis.dilate_arr(s, p), heis.dilate_arr(s, q)) - s * base).max()
        rep.add(f"homogeneity_{name}", hom <= tol, residual=hom)
    s = np.exp(rng.uniform(-2, 2, size=triples))
    dh = np.abs(heis.dilate_arr(s, heis.mul(p, q)) - heis.mul(heis.dilate_arr(s, p), heis.dilate_arr(s, q))).max()
    rep.add("dilation_homomorphism", dh <= tol, residual=dh)
    th = np.linspace(0.0, 2 * np.pi, lift_samples + 1)
    c = heis.horizontal_lift(np.column_stack([np.cos(th), np.sin(th)]))
    hol = float(c.points[-1, 2] - c.points[0, 2])
    rep.add("holonomy", abs(hol + np.pi) <= 1e-6, value=hol, target=-np.pi)
    br = heis.gauge_bracket(samples=2000, seed=suite_int_seed(seed, "bracket"))
    rep.add("gauge_bracket", None, value=br)
    return rep


def epsilon_suite(seed=0, cases=((1, 2), (2, 4), (3, 5))) -> Report:
    rep = Report("epsilon", {"seed": seed, "cases": [f"{n}:{k}" for n, k in cases]})
    for n, k in cases:
        e = choose_epsilon(n, k)
        m = e.denominator
        ok = Fraction(1) / (2 * e) ** (k + 1) > Fraction(1) / e ** (n + 1)
        nxt = Fraction(1, m - 1)
        fails = not (Fraction(1) / (2 * nxt) ** (k + 1) > Fraction(1) / nxt ** (n + 1))
        rep.add(f"n{n}k{k}", ok and fails and epsilon_inequality(e, n, k), epsilon=str(e), next=str(nxt),
                holds=ok, next_fails=fails)
    return rep


def winding_suite(seed=0, eps_list=(Fraction(1, 3), Fraction(1, 5), Fraction(1, 10)), degrees=(0, 1, 2)) -> Report:
    rep = Report("winding", {"seed": seed, "eps": [str(e) for e in eps_list], "degrees": list(degrees)})
    rep.note(HOMOLOGY_NOTE)
    for e in eps_list:
        g = GridSkeleton(1, e)
        v = homotopy.decompose_in_basis(homotopy.iota(g), g)
        tag = f"1_{e.denominator}"
        rep.add(f"iota_{tag}", np.all(v == 1), cells=g.N, min=int(v.min()), max=int(v.max()))
        for d in degrees:
            beta = homotopy.circle_loop(256, degree=d)
            ob = homotopy.obstruction_vector(beta, g)
            rep.add(f"obstruction_{tag}_deg{d}", np.all(ob == 0), max_abs=int(np.abs(ob).max()))
    g = GridSkeleton(2, Fraction(1, 3))
    v = homotopy.decompose_in_basis(homotopy.iota(g), g)
    rep.add("iota_sphere_1_3", np.all(v == 1), cells=g.N, min=int(v.min()), max=int(v.max()))
    ok, lhs, rhs = homotopy.check_splitting(homotopy.circle_loop(256, degree=2), 3)
    rep.add("splitting", ok, lhs=lhs, rhs=rhs)
    return rep


# ---------------------------------------------------------------------------


def kaufman_config(F: kaufman.SelfSimilarMap):
    b = F.base
    return {"n": F.n, "k": F.k, "epsilon": str(b.eps), "holes": b.K.N, "turns": b.beta.turns,
            "lip_h": b.lip, "lip_eval": b.lip_eval}


def kaufman_suite(F: kaufman.SelfSimilarMap, suites=("lip", "consistency", "rank", "cover"), seed=0,
                  pairs=100000, samples=10000, cover_depth=3) -> Report:
    cfg = kaufman_config(F)
    cfg.update({"seed": seed, "pairs": pairs, "samples": samples, "suites": list(suites)})
    rep = Report("kaufman", cfg)
    rep.note(HOMOLOGY_NOTE)
    for name, v in sorted(F.base.lip_pieces.items()):
        rep.add(f"lip_piece_{name}", None, value=v)
    if "lip" in suites:
        for row in kaufman.verify_lipschitz(F, pairs=pairs, seed=suite_int_seed(seed, "lip")):
            rep.add(f"lip_depth{row['depth']}", row["pass"], estimate=row["estimate"], bound=row["bound"],
                    slack=1.05)
    if "consistency" in suites:
        for row in kaufman.verify_consistency(F, samples=samples, seed=suite_int_seed(seed, "consistency")):
            rep.add(f"consistency_depth{row['depth']}", row["pass"], max_gap=row["max_gap"], limit=row["limit"],
                    strict=row["strict"], pass_strict=row["pass_strict"])
    if "rank" in suites:
        r = kaufman.verify_rank(F, samples=samples, seed=suite_int_seed(seed, "rank"))
        rep.add("rank", r["pass"], fraction=r["fraction"], threshold=0.95, tol=r["tol"], step=r["step"],
                samples=r["samples"], excluded=r["excluded"])
    if "cover" in suites:
        for d in range(1, cover_depth + 1):
            frac, hit, total = _coverage(F, d)
            rep.add(f"cover_depth{d}", hit == total, fraction=frac, hit=hit, cells=total)
    return rep


def _coverage(F, d):
    out = kaufman.coverage(F, d)
    return out["fraction"], out["hit"], out["cells"]


# ---------------------------------------------------------------------------


def heis_suite(seed=0, eps_list=(Fraction(1, 4), Fraction(1, 8), Fraction(1, 16)), tower_eps=Fraction(1, 16),
               depth=3, beam=6, pairs=10000) -> Report:
    rep = Report("heis", {"seed": seed, "eps": [str(e) for e in eps_list], "tower_eps": str(tower_eps),
                          "depth": depth, "beam": beam, "pairs": pairs, "rim": "figure_eight"})
    rep.note("tower Lipschitz values are measured on a beam of copies and are lower estimates")
    Cs, cs = [], []
    for e in eps_list:
        cp = heistower.root_copy(heistower.figure_eight, e)
        Cs.append(cp.ext.adjacent_constant())
        cs.append(cp.lipschitz() / heistower.FIGURE_EIGHT_LIP)
        rep.add(f"adjacent_1_{e.denominator}", None, C=Cs[-1], c=cs[-1])
    ratio = max(Cs) / min(Cs)
    rep.add("adjacent_stability", ratio <= 1.5, ratio=ratio, limit=1.5)
    T = heistower.build_heisenberg_tower(eps=tower_eps, depth=depth, beam=beam, seed=suite_int_seed(seed, "tower"))
    rep.add("tower_c", None, c=T.c, rim_lip=T.rim_lip)
    for row in heistower.tower_rows(T):
        rep.add(f"tower_level{row['level']}", row["pass"], lip=row["lip"], bound=row["bound"], slack=1.1,
                copies=row["copies"])
    G = heistower.build_graph_base_map(T)
    bound = T.c * G.lip * T.rim_lip
    rep.add("graph_base", None, q=G.q, D=G.D, rho=G.rho, lip_h=G.lip)
    for i in range(depth + 1):
        addr = _worst_address(T, i)
        val, used = heistower.shellwise_lipschitz(T, G, addr, pairs=pairs, seed=suite_int_seed(seed, f"shell{i}"))
        rep.add(f"shell_level{i}", val <= 1.1 * bound, lip=val, bound=bound, slack=1.1, pairs=used,
                address=".".join(str(a + 1) for a in addr) or "root")
    return rep


def _worst_address(T, level):
    if level == 0:
        return ()
    cands = sorted(a for a in T._cache if len(a) == level)
    return max(cands, key=lambda a: T._cache[a].lipschitz())


# ---------------------------------------------------------------------------


def corpus_mesh(name, vertices=10000):
    if name == "height":
        rings = max(3, int(round(np.sqrt(vertices))) - 1)
        return meshes.latitude_sphere(rings, max(6, -(-(vertices - 2) // rings)))
    if name == "tripod":
        # ring placement only approximates the requested count; grow until reached
        count = vertices
        m = meshes.tripod_sphere(count)
        while m.V < vertices:
            count = int(np.ceil(count * vertices / m.V)) + 1
            m = meshes.tripod_sphere(count)
        return m
    return meshes.fibonacci_sphere(vertices)


def tree_factor(mesh, map_name, tau=None, edge_samples=0):
    """Domain mesh, quotient and factor maps; ``tau=None`` means the default threshold."""
    vals, dist = meshes.map_by_name(map_name, mesh.vertices)
    if map_name.startswith("custom:"):
        fn, edge_samples = (lambda P: vals), 0
    else:
        fn = lambda P: meshes.map_by_name(map_name, P)[0]  # noqa: E731
    dm = tf.build_domain_mesh(mesh, fn, dist, edge_samples)
    tau = tf.default_tau(dm) if tau is None else tau
    Z = tf.quotient(tf.pullback_metric(dm), tau)
    return dm, Z, tf.factor_maps(dm, Z)


def tree_suite(seed=0, vertices=10000, loops=100, maps=("height", "tripod")) -> Report:
    """Corpus runs use tau = 0: both corpus maps are exact on their meshes."""
    rep = Report("tree", {"seed": seed, "vertices": vertices, "loops": loops, "tau": 0.0, "maps": list(maps)})
    for name in maps:
        mesh = corpus_mesh(name, vertices)
        dm, Z, fp = tree_factor(mesh, name, tau=0.0)
        rep.add(f"{name}_mesh", None, vertices=mesh.V, edges=len(mesh.edges), classes=Z.size,
                triangle_violation=Z.triangle_violation, diameter=Z.diameter)
        if name == "height":
            h = meshes.height(mesh.vertices[Z.reps])
            res = float(np.abs(Z.D - np.abs(h[:, None] - h[None])).max())
            tol = _edge_sampling_tol(dm)
            rep.add("height_interval", res <= 2 * tol, residual=res, edge_sampling_tol=tol)
        cert = tf.certify_tree(Z, seed=suite_int_seed(seed, f"{name}-cert"))
        if name == "tripod":
            rep.add("tripod_delta", cert.relative <= 1e-3, delta=cert.delta, relative=cert.relative,
                    quadruples=cert.quadruples, exhaustive=cert.exhaustive, tripod_residual=cert.tripod_residual)
        rep.add(f"{name}_lip_phi", fp.lip_phi <= 1.05, lip=fp.lip_phi, limit=1.05)
        limit = fp.C * fp.lip_f * 1.1
        rep.add(f"{name}_lip_psi", fp.lip_psi <= limit, lip=fp.lip_psi, C=fp.C, lip_f=fp.lip_f, limit=limit)
        lp = tf.mesh_loops(dm, loops, seed=suite_int_seed(seed, f"{name}-loops"))
        rows = tf.loop_area_test(Z, lp, seed=suite_int_seed(seed, f"{name}-pi"))
        worst = max((a / n if n > 0 else 0.0) for a, n, _ in rows)
        rep.add(f"{name}_loop_area", all(ok for _, _, ok in rows), loops=len(rows), worst_relative=worst, tol=1e-3)
        pl = tf.path_length_check(dm, Z, lp)
        rep.add(f"{name}_path_length", pl <= 1e-9 * max(Z.diameter, 1.0), excess=pl)
    # negative control: the unit circle with its arc metric is not a tree
    t = np.linspace(0.0, 2 * np.pi, 4001)
    a, b, eps = 0.0, np.pi / 2, 0.005
    w = tf.witness_pair(tf.circle_arc_dist, t, t, a, b, delta=0.8 * eps, eps=eps, lip_gamma=1.0)
    need = w.lower_bound - 1e-6
    rep.add("circle_witness", w.area >= need and need > 0, area=w.area, bound=w.lower_bound, eps=eps)
    return rep


def _edge_sampling_tol(dm, samples=8):
    """Largest change of an edge image length between endpoint and interior sampling."""
    fine = tf.DomainMesh(dm.mesh, dm.values, dm.dist, samples, dm.fn)
    return float(np.abs(fine.image_lengths - dm.image_lengths).max())


SUITES = {
    "core": core_suite,
    "epsilon": epsilon_suite,
    "winding": winding_suite,
    "heis": heis_suite,
    "tree": tree_suite,
}
