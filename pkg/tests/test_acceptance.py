"""One line per acceptance criterion, printed past pytest's capture."""
import time
from fractions import Fraction

import numpy as np

from lipfill import kaufman, suites

SEED = 0
_cache = {}


def timed(key, fn):
    if key not in _cache:
        t0 = time.perf_counter()
        rep = fn()
        _cache[key] = (rep, time.perf_counter() - t0)
    return _cache[key]


def flagship():
    return kaufman.build_self_similar(1, 2, Fraction(1, 10))


RUNNERS = {
    "core": lambda: suites.core_suite(SEED),
    "epsilon": lambda: suites.epsilon_suite(SEED),
    "winding": lambda: suites.winding_suite(SEED),
    "kaufman": lambda: suites.kaufman_suite(flagship(), seed=SEED),
    "heis": lambda: suites.heis_suite(SEED),
    "tree": lambda: suites.tree_suite(SEED),
}


def announce(capsys, k, ok, secs, limit, detail):
    with capsys.disabled():
        tag = "PASS" if ok else "FAIL"
        print(f"\nACCEPTANCE {k}: {tag}  {secs:.2f}s (limit {limit})  {detail}")


def failing(rep, prefix=()):
    return [c.name for c in rep.checks if c.passed is False and (not prefix or c.name.startswith(prefix))]


def finish(capsys, k, rep, secs, limit, detail, extra_ok=True):
    bad = failing(rep)
    ok = not bad and extra_ok and secs < limit
    announce(capsys, k, ok, secs, f"{limit}s", detail if not bad else f"failing: {bad}")
    assert not bad
    assert extra_ok
    assert secs < limit


def test_criterion_1_group_core(capsys):
    rep, secs = timed("core", RUNNERS["core"])
    worst = max(float(c.fields["residual"]) for c in rep.checks if "residual" in c.fields)
    hol = float(rep["holonomy"].fields["value"])
    finish(capsys, 1, rep, secs, 5, f"max residual {worst:.2e}, holonomy {hol:.9f}",
           worst <= 1e-12 and abs(hol + np.pi) <= 1e-6)


def test_criterion_2_choose_epsilon(capsys):
    rep, secs = timed("epsilon", RUNNERS["epsilon"])
    ok = True
    for n, k in ((1, 2), (2, 4), (3, 5)):
        f = rep[f"n{n}k{k}"].fields
        e, nxt = Fraction(f["epsilon"]), Fraction(f["next"])
        assert e.numerator == 1 and nxt == Fraction(1, e.denominator - 1)
        ok &= (1 / (2 * e)) ** (k + 1) > (1 / e) ** (n + 1)
        ok &= not (1 / (2 * nxt)) ** (k + 1) > (1 / nxt) ** (n + 1)
    eps = ", ".join(rep[f"n{n}k{k}"].fields["epsilon"] for n, k in ((1, 2), (2, 4), (3, 5)))
    finish(capsys, 2, rep, secs, 1, f"epsilon {eps}", ok)


def test_criterion_3_winding(capsys):
    rep, secs = timed("winding", RUNNERS["winding"])
    iota = [c for c in rep.checks if c.name.startswith("iota_")]
    obs = [c for c in rep.checks if c.name.startswith("obstruction_")]
    ok = len(iota) >= 3 and len(obs) >= 9
    finish(capsys, 3, rep, secs, 10, f"{len(iota)} iota grids all-ones, {len(obs)} obstruction vectors zero", ok)


def test_criterion_4_kaufman(capsys):
    rep, secs = timed("kaufman", RUNNERS["kaufman"])
    lips = [rep[f"lip_depth{d}"].fields for d in range(1, 5)]
    ok = all(float(f["estimate"]) <= float(f["bound"]) for f in lips)
    ok &= all(f"consistency_depth{d}" in [c.name for c in rep.checks] for d in range(4))
    frac = float(rep["rank"].fields["fraction"])
    ok &= frac >= 0.95 and float(rep["rank"].fields["tol"]) == 0.05
    ok &= rep["cover_depth3"].fields["hit"] == rep["cover_depth3"].fields["cells"]
    est = max(float(f["estimate"]) for f in lips)
    finish(capsys, 4, rep, secs, 120,
           f"max Lip est {est:.3f} <= {lips[0]['bound']}, rank fraction {frac:.4f}, depth-3 cover "
           f"{rep['cover_depth3'].fields['hit']}/{rep['cover_depth3'].fields['cells']}", ok)


def test_criterion_5_heisenberg(capsys):
    rep, secs = timed("heis", RUNNERS["heis"])
    ratio = float(rep["adjacent_stability"].fields["ratio"])
    lv = [float(rep[f"tower_level{i}"].fields["lip"]) for i in range(4)]
    ok = ratio <= 1.5 and len(lv) == 4
    finish(capsys, 5, rep, secs, 120, f"C ratio {ratio:.3f}, Lip(sigma_i) {', '.join(f'{x:.3f}' for x in lv)}", ok)


def test_criterion_6_tree_corpus(capsys):
    rep, secs = timed("tree", RUNNERS["tree"])
    V = {n: rep[f"{n}_mesh"].fields["vertices"] for n in ("height", "tripod")}
    ok = all(v >= 10000 for v in V.values())
    finish(capsys, 6, rep, secs, 180,
           f"vertices {V}, tripod delta rel {float(rep['tripod_delta'].fields['relative']):.1e}, "
           f"witness area {float(rep['circle_witness'].fields['area']):.4f}", ok)


def test_criterion_7_determinism(capsys):
    t0 = time.perf_counter()
    diffs = []
    for name, fn in RUNNERS.items():
        first = timed(name, fn)[0].to_text()
        if fn().to_text() != first:
            diffs.append(name)
    secs = time.perf_counter() - t0
    announce(capsys, 7, not diffs, secs, "none", f"{len(RUNNERS)} suites rerun, differing: {diffs or 'none'}")
    assert not diffs
