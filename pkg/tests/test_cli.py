import pytest

from lipfill.cli import main
from lipfill.report import Report


def run(*argv):
    try:
        return main(list(argv))
    except SystemExit as exc:
        return exc.code


def rep(path):
    return Report.from_text(open(path).read())


@pytest.fixture(scope="module")
def flagship(tmp_path_factory):
    d = tmp_path_factory.mktemp("k")
    path = d / "f.map"
    assert run("kaufman", "build", "--n", "1", "--k", "2", "--epsilon", "1/10", "--out", str(path)) == 0
    return path


def test_build_and_rank(flagship, tmp_path, capsys):
    out = tmp_path / "rank.rep"
    assert run("kaufman", "verify", "--map", str(flagship), "--suite", "rank", "--out", str(out)) == 0
    r = rep(out)
    assert float(r["rank"].fields["fraction"]) >= 0.95


def test_eval(flagship, capsys):
    assert run("kaufman", "eval", "--map", str(flagship), "--point", "0.3", "0.4", "0.5", "--depth", "2") == 0
    assert "error_bound=" in capsys.readouterr().out
    assert run("kaufman", "eval", "--map", str(flagship), "--point", "0.3", "0.4") == 2


@pytest.mark.parametrize("eps", ["0.1", "1/0", "abc", "3/2"])
def test_epsilon_must_be_reciprocal_fraction(eps, tmp_path):
    assert run("kaufman", "build", "--epsilon", eps, "--out", str(tmp_path / "m")) == 2


def test_missing_and_malformed_inputs(tmp_path):
    assert run("kaufman", "verify", "--map", str(tmp_path / "none")) == 2
    bad = tmp_path / "bad.map"
    bad.write_text("garbage\n")
    assert run("kaufman", "verify", "--map", str(bad)) == 2
    assert run("report", "--merge", str(bad)) == 2
    assert run("nosuch") == 2


def test_tree_pipeline(tmp_path):
    mesh = tmp_path / "t.mesh"
    out = tmp_path / "f.rep"
    assert run("tree", "mesh", "--kind", "tripod", "--vertices", "1200", "--out", str(mesh)) == 0
    assert run("tree", "factor", "--mesh", str(mesh), "--map", "tripod", "--tau", "0", "--out", str(out)) == 0
    dist = tmp_path / "f.dist.csv"
    assert dist.exists() and (tmp_path / "f.labels.csv").exists()
    cert = tmp_path / "c.rep"
    assert run("tree", "certify", "--dist", str(dist), "--out", str(cert)) == 0
    assert rep(cert)["four_point"].passed
    pr = tmp_path / "p.rep"
    assert run("tree", "prune", "--dist", str(dist), "--net", "0,1", "--out", str(pr)) == 0
    assert run("tree", "prune", "--dist", str(dist), "--net", "99999", "--out", str(pr)) == 2


def test_projection_fails_certification(tmp_path):
    mesh = tmp_path / "s.mesh"
    out = tmp_path / "f.rep"
    run("tree", "mesh", "--kind", "fibonacci", "--vertices", "300", "--out", str(mesh))
    run("tree", "factor", "--mesh", str(mesh), "--map", "projection", "--tau", "0", "--out", str(out))
    assert run("tree", "certify", "--dist", str(tmp_path / "f.dist.csv"), "--out", str(tmp_path / "c")) == 1


def test_witness(tmp_path):
    assert run("tree", "witness", "--out", str(tmp_path / "w.rep")) == 0
    assert run("tree", "witness", "--delta", "0.02", "--out", str(tmp_path / "v.rep")) == 1
    assert rep(tmp_path / "v.rep")["witness"].fields["error"] == "NO_VALID_DELTA"


def test_merge_is_byte_identical(tmp_path):
    for i in (1, 2):
        assert run("kaufman", "epsilon", "--seed", "5", "--out", str(tmp_path / f"e{i}.rep")) == 0
        assert run("heis", "check", "--seed", "5", "--out", str(tmp_path / f"h{i}.rep")) == 0
    a, b = tmp_path / "m1.rep", tmp_path / "m2.rep"
    assert run("report", "--merge", str(tmp_path / "e1.rep"), str(tmp_path / "h1.rep"), "--out", str(a)) == 0
    assert run("report", "--merge", str(tmp_path / "e2.rep"), str(tmp_path / "h2.rep"), "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "e1.rep").read_bytes() == (tmp_path / "e2.rep").read_bytes()
