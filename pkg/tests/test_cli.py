import json
from fractions import Fraction

import pytest

from bmgeom import io
from bmgeom.cli import main
from bmgeom.grid import GridSet


@pytest.fixture
def pair(tmp_path):
    a, b = tmp_path / "a.bm", tmp_path / "b.bm"
    assert main(["gen", "--h", "1/16", "--out-a", str(a), "--out-b", str(b)]) == 0
    return a, b


def test_gen_is_seeded(tmp_path, pair):
    a, _ = pair
    c, d = tmp_path / "c.bm", tmp_path / "d.bm"
    assert main(["gen", "--h", "1/16", "--out-a", str(c), "--out-b", str(d)]) == 0
    assert a.read_bytes() == c.read_bytes()
    assert main(["--seed", "5", "gen", "--h", "1/16", "--out-a", str(c), "--out-b", str(d)]) == 0


def test_sum_and_deficit(tmp_path, pair, capsys):
    a, b = pair
    out = tmp_path / "s.bm"
    assert main(["sum", "--a", str(a), "--b", str(b), "--out", str(out)]) == 0
    assert io.load_grid(out).measure() > io.load_grid(a).measure()
    assert main(["sum", "--a", str(a), "--b", str(b), "--t", "1/3", "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["--json", "deficit", "--a", str(a), "--b", str(b)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["delta"] >= 0


def test_symmetrize_modes(tmp_path, pair):
    a, _ = pair
    out = tmp_path / "n.bm"
    for mode in ("steiner", "schwarz", "natural"):
        assert main(["symmetrize", "--in", str(a), "--mode", mode, "--out", str(out)]) == 0
    assert main(["symmetrize", "--in", str(a), "--raw-parity", "--out", str(out)]) == 0
    assert io.load_grid(out).measure() == io.load_grid(a).measure()


def test_hull_rasterize_round_trip(tmp_path):
    G = GridSet.box((0, 0), (4, 4), Fraction(1, 4))
    g, p, r = tmp_path / "g.bm", tmp_path / "p.poly", tmp_path / "r.bm"
    io.save_grid(G, g)
    assert main(["hull", "--in", str(g), "--out", str(p)]) == 0
    assert main(["rasterize", "--in", str(p), "--h", "1/4", "--out", str(r)]) == 0
    assert io.load_grid(r) == G


def test_recover_json(pair, tmp_path, capsys):
    a, b = pair
    capsys.readouterr()
    args = ["--json", "recover", "--a", str(a), "--b", str(b), "--t", "1/2"]
    assert main(args + ["--out", str(tmp_path / "k.poly")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["mode"] == "pipeline" and "timings" not in rep["trace"]
    assert main(args + ["--mode", "hull", "--delta-schedule", "eps=1/32,rho=1/16,eta=1/8"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["mode"] == "hull-baseline"
    assert main(args + ["--timings"]) == 0
    assert "timings" in json.loads(capsys.readouterr().out)["trace"]


def test_lemmas_command(tmp_path):
    out = tmp_path / "l.json"
    code = main(["lemmas", "--trials", "3", "--h", "1/8", "--oracle", "--oracle-n", "5", "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text())["checks"]["interval_exhaustive"]["failed"] == 0


def test_sweep_and_rotate(tmp_path):
    csv = tmp_path / "s.csv"
    assert main(["--threads", "1", "sweep", "--trials", "2", "--h", "1/16", "--levels", "0,0.05",
                 "--csv", str(csv)]) == 0
    assert len(csv.read_text().splitlines()) == 5
    assert main(["rotate", "--trials", "1", "--h", "1/16", "--angles", "0,pi/8", "--csv", str(csv)]) == 0
    assert len(csv.read_text().splitlines()) == 3


def test_rotate_resample(tmp_path, pair):
    a, _ = pair
    out = tmp_path / "r.bm"
    assert main(["rotate", "--in", str(a), "--angles", "pi/2", "--out", str(out)]) == 0
    assert io.load_grid(out).ncells == io.load_grid(a).ncells


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["hull", "--in", "/nonexistent/file.bm"],
        ["sum", "--a", "x"],
        ["gen", "--h", "abc", "--out-a", "a", "--out-b", "b"],
        ["recover", "--a", "a", "--b", "b", "--delta-schedule", "zeta=1"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_bad_file_version_exit_2(tmp_path):
    bad = tmp_path / "bad.bm"
    bad.write_text("BMGRID 9\n")
    assert main(["hull", "--in", str(bad)]) == 2


def test_recovery_failure_exits_1(tmp_path):
    a = tmp_path / "a.bm"
    b = tmp_path / "b.bm"
    io.save_grid(GridSet.box((0, 0), (4, 4), Fraction(1, 4)), a)
    io.save_grid(GridSet.box((0, 0, 0), (2, 2, 2), Fraction(1, 4)), b)
    assert main(["recover", "--a", str(a), "--b", str(b)]) == 1


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0
