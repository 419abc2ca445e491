from fractions import Fraction

import numpy as np
import pytest

from bmgeom.grid import GridSet, translate, union
from bmgeom.harness import (
    ScenarioConfig,
    SuiteReport,
    generate,
    interval_oracle,
    resolve_threads,
    run_delta_sweep,
    run_full_suite,
    run_invariance_suite,
    run_lemma_suite,
    run_rotation_sweep,
)
from bmgeom.harness.exhaustive import mask_to_cells
from bmgeom.harness.generate import perturb, rng_for
from bmgeom.harness.invariance import canonical_translation
from bmgeom.harness.lemmas import level_gap_measure, tail_slope
from bmgeom.harness.suite import ARTIFACTS
from bmgeom.sumset import minkowski_sum


# -- generation ------------------------------------------------------------------


@pytest.mark.parametrize("family", ["ball", "cube", "simplex", "random-polytope", "two-blocks"])
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_generate_is_deterministic(family, dim):
    cfg = ScenarioConfig(seed=4, dim=dim, h=Fraction(1, 8), family=family, deletion=0.05)
    A1, B1 = generate(cfg, 3)
    A2, B2 = generate(cfg, 3)
    assert A1 == A2 and B1 == B2
    assert not A1.is_empty() and not B1.is_empty()


def test_rng_streams_differ():
    a = rng_for(1, 0).integers(0, 2**32, 4)
    b = rng_for(1, 1).integers(0, 2**32, 4)
    assert not np.array_equal(a, b)


def test_deletion_counting_rule():
    G = GridSet.box((0, 0), (40, 25), Fraction(1, 8))
    P = perturb(G, 0.05, 0, rng_for(0, 0))
    assert G.ncells == 1000 and P.ncells == 950
    Q = perturb(G, 0, 0.01, rng_for(0, 0))
    assert Q.ncells == 1010


def test_deletion_fraction_validated():
    G = GridSet.box((0, 0), (4, 4), Fraction(1, 8))
    with pytest.raises(ValueError):
        perturb(G, 1.0, 0, rng_for(0, 0))
    with pytest.raises(ValueError):
        ScenarioConfig(deletion=1.0)
    with pytest.raises(ValueError):
        ScenarioConfig(family="torus")


@pytest.mark.parametrize("family", ["cube", "simplex"])
def test_ratio_scales_measure(family):
    cfg = ScenarioConfig(seed=0, dim=2, h=Fraction(1, 16), family=family)
    A, B = generate(cfg, 0)
    assert A.measure() == pytest.approx(float(B.measure()), rel=0.1)
    cfg2 = cfg.with_(ratio=Fraction(2))
    A2, B2 = generate(cfg2, 0)
    assert B2.measure() > 3 * A2.measure()


def test_config_round_trip():
    cfg = ScenarioConfig(seed=9, dim=3, h=Fraction(1, 8), family="simplex", deletion=0.02, t=Fraction(1, 3))
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.params.t == Fraction(1, 3)


# -- lemma suite -------------------------------------------------------------------


def test_lemma_suite_two_dimensional():
    report = run_lemma_suite(ScenarioConfig(seed=0, dim=2, trials=100, h=Fraction(1, 16)))
    assert report.ok, {k: v.examples for k, v in report.checks.items() if v.failed}
    assert report.checks["natural_sumset"].passed == 100


def test_lemma_suite_one_dimensional():
    report = run_lemma_suite(ScenarioConfig(seed=1, dim=1, trials=30))
    assert report.ok and set(report.checks) == {"bm_positivity"}


def _spreading(G):
    """A bogus symmetrization that adds a distant copy of the set."""
    return union(G, translate(G, (500,) + (0,) * (G.dim - 1)))


@pytest.mark.parametrize("dim", [2, 3])
def test_lemma_suite_reports_injected_violation(dim):
    cfg = ScenarioConfig(seed=2, dim=dim, trials=3, h=Fraction(1, 8))
    report = run_lemma_suite(cfg, symmetrizer=_spreading)
    assert not report.ok
    assert report.checks["natural_sumset"].failed == 3


def test_lemma_suite_extra_pairs():
    A = GridSet.box((0, 0), (3, 3), Fraction(1, 4))
    cfg = ScenarioConfig(seed=2, dim=2, trials=2, h=Fraction(1, 8))
    report = run_lemma_suite(cfg, extra_pairs=[(A, A)])
    assert report.checks["bm_positivity"].passed == 3


@pytest.mark.parametrize("seed", range(5))
def test_level_gap_measure_by_sampling(seed):
    rng = np.random.default_rng(seed)
    fibers = rng.integers(0, 9, 12)
    cells = [(x, y) for x, n in enumerate(fibers) for y in range(n)]
    G = GridSet.from_cells(cells, Fraction(1, 2))
    tau, r = Fraction(int(rng.integers(1, 4)), 2), Fraction(int(rng.integers(1, 6)), 4)

    def level(s):
        # base measure of columns whose fiber is longer than s
        return sum(Fraction(1, 2) for n in fibers if n * Fraction(1, 2) > s)

    # breakpoints are multiples of h/2, so quarter-step midpoints are exact samples
    step = Fraction(1, 8)
    expected = sum(step for k in range(8 * 5) if level((k + Fraction(1, 2)) * step) - level((k + Fraction(1, 2)) * step + tau) > r)
    assert level_gap_measure(G, tau, r) == expected


def test_level_gap_measure_example():
    G = GridSet.from_cells([(0, 0), (0, 1), (0, 2), (1, 0), (2, 0), (2, 1)], Fraction(1))
    # fibers 3, 1, 2: every unit shift drops the superlevel by exactly one column
    assert level_gap_measure(G, Fraction(1), Fraction(1)) == 0
    assert level_gap_measure(G, Fraction(1), Fraction(1, 2)) == 3


def test_tail_slope_of_cube_is_infinite():
    assert tail_slope(GridSet.box((0, 0), (8, 8), Fraction(1, 8))) == float("inf")


def test_suite_report_json_round_trip():
    report = run_lemma_suite(ScenarioConfig(seed=0, dim=2, trials=3, h=Fraction(1, 8)))
    again = SuiteReport.from_json(report.to_json())
    assert again.to_json() == report.to_json()


# -- exhaustive oracle ---------------------------------------------------------------


def test_oracle_matches_direct_sumset():
    n = 5
    res = interval_oracle(n)
    eligible = 0
    for mu in range(1, 1 << n):
        U = GridSet.from_cells([(c,) for c in mask_to_cells(mu)], 1, dim=1)
        for mv in range(1, 1 << n):
            V = GridSet.from_cells([(c,) for c in mask_to_cells(mv)], 1, dim=1)
            eps = minkowski_sum(U, V).measure() - U.measure() - V.measure()
            eligible += eps < min(U.measure(), V.measure())
    assert res.ok and res.pairs == 31**2
    assert res.eligible == eligible


# -- sweeps ------------------------------------------------------------------------------


SMALL = ScenarioConfig(seed=0, dim=2, h=Fraction(1, 16), trials=3)


def test_delta_sweep_csv():
    rep = run_delta_sweep(SMALL, levels=(0.0, 0.05))
    assert len(rep.rows) == 6
    back = SuiteReport.from_csv(rep.to_csv())
    assert len(back.rows) == 6
    assert [r["level"] for r in back.rows] == [r["level"] for r in rep.rows]
    assert back.rows[0]["delta"] == rep.rows[0]["delta"]
    assert set(rep.summary) == {"0.0", "0.05"}
    assert all(r["error"] is None for r in rep.rows)
    assert "time_pipeline" not in rep.columns()


def test_delta_sweep_timings_optional():
    rep = run_delta_sweep(SMALL.with_(trials=1), levels=(0.0,), timings=True)
    assert "time_pipeline" in rep.columns()


def test_delta_sweep_threads_match_serial():
    a = run_delta_sweep(SMALL, levels=(0.0, 0.05), threads=1)
    b = run_delta_sweep(SMALL, levels=(0.0, 0.05), threads=2)
    assert a.to_csv() == b.to_csv()


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("BM_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
    monkeypatch.delenv("BM_THREADS")
    assert resolve_threads(None) == 1


def test_unperturbed_delta_decreases_with_h():
    meds = []
    for h in (Fraction(1, 16), Fraction(1, 32), Fraction(1, 64)):
        rep = run_delta_sweep(ScenarioConfig(seed=0, dim=2, h=h, trials=3), levels=(0.0,))
        meds.append(rep.summary["0.0"]["median_delta"])
    assert meds[0] > meds[1] > meds[2]


def test_rotation_sweep_cube():
    cfg = ScenarioConfig(seed=0, dim=2, h=Fraction(1, 32), family="cube", trials=2)
    rep = run_rotation_sweep(cfg)
    assert len(rep.rows) == 6 and all(r["error"] is None for r in rep.rows)
    s = rep.summary
    assert s["spread"] <= 2 * s["min_eps"] + s["max_drift"] + 0.1


# -- invariance and the full suite ------------------------------------------------------


def test_invariance_suite():
    rep = run_invariance_suite(ScenarioConfig(seed=0, h=Fraction(1, 16)), pairs=6)
    assert rep.ok
    assert rep.checks["translation"].passed == 6
    assert rep.checks["shear"].passed == 6


def test_invariance_one_dimensional():
    rep = run_invariance_suite(ScenarioConfig(seed=0, dim=1, h=Fraction(1, 16)), pairs=5)
    assert rep.ok and "shear" not in rep.checks


def test_canonical_translation_shifts_positions():
    report = {"u": ["1/2", "0"], "v": ["3/4", "1"], "trace": {}}
    out = canonical_translation(report, [2, -4], Fraction(1, 4))
    assert out == {"u": ["0", "1"], "v": ["1/4", "2"], "trace": {}}


def test_full_suite_is_reproducible(tmp_path):
    cfg = ScenarioConfig(seed=3, dim=2, h=Fraction(1, 16), trials=2)
    a = run_full_suite(cfg, tmp_path / "a", pairs=2, oracle_n=5)
    b = run_full_suite(cfg, tmp_path / "b", pairs=2, oracle_n=5, threads=2)
    assert set(a) == set(ARTIFACTS)
    assert a == b
    for name in ARTIFACTS:
        assert (tmp_path / "a" / name).read_bytes() == a[name]
