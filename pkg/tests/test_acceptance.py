"""Acceptance criteria, each at its stated scale, tolerance and time budget.

Every test prints one ``PASS``/``FAIL`` line (shown even under output
capture) before asserting.
"""

import time
from fractions import Fraction

import pytest

from bmgeom.harness import (
    ScenarioConfig,
    c_raster,
    interval_oracle,
    random_pair,
    rng_for,
    run_delta_sweep,
    run_equality_sweep,
    run_full_suite,
    run_invariance_suite,
)
from bmgeom.harness.lemmas import (
    TAIL_SLOPE_MIN,
    WEIGHTS,
    check_bm_positivity,
    check_distribution,
    check_fiber_projection_bound,
    check_level_gap_chebyshev,
    check_projection,
    check_steiner_monotone,
    natural_test_bodies,
    tail_slope,
)
from bmgeom.grid import project
from bmgeom.harness.sweeps import DELETION_LEVELS
from bmgeom.harness.suite import ARTIFACTS

pytestmark = pytest.mark.acceptance

SEED = 20240601


@pytest.fixture
def verdict(capsys):
    """Print the criterion line outside pytest's capture."""

    def emit(n: int, ok: bool, elapsed: float, budget: float | None, detail: str) -> None:
        status = "PASS" if ok and (budget is None or elapsed <= budget) else "FAIL"
        limit = f"{elapsed:.1f} s" + ("" if budget is None else f" of {budget:.0f} s")
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {status} {detail} ({limit})")

    return emit


def _failures(results):
    return [detail for ok, _, _, detail in results if not ok]


def test_criterion_01_bm_positivity(verdict):
    t0 = time.perf_counter()
    bad, worst = [], float("inf")
    for d in (1, 2, 3):
        for k in range(500):
            A, B = random_pair(SEED, k, d)
            ok, delta, _, detail = check_bm_positivity(A, B)
            worst = min(worst, delta)
            if not ok:
                bad.append(f"d={d} k={k} {detail}")
    el = time.perf_counter() - t0
    verdict(1, not bad, el, 120, f"BM positivity, 1500 pairs, min delta {worst:.3g}")
    assert not bad, bad[:5]
    assert el <= 120


def test_criterion_02_steiner_monotone(verdict):
    t0 = time.perf_counter()
    bad = []
    for d in (2, 3):
        for k in range(500):
            A, B = random_pair(SEED + 1, k, d)
            ok, _, _, detail = check_steiner_monotone(A, B)
            if not ok:
                bad.append(f"d={d} k={k} {detail}")
    el = time.perf_counter() - t0
    verdict(2, not bad, el, 180, f"Steiner sumset monotonicity, 500 pairs per d in (2, 3), {len(bad)} violations")
    assert not bad, bad[:5]
    assert el <= 180


def test_criterion_03_distribution_and_projection(verdict):
    t0 = time.perf_counter()
    bad = []
    for k in range(1000):
        d = 2 + k % 2
        G, _ = random_pair(SEED + 2, k, d)
        for check in (check_distribution, check_projection):
            ok, _, _, detail = check(G)
            if not ok:
                bad.append(f"d={d} k={k} {check.__name__}: {detail}")
    el = time.perf_counter() - t0
    verdict(3, not bad, el, 60, f"natural symmetrization keeps distribution and projection, 500 sets per d in (2, 3), {len(bad)} violations")
    assert not bad, bad[:5]
    assert el <= 60


def test_criterion_04_fiber_and_level_bounds(verdict):
    t0 = time.perf_counter()
    bad = []
    for k in range(400):
        d = 2 + k % 2
        A, B = random_pair(SEED + 3, k, d)
        results = [check_fiber_projection_bound(A, B, t) for t in WEIGHTS]
        rng = rng_for(SEED + 3, 10**6 + k)
        tau = A.h * int(rng.integers(1, 4))
        r = Fraction(int(rng.integers(1, 9)), 8) * project(A).measure() / 2
        results.append(check_level_gap_chebyshev(A, tau, r))
        bad += [f"d={d} k={k} {x}" for x in _failures(results)]
    el = time.perf_counter() - t0
    verdict(4, not bad, el, 120, f"fiber-projection and level-gap bounds, 200 pairs per d in (2, 3), t in (1/2, 1/3, 2/5), {len(bad)} violations")
    assert not bad, bad[:5]
    assert el <= 120


def test_criterion_05_quadratic_tail(verdict):
    t0 = time.perf_counter()
    slopes = {}
    for d in (2, 3):
        for name, G in natural_test_bodies(d, Fraction(1, 64)).items():
            slopes[f"d={d} {name}"] = tail_slope(G)
    el = time.perf_counter() - t0
    ok = all(s >= TAIL_SLOPE_MIN for s in slopes.values())
    shown = ", ".join(f"{k}: {v:.3f}" for k, v in slopes.items())
    verdict(5, ok, el, 60, f"tail slopes >= {TAIL_SLOPE_MIN}: {shown}")
    assert ok, slopes
    assert el <= 60


def test_criterion_06_exhaustive_interval_oracle(verdict):
    t0 = time.perf_counter()
    res = interval_oracle(10)
    el = time.perf_counter() - t0
    verdict(6, res.ok, el, 60,
            f"interval oracle n=10: {res.pairs} pairs, {res.eligible} eligible, {len(res.violations)} violations")
    for u, v in res.violations:
        print(f"violation U={u} V={v}")
    assert res.ok
    assert el <= 60


def test_criterion_07_equality_case(verdict):
    t0 = time.perf_counter()
    rep = run_equality_sweep(ScenarioConfig(seed=SEED), dims=(2, 3))
    el = time.perf_counter() - t0
    over = [r for r in rep.rows if r["eps"] > r["bound"]]
    # the bound is linear in h, so halving h halves it
    bound_ratios = []
    observed = []
    rows = {(r["dim"], r["family"], r["ratio"], r["h"]): r for r in rep.rows}
    for (d, f, q, h), r in rows.items():
        half = rows.get((d, f, q, str(Fraction(h) / 2)))
        if half:
            bound_ratios.append(half["bound"] / r["bound"])
            if r["eps"] > 0 and half["eps"] > 0:
                observed.append(half["eps"] / r["eps"])
    ok = not over and all(x <= 0.6 for x in bound_ratios)
    cs = ", ".join(f"d={d}: C={c_raster(int(d)):.3f}, max observed {v:.3f}"
                   for d, v in rep.summary["max_c_observed"].items())
    verdict(7, ok, el, 300,
            f"equality case: {len(rep.rows) - len(over)}/{len(rep.rows)} within C h S/V; {cs}; "
            f"bound ratio {max(bound_ratios):.2f}; observed eps ratio {min(observed):.2f}..{max(observed):.2f}")
    assert not over, over[:3]
    assert all(x <= 0.6 for x in bound_ratios)
    assert el <= 300


def test_criterion_08_stability_trend(verdict):
    t0 = time.perf_counter()
    cfg = ScenarioConfig(seed=SEED, dim=2, h=Fraction(1, 128), trials=20)
    rep = run_delta_sweep(cfg, DELETION_LEVELS)
    el = time.perf_counter() - t0
    summ = [rep.summary[repr(float(p))] for p in DELETION_LEVELS]
    deltas = [s["median_delta"] for s in summ]
    eps = [s["median_eps"] for s in summ]
    errors = sum(s["errors"] for s in summ)
    inc = all(a < b for a, b in zip(deltas, deltas[1:]))
    order = sorted(range(len(deltas)), key=deltas.__getitem__)
    nondec = all(eps[i] <= eps[j] for i, j in zip(order, order[1:]))
    sym = [s["max_symdiff"] for p, s in zip(DELETION_LEVELS, summ) if p <= 0.02]
    agree = all(x is not None and x <= 0.1 for x in sym)
    ok = inc and nondec and agree and errors == 0
    verdict(8, ok, el, 600,
            "stability trend: median delta " + "/".join(f"{x:.4f}" for x in deltas)
            + ", median eps " + "/".join(f"{x:.4f}" for x in eps)
            + f", max symdiff (p <= .02) {max(sym):.4f}, errors {errors}")
    assert errors == 0
    assert inc, deltas
    assert nondec, (deltas, eps)
    assert agree, sym
    assert el <= 600


def test_criterion_09_invariance(verdict):
    t0 = time.perf_counter()
    rep = run_invariance_suite(ScenarioConfig(seed=SEED), pairs=50)
    el = time.perf_counter() - t0
    tr, sh = rep.checks["translation"], rep.checks["shear"]
    verdict(9, rep.ok, el, 120,
            f"invariance: translation {tr.passed}/{tr.passed + tr.failed}, shear {sh.passed}/{sh.passed + sh.failed}")
    assert rep.ok, {k: v.examples for k, v in rep.checks.items() if v.failed}
    assert tr.passed == 50 and sh.passed == 50
    assert el <= 120


def test_criterion_10_determinism(verdict, tmp_path):
    t0 = time.perf_counter()
    cfg = ScenarioConfig(seed=SEED, trials=2)
    a = run_full_suite(cfg, tmp_path / "run1")
    b = run_full_suite(cfg, tmp_path / "run2")
    el = time.perf_counter() - t0
    same = [name for name in ARTIFACTS if a[name] == b[name]]
    ok = len(same) == len(ARTIFACTS)
    verdict(10, ok, el, None, f"determinism: {len(same)}/{len(ARTIFACTS)} artifacts byte-identical")
    assert ok
