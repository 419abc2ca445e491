"""Perturbation and rotation sweeps over generated pairs."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from math import pi, sqrt

from ..convex import symmetric_difference_volume
from ..errors import BMError
from ..recover import recover_convex_pair
from .generate import ScenarioConfig, generate, scenario_bodies
from .report import SuiteReport

DELETION_LEVELS = (0.0, 0.01, 0.02, 0.05, 0.1)
ROTATION_ANGLES = (0.0, pi / 8, pi / 4)
EQUALITY_FAMILIES = ("ball", "cube", "simplex")
EQUALITY_RATIOS = (Fraction(1), Fraction(1, 2), Fraction(2, 3))
EQUALITY_STEPS = (Fraction(1, 8), Fraction(1, 16), Fraction(1, 32))


def c_raster(dim: int) -> float:
    """Rasterization constant ``2 sqrt(d)``.

    The outer raster of a body and its hull lie within distance ``h sqrt(d)``
    of the body, which costs at most ``h sqrt(d) * surface`` of excess
    volume; fitting two bodies can double it.
    """
    return 2 * sqrt(dim)


def resolve_threads(threads: int | None) -> int:
    """``threads`` if given, else ``$BM_THREADS``, else 1."""
    if threads is None:
        threads = int(os.environ.get("BM_THREADS", "1") or 1)
    return max(1, int(threads))


def _pmap(fn, jobs, threads: int):
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, jobs))


def pipeline_hull_symdiff(pipe, base) -> float:
    """Symmetric difference of the two normalized bodies, relative to the baseline.

    The pipeline body lives in the straightened frame and is mapped back by
    the (volume preserving) linear shear before comparing.
    """
    K = pipe.body.shear(pipe.frame_shear) if any(pipe.frame_shear) else pipe.body
    return float(symmetric_difference_volume(K, base.body) / base.body.volume)


def _delta_trial(job):
    config, level, trial, timings = job
    cfg = config.with_(deletion=level)
    row = {"level": level, "trial": trial}
    t0 = time.perf_counter()
    try:
        A, B = generate(cfg, trial)
        t1 = time.perf_counter()
        pipe = recover_convex_pair(A, B, cfg.params, "pipeline")
        t2 = time.perf_counter()
        base = recover_convex_pair(A, B, cfg.params, "hull-baseline")
        t3 = time.perf_counter()
        lvl = pipe.trace.get("level", {})
        row.update({
            "delta": pipe.delta,
            "eps_a": float(pipe.eps_a),
            "eps_b": float(pipe.eps_b),
            "eps_a_hull": float(base.eps_a),
            "eps_b_hull": float(base.eps_b),
            "gap": lvl.get("gap"),
            "mismatch": lvl.get("measure_mismatch"),
            "degraded": pipe.degraded,
            "frame_shear": list(pipe.frame_shear),
            "symdiff": pipeline_hull_symdiff(pipe, base),
            "error": None,
        })
        if timings:
            row.update({"time_generate": t1 - t0, "time_pipeline": t2 - t1, "time_hull": t3 - t2})
    except BMError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_delta_sweep(
    config: ScenarioConfig,
    levels=DELETION_LEVELS,
    threads: int | None = None,
    timings: bool = False,
) -> SuiteReport:
    """One CSV row per (deletion level, trial), with both recovery modes.

    Stage errors are recorded in the row's ``error`` column.  Timing columns
    are added only when ``timings`` is set, so default output is
    deterministic.
    """
    jobs = [(config, float(lv), k, timings) for lv in levels for k in range(config.trials)]
    rows = _pmap(_delta_trial, jobs, resolve_threads(threads))
    report = SuiteReport("delta-sweep", config.to_dict(), rows=rows)
    report.summary = summarize_delta(rows, levels)
    return report


def _median(xs):
    xs = sorted(x for x in xs if x is not None)
    if not xs:
        return None
    n = len(xs)
    return xs[n // 2] if n % 2 else (xs[n // 2 - 1] + xs[n // 2]) / 2


def summarize_delta(rows, levels) -> dict:
    out = {}
    for lv in levels:
        sel = [r for r in rows if r["level"] == float(lv) and r.get("error") is None]
        out[repr(float(lv))] = {
            "median_delta": _median([r["delta"] for r in sel]),
            "median_eps": _median([max(r["eps_a"], r["eps_b"]) for r in sel]),
            "max_symdiff": max((r["symdiff"] for r in sel), default=None),
            "errors": sum(1 for r in rows if r["level"] == float(lv) and r.get("error")),
        }
    return out


def _rotation_trial(job):
    config, angle, trial = job
    row = {"angle": angle, "trial": trial}
    try:
        A0, B0 = generate(config, trial)
        A, B = generate(config, trial, rotation=angle)
        res = recover_convex_pair(A, B, config.params, "pipeline")
        row.update({
            "delta": res.delta,
            "eps_a": float(res.eps_a),
            "eps_b": float(res.eps_b),
            "drift_a": float(A.measure() - A0.measure()),
            "drift_b": float(B.measure() - B0.measure()),
            "degraded": res.degraded,
            "error": None,
        })
    except BMError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_rotation_sweep(
    config: ScenarioConfig, angles=ROTATION_ANGLES, threads: int | None = None
) -> SuiteReport:
    """Rotate one generated pair simultaneously by each angle and re-run recovery.

    Rotations act on the continuous bodies before rasterization, in the
    plane of the first and last axes; ``drift_*`` is the measure change
    relative to the unrotated rasterization.
    """
    jobs = [(config, float(a), k) for k in range(config.trials) for a in angles]
    rows = _pmap(_rotation_trial, jobs, resolve_threads(threads))
    report = SuiteReport("rotation-sweep", config.to_dict(), rows=rows)
    eps = [max(r["eps_a"], r["eps_b"]) for r in rows if r.get("error") is None]
    drift = [abs(r["drift_a"]) + abs(r["drift_b"]) for r in rows if r.get("error") is None]
    if eps:
        report.summary = {
            "min_eps": min(eps),
            "max_eps": max(eps),
            "spread": max(eps) - min(eps),
            "max_drift": max(drift),
        }
    return report


def _equality_trial(job):
    config, = job
    body_a, _, _ = scenario_bodies(config, 0)
    A, B = generate(config, 0)
    res = recover_convex_pair(A, B, config.params, "pipeline")
    sv = body_a.surface_to_volume()
    eps = float(max(res.eps_a, res.eps_b))
    bound = c_raster(config.dim) * float(config.h) * sv
    return {
        "dim": config.dim,
        "family": config.family,
        "ratio": str(config.ratio),
        "h": str(config.h),
        "delta": res.delta,
        "eps": eps,
        "surface_to_volume": sv,
        "bound": bound,
        "c_observed": eps / (float(config.h) * sv),
        "degraded": res.degraded,
    }


def run_equality_sweep(
    config: ScenarioConfig,
    dims=(2,),
    families=EQUALITY_FAMILIES,
    ratios=EQUALITY_RATIOS,
    steps=EQUALITY_STEPS,
    threads: int | None = None,
) -> SuiteReport:
    """Recover unperturbed homothetic pairs and compare eps with the raster bound.

    ``surface_to_volume`` is that of A's body (the larger one for ratios at
    most 1), which matches the normalization of eps by ``max(|A|, |B|)``.
    """
    jobs = [
        (config.with_(dim=d, family=f, ratio=r, h=h, deletion=0.0, addition=0.0),)
        for d in dims for f in families for r in ratios for h in steps
    ]
    rows = _pmap(_equality_trial, jobs, resolve_threads(threads))
    report = SuiteReport("equality-sweep", config.to_dict(), rows=rows)
    for row in rows:
        ok = row["eps"] <= row["bound"]
        report.check("raster_bound", False).record(
            ok, row["bound"] - row["eps"], row["eps"] / row["bound"],
            f"d={row['dim']} {row['family']} ratio={row['ratio']} h={row['h']}",
        )
    report.summary = {"max_c_observed": {str(d): max(r["c_observed"] for r in rows if r["dim"] == d)
                                         for d in dims}}
    return report
