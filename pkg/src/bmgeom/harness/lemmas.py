"""Numerical checks of the symmetrization, sumset and tail lemmas.

Exact checks compare rationals; slack checks report the fraction of the
allowed slack they used.  Each check returns ``(ok, margin, slack_used,
detail)`` where ``margin`` is a float summary (nonnegative when ok).
"""

from __future__ import annotations

from fractions import Fraction
import numpy as np

from ..convex import ConvexPolytope, rasterize, rasterize_ball, tail_measure
from ..grid import (
    GridSet,
    boundary_cells,
    column_counts,
    distribution,
    project,
    refine,
)
from ..sumset import TOL_ROOT, combo_sum, deficit_additive, minkowski_sum
from ..symmetrize import natural, steiner
from .generate import ScenarioConfig, generate, random_pair, rng_for
from .report import SuiteReport

WEIGHTS = (Fraction(1, 2), Fraction(1, 3), Fraction(2, 5))
TAIL_FRACTIONS = (Fraction(1, 4), Fraction(1, 8), Fraction(1, 16), Fraction(1, 32))
TAIL_SLOPE_MIN = 1.8
TAIL_MAX_H = Fraction(1, 64)
#: the quadratic bound may exceed the largest-eta ratio by this factor
TAIL_RATIO_SLACK = 2.0


def check_bm_positivity(A, B):
    r = deficit_additive(A, B)
    return r.delta >= -TOL_ROOT, r.delta, 0.0, f"delta={r.delta!r}"


def check_steiner_monotone(A, B):
    """``|A* + B*| <= |A + B|`` for even-refined Steiner symmetrization."""
    lhs = minkowski_sum(steiner(A), steiner(B)).measure()
    rhs = minkowski_sum(A, B).measure()
    return lhs <= rhs, float(rhs - lhs), 0.0, f"{lhs} > {rhs}"


def check_natural_monotone(A, B, symmetrizer=natural):
    """Sumset monotonicity under the natural symmetrization.

    Exact in d = 2.  In d = 3 the allowed slack is the measure of the
    boundary cells of ``A + B`` on the refined grid.
    """
    lhs = minkowski_sum(symmetrizer(A), symmetrizer(B)).measure()
    S = minkowski_sum(A, B)
    rhs = S.measure()
    if A.dim <= 2:
        return lhs <= rhs, float(rhs - lhs), 0.0, f"{lhs} > {rhs}"
    R = refine(S, 2)
    slack = boundary_cells(R) * R.h**R.dim
    used = float((lhs - rhs) / slack) if lhs > rhs else 0.0
    return lhs <= rhs + slack, float(rhs + slack - lhs), used, f"{lhs} > {rhs} + {slack}"


def check_distribution(G):
    ok = distribution(natural(G)) == distribution(G)
    return ok, 0.0, 0.0, "distribution changed"


def check_projection(G):
    a, b = project(natural(G)).measure(), project(G).measure()
    return a == b, float(b - a), 0.0, f"{a} != {b}"


def check_fiber_projection_bound(A, B, t):
    """``sup_x |A_x| * |pi(B)| <= t^-1 (1-t)^-(d-1) |tA + (1-t)B|``."""
    d = A.dim
    lhs = int(column_counts(A).max()) * A.h * project(B).measure()
    rhs = combo_sum(A, B, t).measure() / (t * (1 - t) ** (d - 1))
    return lhs <= rhs, float(rhs - lhs), 0.0, f"t={t}: {lhs} > {rhs}"


def level_gap_measure(G: GridSet, tau: Fraction, r: Fraction) -> Fraction:
    """Exact measure of ``{s >= 0 : |G(s)| - |G(s + tau)| > r}``."""
    F = distribution(G)
    top = F.breakpoints[-1]
    pts = sorted({Fraction(0)} | {b for b in F.breakpoints} | {b - tau for b in F.breakpoints if b > tau})
    total = Fraction(0)
    for a, b in zip(pts, pts[1:]):
        if F(a) - F(a + tau) > r:
            total += b - a
    # beyond the last breakpoint both terms vanish
    assert F(top) == 0
    return total


def check_level_gap_chebyshev(G, tau, r):
    """Chebyshev bound ``|{s : |G(s)| - |G(s+tau)| > r}| <= tau r^-1 |pi(G)|``."""
    lhs = level_gap_measure(G, tau, r)
    rhs = tau / r * project(G).measure()
    return lhs <= rhs, float(rhs - lhs), 0.0, f"tau={tau} r={r}: {lhs} > {rhs}"


def tail_slope(G: GridSet, fractions=TAIL_FRACTIONS) -> float:
    """Least-squares log-log slope of ``tail(eps)`` over ``eps = f * max fiber``.

    Returns ``inf`` when the tail vanishes at the smallest level (faster than
    any power on the sampled range).
    """
    top = int(column_counts(G).max()) * G.h
    eps = [f * top for f in fractions]
    tails = [tail_measure(G, e) for e in eps]
    if any(t == 0 for t in tails):
        return float("inf")
    x = np.log([float(e) for e in eps])
    y = np.log([float(t) for t in tails])
    return float(np.polyfit(x, y, 1)[0])


def check_tail_quadratic(G):
    s = tail_slope(G)
    return s >= TAIL_SLOPE_MIN, s - TAIL_SLOPE_MIN, 0.0, f"slope={s:.4f}"


def tail_ratios(A: GridSet, etas) -> list[float]:
    """Normalized ``|A \\ pi^-1(A(eta))| / eta^2`` for each eta (normalized units)."""
    unit = A.measure() / project(A).measure()
    return [float(tail_measure(A, Fraction(e) * unit) / A.measure()) / float(e) ** 2 for e in etas]


def check_superlevel_tail(A, etas=(Fraction(1, 4), Fraction(1, 8), Fraction(1, 16), Fraction(1, 32))):
    """``tail(eta) <= C eta^2`` on the smaller half of the eta range.

    ``C`` is ``TAIL_RATIO_SLACK`` times the largest ratio ``tail / eta^2`` over
    the larger half.  On a grid the tail is quantized, so single steps
    between neighbouring levels are not compared.
    """
    etas = sorted(etas, reverse=True)
    ratios = tail_ratios(A, etas)
    half = max(1, len(ratios) // 2)
    C = max(ratios[:half]) * TAIL_RATIO_SLACK
    worst = max(ratios[half:]) if len(ratios) > half else 0.0
    if C == 0:
        return worst == 0, 0.0, 0.0, f"ratios={ratios}"
    return worst <= C, C - worst, worst / C, f"ratios={ratios}"


def natural_test_bodies(dim: int, h: Fraction):
    """Natural symmetrizations of a rasterized cone and ball of diameter 2."""
    h = Fraction(h)
    if dim == 2:
        cone = ConvexPolytope([(-1, 0), (1, 0), (0, 2)])
    else:
        ring = [(np.cos(a), np.sin(a)) for a in np.linspace(0, 2 * np.pi, 24, endpoint=False)]
        base = [(Fraction(x).limit_denominator(1024), Fraction(y).limit_denominator(1024), 0) for x, y in ring]
        cone = ConvexPolytope(base + [(0, 0, 2)])
    return {
        "cone": natural(rasterize(cone, h)),
        "ball": natural(rasterize_ball([0] * dim, 1, h)),
    }


def _apply(report, name, result, exact=True, context=""):
    ok, margin, used, detail = result
    report.check(name, exact).record(ok, margin, used, f"{context} {detail}".strip())


def run_lemma_suite(config: ScenarioConfig, symmetrizer=natural, extra_pairs=()) -> SuiteReport:
    """Run every lemma check over ``config.trials`` random pairs.

    ``extra_pairs`` are checked too (used to inject adversarial inputs);
    ``symmetrizer`` replaces the natural symmetrization in the sumset
    monotonicity check.
    """
    report = SuiteReport("lemmas", config.to_dict())
    d = config.dim
    pairs = [random_pair(config.seed, k, d) for k in range(config.trials)]
    pairs += list(extra_pairs)
    for k, (A, B) in enumerate(pairs):
        ctx = f"trial={k}"
        _apply(report, "bm_positivity", check_bm_positivity(A, B), True, ctx)
        if d < 2:
            continue
        _apply(report, "steiner_sumset", check_steiner_monotone(A, B), True, ctx)
        _apply(report, "natural_sumset", check_natural_monotone(A, B, symmetrizer), d == 2, ctx)
        _apply(report, "distribution", check_distribution(A), True, ctx)
        _apply(report, "projection", check_projection(A), True, ctx)
        for t in WEIGHTS:
            _apply(report, "fiber_projection_bound", check_fiber_projection_bound(A, B, t), True, ctx)
        rng = rng_for(config.seed, 10**6 + k)
        tau = A.h * int(rng.integers(1, 4))
        r = Fraction(int(rng.integers(1, 9)), 8) * project(A).measure() / 2
        _apply(report, "level_gap_chebyshev", check_level_gap_chebyshev(A, tau, r), True, ctx)
    if d >= 2:
        # the tail profile is only resolved on fine grids; never coarser than 1/64
        for name, G in natural_test_bodies(d, min(config.h, TAIL_MAX_H)).items():
            _apply(report, "natural_tail", check_tail_quadratic(G), False, name)
        for k in range(config.trials):
            A, _ = generate(config, k)
            _apply(report, "superlevel_tail", check_superlevel_tail(A), False, f"trial={k}")
    return report
