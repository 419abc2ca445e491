"""Recovery of a homothetic convex pair from a near-extremal pair of grid sets.

The pipeline mirrors the induction on dimension:

1. normalize (projection measure 1, total measure 1; done analytically by
   working in units of ``|pi(A)|`` for base measures and ``|A|/|pi(A)|`` for
   fiber lengths),
2. rescale ``B`` to the measure of ``A`` and align the projections,
3. select a level ``s`` in ``[eta, 2 eta]`` and the regions above it,
4. recurse on the two regions in dimension ``d - 1``,
5. keep the columns where the 1D inequality is nearly sharp,
6. fit an affine map to the fiber-interval centres,
7. straighten both sets by the nearest lattice shear and fit a homothetic
   convex pair to their hulls.

The final bodies are reported in the straightened frame; ``frame_shear``
records the lattice shear ``w`` with ``A_straight = shear(A, -w)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import floor, lcm

import numpy as np

from .convex import (
    ConvexPolytope,
    _inverse,
    HomothetyFit,
    homothety_align,
    hull,
    rational_root,
    resample,
)
from .errors import (
    BMError,
    DegenerateError,
    DimensionError,
    EmptySetError,
    NormalizationError,
    PreconditionRefused,
    SharpBoundViolation,
    StageError,
)
from .grid import (
    GridSet,
    as_fraction,
    boundary_cells,
    column_counts,
    intersection,
    project,
    shear,
    superlevel,
    to_common_h,
    translate,
)
from .sumset import _check_weight, combo_sum, deficit_combo, minkowski_sum, scale_by_integer

MODES = ("pipeline", "hull-baseline")

#: largest denominator used when rescaling B to the measure of A
RESCALE_DENOMINATOR = 4
#: centroid anchors are rounded to 1/(ANCHOR_REFINE * lattice denominator)
ANCHOR_REFINE = 64


def _rat(x, max_den: int = 1024) -> Fraction:
    return Fraction(x).limit_denominator(max_den) if isinstance(x, float) else as_fraction(x)


@dataclass(frozen=True)
class PipelineParams:
    """Tuning scalars of the recovery pipeline.

    ``eps``, ``rho`` and ``eta`` are in normalized units (total measure and
    projection measure 1).  ``sigma`` optionally caps the scanned levels.
    """

    t: Fraction = Fraction(1, 2)
    eps: Fraction = Fraction(1, 16)
    rho: Fraction = Fraction(1, 8)
    eta: Fraction = Fraction(1, 4)
    gamma_cap: Fraction = Fraction(64)
    level_scan_steps: int = 9
    sigma: Fraction | None = None
    ratio_bounds: tuple = (Fraction(1, 64), Fraction(64))

    def __post_init__(self):
        object.__setattr__(self, "t", _check_weight(self.t))
        for name in ("eps", "rho", "eta", "gamma_cap"):
            val = _rat(getattr(self, name))
            if val <= 0:
                raise ValueError(f"{name} must be positive")
            object.__setattr__(self, name, val)
        if self.sigma is not None:
            object.__setattr__(self, "sigma", _rat(self.sigma))
        if self.level_scan_steps < 1:
            raise ValueError("level_scan_steps must be >= 1")
        lo, hi = (as_fraction(x) for x in self.ratio_bounds)
        if not 0 < lo <= 1 <= hi:
            raise ValueError("ratio bounds must bracket 1")
        object.__setattr__(self, "ratio_bounds", (lo, hi))

    @property
    def ordered(self) -> bool:
        return self.eps <= self.rho <= self.eta

    @classmethod
    def from_delta(cls, delta: float, t=Fraction(1, 2), **kw) -> "PipelineParams":
        """Schedule ``eps = delta^(1/2)``, ``rho = delta^(1/4)``, ``eta = delta^(1/8)``.

        Values are capped (``eta, rho <= 1/4``, ``eps <= 1/16``), floored at
        1/64 and rationalized, keeping ``eps <= rho <= eta``.
        """
        delta = max(float(delta), 0.0)
        floor_ = Fraction(1, 64)
        eta = max(min(_rat(delta ** (1 / 8)), Fraction(1, 4)), floor_)
        rho = max(min(_rat(delta ** (1 / 4)), Fraction(1, 4), eta), floor_)
        eps = max(min(_rat(delta ** (1 / 2)), Fraction(1, 16), rho), floor_)
        return cls(t=t, eps=eps, rho=min(rho, eta), eta=eta, **kw)

    def to_dict(self) -> dict:
        return {
            "t": str(self.t),
            "eps": str(self.eps),
            "rho": str(self.rho),
            "eta": str(self.eta),
            "gamma_cap": str(self.gamma_cap),
            "level_scan_steps": self.level_scan_steps,
            "sigma": None if self.sigma is None else str(self.sigma),
            "ratio_bounds": [str(x) for x in self.ratio_bounds],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineParams":
        kw = dict(data)
        for k in ("t", "eps", "rho", "eta", "gamma_cap"):
            if k in kw:
                kw[k] = Fraction(kw[k])
        if kw.get("sigma") is not None:
            kw["sigma"] = Fraction(kw["sigma"])
        if "ratio_bounds" in kw:
            kw["ratio_bounds"] = tuple(Fraction(x) for x in kw["ratio_bounds"])
        return cls(**kw)


# -- normalization ------------------------------------------------------------


@dataclass(frozen=True)
class Normalization:
    r: Fraction
    drift_a: Fraction
    drift_b: Fraction
    drift_bound: Fraction
    checks: dict


def _gamma_checks(G: GridSet, gamma: Fraction) -> dict:
    m = G.measure()
    fib = int(column_counts(G).max()) * G.h if not G.is_empty() else Fraction(0)
    proj = project(G).measure()
    return {
        "measure": m >= 1 / gamma,
        "fiber_sup": fib <= gamma,
        "projection": proj <= gamma,
    }


def normalize_pair(A: GridSet, B: GridSet, t, gamma_cap=Fraction(64)):
    """Apply ``(x, x_d) -> (r x, r^-(d-1) x_d)`` with ``r^(d-1) |pi(A)| = 1``.

    Both sets are re-rasterized by cell-centre sampling at their own cell
    size.  Returns ``(A', B', Normalization)``.

    Raises
    ------
    NormalizationError
        If the measure drift of either set exceeds twice its boundary-cell
        measure, or a normalized set violates the gamma caps.
    """
    _check_weight(t)
    if A.dim < 2 or B.dim != A.dim:
        raise DimensionError("normalization needs two sets of equal dimension >= 2")
    if A.is_empty() or B.is_empty():
        raise EmptySetError("normalization needs nonempty sets")
    d = A.dim
    gamma = as_fraction(gamma_cap)
    r = rational_root(1 / project(A).measure(), d - 1)
    if r == 1:
        A2, B2 = A, B
    else:
        M = [[Fraction(0)] * d for _ in range(d)]
        for k in range(d - 1):
            M[k][k] = r
        M[d - 1][d - 1] = 1 / r ** (d - 1)
        A2, B2 = resample(A, M), resample(B, M)
    drift_a = A2.measure() - A.measure()
    drift_b = B2.measure() - B.measure()
    bound = 2 * max(boundary_cells(A) * A.h**d, boundary_cells(B) * B.h**d)
    if abs(drift_a) > bound or abs(drift_b) > bound:
        raise NormalizationError(
            f"re-rasterization drift ({float(drift_a):.4g}, {float(drift_b):.4g}) exceeds "
            f"{float(bound):.4g}; use a finer grid"
        )
    checks = {"a": _gamma_checks(A2, gamma), "b": _gamma_checks(B2, gamma)}
    bad = [f"{k}.{c}" for k, v in checks.items() for c, ok in v.items() if not ok]
    if bad:
        raise NormalizationError(f"gamma caps violated after normalization: {', '.join(bad)}")
    return A2, B2, Normalization(r, drift_a, drift_b, bound, checks)


# -- one-dimensional recovery ----------------------------------------------------


def interval_recover_1d(U: GridSet, V: GridSet):
    """Smallest enclosing intervals of two 1D sets with a nearly sharp sum.

    Returns ``(I, J, eps)`` with ``eps = |U+V| - |U| - |V|`` and intervals as
    ``(lo, hi)`` rational pairs.

    Raises
    ------
    PreconditionRefused
        If ``eps >= min(|U|, |V|)``.
    SharpBoundViolation
        If an interval is longer than ``|U| + eps`` (resp. ``|V| + eps``).
    """
    if U.dim != 1 or V.dim != 1:
        raise DimensionError("interval recovery works on 1D sets")
    if U.is_empty() or V.is_empty():
        raise EmptySetError("interval recovery needs nonempty sets")
    U, V = to_common_h(U, V)
    h = U.h
    mu, mv = U.measure(), V.measure()
    eps = minkowski_sum(U, V).measure() - mu - mv
    if eps >= min(mu, mv):
        raise PreconditionRefused(eps, min(mu, mv))
    I = (U.lo[0] * h, U.hi[0] * h)
    J = (V.lo[0] * h, V.hi[0] * h)
    if I[1] - I[0] > mu + eps or J[1] - J[0] > mv + eps:
        raise SharpBoundViolation(f"U={U.cells().ravel().tolist()} V={V.cells().ravel().tolist()}")
    return I, J, eps


# -- level selection ---------------------------------------------------------------


@dataclass(frozen=True)
class LevelSelection:
    """The chosen level and the two regions above it (normalized units)."""

    s_bar: Fraction
    region_a: GridSet
    region_b: GridSet
    gap: float
    measure_mismatch: float
    feasible: bool
    sigma: Fraction
    scan: tuple = ()

    @property
    def warning(self) -> str | None:
        if self.feasible:
            return None
        return "no scanned level met the mismatch bound 2 eps^(1/2)"

    def to_dict(self) -> dict:
        return {
            "s_bar": str(self.s_bar),
            "gap": self.gap,
            "measure_mismatch": self.measure_mismatch,
            "feasible": self.feasible,
            "warning": self.warning,
            "sigma": str(self.sigma),
            "region_a_measure": str(self.region_a.measure()),
            "region_b_measure": str(self.region_b.measure()),
            "scan": [
                {"s": str(s), "gap": g, "mismatch": m} for s, g, m in self.scan
            ],
        }


def _units(A: GridSet) -> tuple[Fraction, Fraction]:
    base = project(A).measure()
    return A.measure() / base, base


def select_level(
    A: GridSet,
    B: GridSet,
    params: PipelineParams,
    fiber_unit: Fraction | None = None,
    base_unit: Fraction | None = None,
) -> LevelSelection:
    """Scan ``s`` in ``[eta, 2 eta]`` for a level with a small sumset surplus.

    For each level, ``gap = |t A(s+eps) + (1-t) B(s)| - |A(s+eps)|^t |B(s)|^(1-t)``.
    The first level minimizing ``gap`` among those with mismatch at most
    ``2 eps^(1/2)`` wins; if none qualifies, the overall minimizer is
    returned with ``feasible=False``.
    """
    if A.dim < 2:
        raise DimensionError("level selection needs dimension >= 2")
    if fiber_unit is None or base_unit is None:
        fiber_unit, base_unit = _units(A)
    t, eps, eta = params.t, params.eps, params.eta
    n = params.level_scan_steps
    levels = [eta] if n == 1 else [eta + eta * k / (n - 1) for k in range(n)]
    top_a = int(column_counts(A).max()) * A.h if not A.is_empty() else Fraction(0)
    top_b = int(column_counts(B).max()) * B.h if not B.is_empty() else Fraction(0)
    sigma = min(top_a, top_b) / fiber_unit
    cap = sigma if params.sigma is None else min(sigma, params.sigma)
    tf = float(t)
    tol = 2 * float(eps) ** 0.5
    scan = []
    best = None
    for s in levels:
        if s + eps >= cap:
            continue
        ra = superlevel(A, (s + eps) * fiber_unit)
        rb = superlevel(B, s * fiber_unit)
        if ra.is_empty() or rb.is_empty():
            continue
        ma, mb = ra.measure() / base_unit, rb.measure() / base_unit
        c = combo_sum(ra, rb, t).measure() / base_unit
        gm = float(ma) if ma == mb else float(ma) ** tf * float(mb) ** (1 - tf)
        gap = float(c) - gm
        mis = abs(float(ma - mb))
        scan.append((s, gap, mis))
        # rounded so that pow() noise cannot break ties
        key = (mis > tol, round(gap, 12))
        # strict comparison keeps the first level on ties
        if best is None or key < best[0]:
            best = (key, s, ra, rb, gap, mis)
    if best is None:
        raise EmptySetError(
            "every scanned superlevel region is empty: input too thin for the level range "
            f"(sigma = {float(sigma):.4g})"
        )
    (infeasible, _), s, ra, rb, gap, mis = best
    return LevelSelection(s, ra, rb, gap, mis, not infeasible, sigma, tuple(scan))


# -- vertical structure --------------------------------------------------------------


@dataclass(frozen=True)
class GoodSet:
    """Columns where the 1D inequality is nearly sharp, and the fitted subset."""

    cells: GridSet
    refined: GridSet | None = None
    candidates: GridSet | None = None

    @property
    def excluded_measure(self) -> Fraction:
        if self.candidates is None:
            return Fraction(0)
        return self.candidates.measure() - self.cells.measure()

    def to_dict(self) -> dict:
        return {
            "cells": self.cells.ncells,
            "refined": None if self.refined is None else self.refined.ncells,
            "excluded_measure": str(self.excluded_measure),
        }


def _lookup_counts(G: GridSet, idx: np.ndarray) -> np.ndarray:
    """Column counts of ``G`` at absolute base indices ``idx`` (n, d-1)."""
    out = np.zeros(len(idx), dtype=np.int64)
    if G.is_empty() or len(idx) == 0:
        return out
    counts = column_counts(G)
    rel = idx - np.asarray(G.lo[:-1])
    ok = np.all((rel >= 0) & (rel < np.asarray(G.shape[:-1])), axis=1)
    out[ok] = counts[tuple(rel[ok].T)]
    return out


def _coarse_counts(S: GridSet, idx: np.ndarray, k: int) -> np.ndarray:
    """Total cell count of ``S`` over the k^(d-1) fine columns of each coarse column."""
    out = np.zeros(len(idx), dtype=np.int64)
    if S.is_empty() or len(idx) == 0:
        return out
    counts = column_counts(S)
    fine = np.argwhere(counts > 0)
    vals = counts[tuple(fine.T)]
    coarse = (fine + np.asarray(S.lo[:-1])) // k
    lookup = {}
    for c, v in zip(map(tuple, coarse.tolist()), vals.tolist()):
        lookup[c] = lookup.get(c, 0) + v
    for n, c in enumerate(map(tuple, idx.tolist())):
        out[n] = lookup.get(c, 0)
    return out


def vertical_good_set(
    A: GridSet,
    B: GridSet,
    t,
    level: LevelSelection,
    params: PipelineParams,
    *,
    S: GridSet | None = None,
    fiber_unit: Fraction = Fraction(1),
) -> GoodSet:
    """Columns of ``region_a & region_b`` with ``|S_x| - t|A_x| - (1-t)|B_x| <= eta^(3/2)``.

    ``S = tA + (1-t)B`` lives on a finer grid; ``|S_x|`` is the mean over the
    fine columns inside the coarse column ``x``.  Fiber lengths are divided
    by ``fiber_unit`` before the comparison.
    """
    t = _check_weight(t)
    A, B = to_common_h(A, B)
    h = A.h
    if S is None:
        S = combo_sum(A, B, t)
    base = intersection(level.region_a, level.region_b)
    if base.h != h:
        raise DimensionError("regions must live on the grid of A")
    if base.is_empty():
        return GoodSet(base, None, base)
    idx = base.cells()
    ca = _lookup_counts(A, idx)
    cb = _lookup_counts(B, idx)
    k_frac = h / S.h
    if k_frac.denominator != 1:
        raise DimensionError("sum grid must refine the grid of A")
    k = int(k_frac)
    cs = _coarse_counts(S, idx, k)
    # excess in units of h/(k^d), kept as integers for an exact comparison
    kd = k**A.dim
    scale = t.denominator
    exc = cs * scale - (ca * t.numerator + cb * (t.denominator - t.numerator)) * kd
    excess = [Fraction(int(e), scale * kd) * h / fiber_unit for e in exc]
    eta3 = params.eta**3
    keep = np.array([e <= 0 or e * e <= eta3 for e in excess], dtype=bool)
    cells = GridSet.from_cells(idx[keep], h, dim=A.dim - 1)
    return GoodSet(cells, None, base)


@dataclass(frozen=True)
class FiberIntervals:
    """Enclosing fiber intervals over the good columns, in index units of ``h``."""

    x: np.ndarray
    lo_a: np.ndarray
    hi_a: np.ndarray
    lo_b: np.ndarray
    hi_b: np.ndarray
    h: Fraction
    t: Fraction

    @property
    def center_a(self) -> np.ndarray:
        return (self.lo_a + self.hi_a) * (float(self.h) / 2)

    @property
    def center_b(self) -> np.ndarray:
        return (self.lo_b + self.hi_b) * (float(self.h) / 2)

    @property
    def len_a(self) -> np.ndarray:
        return (self.hi_a - self.lo_a) * float(self.h)

    @property
    def len_b(self) -> np.ndarray:
        return (self.hi_b - self.lo_b) * float(self.h)

    @property
    def zeta(self) -> np.ndarray:
        t = float(self.t)
        return t * self.center_a + (1 - t) * self.center_b

    @property
    def base_points(self) -> np.ndarray:
        """Column centres in real coordinates."""
        return (self.x + 0.5) * float(self.h)

    def __len__(self):
        return len(self.x)


def _column_extent(G: GridSet, idx: np.ndarray):
    rel = idx - np.asarray(G.lo[:-1])
    cols = G.mask[tuple(rel.T)]
    first = np.argmax(cols, axis=-1)
    last = cols.shape[-1] - np.argmax(cols[:, ::-1], axis=-1)
    return first + G.lo[-1], last + G.lo[-1]


def fiber_intervals(A: GridSet, B: GridSet, good: GoodSet, t) -> FiberIntervals:
    """Smallest intervals ``I_x >= A_x`` and ``J_x >= B_x`` for ``x`` in the good set."""
    A, B = to_common_h(A, B)
    idx = good.cells.cells() if not good.cells.is_empty() else np.zeros((0, A.dim - 1), np.int64)
    if len(idx):
        if np.any(_lookup_counts(A, idx) == 0) or np.any(_lookup_counts(B, idx) == 0):
            raise EmptySetError("good set contains a column that is empty in A or B")
        la, ha = _column_extent(A, idx)
        lb, hb = _column_extent(B, idx)
    else:
        la = ha = lb = hb = np.zeros(0, np.int64)
    return FiberIntervals(idx, la, ha, lb, hb, A.h, as_fraction(t))


@dataclass(frozen=True)
class CenterFit:
    """Affine fit ``phi(x) = slope . x + intercept`` of the A-interval centres.

    ``slope`` and ``intercept`` are exact; ``v`` and ``gamma_emp`` are floats
    for reporting.
    """

    slope: tuple
    intercept: Fraction
    v: float
    refined: GridSet
    gamma_emp: float
    removed: int
    fit_failed: bool

    def phi(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, float) @ np.asarray(self.slope, float) + float(self.intercept)

    def lattice_shear(self) -> tuple:
        """Nearest integer slopes, ties rounded up (shear equivariant)."""
        return tuple(floor(a + Fraction(1, 2)) for a in self.slope)

    def to_dict(self) -> dict:
        return {
            "slope": [str(a) for a in self.slope],
            "intercept": str(self.intercept),
            "v": self.v,
            "refined": self.refined.ncells,
            "gamma_emp": self.gamma_emp,
            "removed": self.removed,
            "fit_failed": self.fit_failed,
        }


def _exact_lstsq(X: np.ndarray, Z: np.ndarray):
    """Least-squares coefficients over object-dtype integer arrays, as Fractions."""
    G = [[Fraction(x) for x in row] for row in (X.T @ X).tolist()]
    rhs = (X.T @ Z).tolist()
    Ginv = _inverse(G)
    return [sum(Ginv[i][k] * rhs[k] for k in range(len(rhs))) for i in range(len(rhs))]


def affine_center_fit(fibers: FiberIntervals, t) -> CenterFit:
    """Two-pass trimmed least-squares fit of the combined centres ``zeta``.

    The first fit uses all columns; columns whose residual exceeds the 90th
    percentile are dropped and the fit repeated.  With ``Z`` the final fit,
    ``v = median(psi - Z) / t`` and ``phi = Z - (1-t) v``, so that
    ``v = median(psi - phi)`` and exact affine data are reproduced.

    All arithmetic is exact (integers scaled by ``2q`` for ``t = p/q``), so
    lattice translations and shears of the input move the fit exactly.

    Raises
    ------
    DegenerateError
        Too few columns (need more than d) or collinear column geometry.
    """
    t = _check_weight(t)
    p, q = t.numerator, t.denominator
    n = len(fibers)
    m = fibers.x.shape[1] if fibers.x.ndim == 2 else 0
    if n <= m + 1:
        raise DegenerateError(f"affine fit needs more than {m + 1} columns, got {n}")
    # design: doubled column centres 2x+1; response: 2q * zeta in index units
    X = np.column_stack([2 * fibers.x + 1, np.ones(n, np.int64)]).astype(object)
    ca = (fibers.lo_a + fibers.hi_a).astype(object) * q
    cb = (fibers.lo_b + fibers.hi_b).astype(object) * q
    Z = (ca * p + cb * (q - p)) // q
    try:
        coef = _exact_lstsq(X, Z)
    except DegenerateError:
        raise DegenerateError("good columns are collinear; affine map undetermined") from None
    res = [abs(r) for r in (Z - X @ np.array(coef, dtype=object)).tolist()]
    # "higher" order statistic, so at most 10% of columns are dropped
    thr = sorted(res)[-(-9 * (n - 1) // 10)]
    keep = np.array([r <= thr for r in res])
    failed = False
    try:
        coef = _exact_lstsq(X[keep], Z[keep])
    except DegenerateError:
        keep = np.ones(n, dtype=bool)
        failed = True
    zfit = X @ np.array(coef, dtype=object)
    diffs = sorted((cb - zfit)[keep].tolist())
    k = len(diffs)
    med = diffs[k // 2] if k % 2 else (diffs[k // 2 - 1] + diffs[k // 2]) / 2
    v_scaled = Fraction(med) / t
    phi = zfit - (1 - t) * v_scaled
    gamma = max(abs(x) for x in (ca - phi)[keep].tolist())
    h = fibers.h
    unit = h / (2 * q)
    slope = tuple(Fraction(a) * 2 * unit / h for a in coef[:-1])
    intercept = (Fraction(coef[-1]) - (1 - t) * v_scaled) * unit
    removed = int(n - keep.sum())
    refined = GridSet.from_cells(fibers.x[keep], fibers.h, dim=m)
    return CenterFit(
        slope, intercept, float(v_scaled * unit), refined, float(gamma * unit), removed,
        failed or 10 * removed > n,
    )


# -- assembly ----------------------------------------------------------------------


@dataclass(frozen=True)
class RecoveryResult:
    """A convex body with ``A <= alpha K + u`` and ``B <= beta K + v``.

    Containment and ``eps_a``, ``eps_b`` refer to the straightened frame
    ``shear(., -frame_shear)``.  ``eps_a = |(alpha K + u) \\ A| / max(|A|, |B|)``
    is exact.
    """

    body: ConvexPolytope
    alpha: Fraction
    beta: Fraction
    u: tuple
    v: tuple
    eps_a: Fraction
    eps_b: Fraction
    delta: float
    mode: str
    degraded: bool = False
    frame_shear: tuple = ()
    trace: dict = field(default_factory=dict, compare=False)

    def fit(self) -> HomothetyFit:
        d = self.body.dim
        vol = self.body.volume
        return HomothetyFit(self.body, self.alpha, self.beta, self.u, self.v,
                            self.alpha**d * vol, self.beta**d * vol)

    def to_dict(self, include_timings: bool = False) -> dict:
        trace = {k: v for k, v in self.trace.items() if include_timings or k != "timings"}
        return {
            "mode": self.mode,
            "degraded": self.degraded,
            "delta": self.delta,
            "eps_a": float(self.eps_a),
            "eps_b": float(self.eps_b),
            "eps_a_exact": str(self.eps_a),
            "eps_b_exact": str(self.eps_b),
            "alpha": str(self.alpha),
            "beta": str(self.beta),
            "u": [str(c) for c in self.u],
            "v": [str(c) for c in self.v],
            "frame_shear": list(self.frame_shear),
            "body": {
                "dim": self.body.dim,
                "volume": str(self.body.volume),
                "vertices": [[str(c) for c in p] for p in self.body.vertices],
            },
            "trace": trace,
        }


def _anchor_grid(*grids: GridSet) -> int:
    return ANCHOR_REFINE * lcm(*(g.h.denominator for g in grids))


def _assemble(A, B, w, delta, mode, degraded, trace) -> RecoveryResult:
    As = shear(A, [-x for x in w]) if any(w) else A
    Bs = shear(B, [-x for x in w]) if any(w) else B
    fit = homothety_align(hull(As), hull(Bs), grid=_anchor_grid(A, B))
    d = A.dim
    top = max(A.measure(), B.measure())
    vol = fit.body.volume
    eps_a = (fit.alpha**d * vol - A.measure()) / top
    eps_b = (fit.beta**d * vol - B.measure()) / top
    return RecoveryResult(
        fit.body, fit.alpha, fit.beta, fit.u, fit.v, eps_a, eps_b, delta, mode,
        degraded, tuple(int(x) for x in w), trace,
    )


def _rescale_and_align(A: GridSet, B: GridSet):
    """``lambda B`` with ``|lambda B| ~ |A|`` (rational lambda), centred over A.

    ``lambda B`` is taken about the lower corner of B's bounding box.
    """
    d = A.dim
    lam = Fraction(float(A.measure() / B.measure()) ** (1.0 / d)).limit_denominator(RESCALE_DENOMINATOR)
    if lam <= 0:
        lam = Fraction(1, RESCALE_DENOMINATOR)
    if lam == 1:
        Bl = B
    else:
        # scale about B's lower corner so lattice translations of B commute
        S = scale_by_integer(B, lam.numerator, lam.denominator)
        Bl = GridSet(S.mask, [a * lam.denominator for a in B.lo], S.h)
    Ac, Bc = to_common_h(A, Bl)
    ca = _base_centroid(Ac)
    cb = _base_centroid(Bc)
    shift = [int((a - b + Fraction(1, 2)) // 1) for a, b in zip(ca, cb)] + [0]
    return Ac, translate(Bc, shift), lam, shift


def _base_centroid(G: GridSet) -> tuple:
    cells = G.cells()
    n = len(cells)
    return tuple(Fraction(int(cells[:, k].sum()), n) + Fraction(1, 2) for k in range(G.dim - 1))


def _validate(A: GridSet, B: GridSet, params: PipelineParams):
    if A.dim != B.dim:
        raise DimensionError(f"dimension mismatch: {A.dim} vs {B.dim}")
    if A.is_empty() or B.is_empty():
        raise EmptySetError("recovery needs two sets of positive measure")
    ratio = A.measure() / B.measure()
    lo, hi = params.ratio_bounds
    if not lo <= ratio <= hi:
        raise ValueError(f"measure ratio {float(ratio):.4g} outside [{lo}, {hi}]")


class _Stages:
    def __init__(self, trace):
        self.trace = trace
        self.timings = trace.setdefault("timings", {})

    def run(self, name, fn, *args, **kw):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kw)
        except StageError:
            raise
        except (BMError, ValueError, np.linalg.LinAlgError) as exc:
            raise StageError(name, exc) from exc
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0


FALLBACK_STAGES = ("select_level", "good_set", "fiber_intervals", "fit")


def prestraighten_shear(G: GridSet) -> tuple:
    """Lattice shear from an exact least-squares fit of the column midpoints.

    Shearing the input by an integer ``w`` shifts the result by exactly
    ``w``, so pipelines run on ``shear(G, -W)`` see identical inputs.
    """
    zero = (0,) * (G.dim - 1)
    if G.dim < 2 or G.is_empty():
        return zero
    idx = project(G).cells()
    lo, hi = _column_extent(G, idx)
    X = np.column_stack([2 * idx + 1, np.ones(len(idx), np.int64)]).astype(object)
    try:
        coef = _exact_lstsq(X, (lo + hi).astype(object))
    except DegenerateError:
        return zero
    return tuple(floor(Fraction(a) + Fraction(1, 2)) for a in coef[:-1])


def _pipeline(A, B, params, trace) -> tuple:
    st = _Stages(trace)
    d = A.dim
    t = params.t
    if d == 1:
        try:
            I, J, e = st.run("interval", interval_recover_1d, A, B)
            trace["interval"] = {"I": [str(x) for x in I], "J": [str(x) for x in J], "eps": str(e)}
        except StageError as exc:
            if not isinstance(exc.cause, PreconditionRefused):
                raise
            trace["interval"] = {"refused": str(exc.cause)}
            trace["fallbacks"].append({"stage": "interval", "reason": "precondition refused; hull used"})
        return ()

    fu, bu = st.run("normalize", _units, A)
    top = int(column_counts(A).max()) * A.h
    trace["normalization"] = {
        "fiber_unit": str(fu),
        "base_unit": str(bu),
        "fiber_sup": str(top / fu),
        "gamma_ok": top / fu <= params.gamma_cap,
    }
    if top / fu > params.gamma_cap:
        raise StageError("normalize", NormalizationError("fiber supremum exceeds gamma cap"))

    Ac, Bc, lam, shift = st.run("rescale", _rescale_and_align, A, B)
    trace["rescale"] = {"lambda": str(lam), "shift": shift}

    level = st.run("select_level", select_level, Ac, Bc, params, fu, bu)
    trace["level"] = level.to_dict()

    trace["regions"] = _recurse(level, params, st)

    S = st.run("sum", combo_sum, Ac, Bc, t)
    good = st.run("good_set", vertical_good_set, Ac, Bc, t, level, params, S=S, fiber_unit=fu)
    fibers = st.run("fiber_intervals", fiber_intervals, Ac, Bc, good, t)
    fit = st.run("fit", affine_center_fit, fibers, t)
    good = replace(good, refined=fit.refined)
    trace["good_set"] = good.to_dict()
    trace["fit"] = fit.to_dict()
    if fit.fit_failed:
        trace["fallbacks"].append({"stage": "fit", "reason": "trimmed refit was rank deficient"})
    return fit.lattice_shear()


def _recurse(level: LevelSelection, params, st) -> dict:
    ra, rb = level.region_a, level.region_b
    t0 = time.perf_counter()
    try:
        if ra.dim == 1:
            try:
                I, J, e = interval_recover_1d(ra, rb)
                out = {"kind": "interval", "I": [str(x) for x in I], "J": [str(x) for x in J],
                       "eps": str(e)}
            except PreconditionRefused as exc:
                out = {"kind": "interval", "refused": str(exc)}
        else:
            sub = recover_convex_pair(ra, rb, params, "pipeline")
            out = {"kind": "pipeline", "eps_a": float(sub.eps_a), "eps_b": float(sub.eps_b),
                   "degraded": sub.degraded, "frame_shear": list(sub.frame_shear)}
    except BMError as exc:
        out = {"kind": "failed", "reason": str(exc)}
    st.timings["recurse"] = st.timings.get("recurse", 0.0) + time.perf_counter() - t0
    return out


def recover_convex_pair(
    A: GridSet, B: GridSet, params: PipelineParams | None = None, mode: str = "pipeline"
) -> RecoveryResult:
    """Fit ``A <= alpha K + u``, ``B <= beta K + v`` with a convex ``K``.

    ``mode="hull-baseline"`` aligns the hulls of ``A`` and ``B`` directly.
    ``mode="pipeline"`` runs the staged recovery and straightens both sets
    by the fitted lattice shear first; if level selection or the fit fails it
    falls back to the baseline and sets ``degraded``.  Other stage failures
    raise :class:`StageError`.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    params = params or PipelineParams()
    _validate(A, B, params)
    delta = deficit_combo(A, B, params.t).delta
    trace: dict = {"params": params.to_dict(), "fallbacks": []}
    w: tuple = (0,) * (A.dim - 1)
    degraded = False
    if mode == "pipeline":
        w = prestraighten_shear(A)
        trace["prestraighten"] = list(w)
        As = shear(A, [-x for x in w]) if any(w) else A
        Bs = shear(B, [-x for x in w]) if any(w) else B
        try:
            w1 = _pipeline(As, Bs, params, trace)
            if w1:
                w = tuple(a + b for a, b in zip(w, w1))
        except StageError as exc:
            if exc.stage not in FALLBACK_STAGES:
                raise
            degraded = True
            trace["fallbacks"].append({"stage": exc.stage, "reason": str(exc.cause)})
    t0 = time.perf_counter()
    result = _assemble(A, B, w, delta, mode, degraded, trace)
    trace.setdefault("timings", {})["assemble"] = time.perf_counter() - t0
    return result
