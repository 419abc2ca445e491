"""Exact Minkowski sums of grid sets and Brunn-Minkowski deficits.

The sum of two half-open cells ``[i, i+1) + [j, j+1) = [i+j, i+j+2)`` covers
the cells ``i+j`` and ``i+j+1`` along every axis, so on the lattice

    A + B = { i + j + e : i in A, j in B, e in {0, 1}^d }.

Sums are computed as a union of shifted bitmasks.  The bitmask of one operand
is embedded in the output box, flattened to a Python integer (arbitrary
precision ints give word-parallel shifts and ors), dilated by ``{0,1}^d`` and
by each vertical run length of the other operand, then shifted into place
once per run.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import prod

import numpy as np

from .errors import CapacityError, DimensionError, EmptySetError
from .grid import MAX_CELLS, GridSet, as_fraction, column_runs, to_common_h

#: tolerance for the floating point d-th roots in deficit reports
TOL_ROOT = 1e-12
#: largest denominator accepted for the combination weight
MAX_WEIGHT_DENOMINATOR = 16
#: output size (cells) above which combo_sum warns about memory growth
LARGE_OUTPUT = 2**26


class EmptySummandWarning(UserWarning):
    """A Minkowski sum had an empty operand, so the result is empty."""


def _mask_to_int(mask: np.ndarray) -> int:
    packed = np.packbits(mask.ravel(), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def _int_to_mask(value: int, shape) -> np.ndarray:
    n = prod(shape)
    nbytes = (n + 7) // 8
    raw = np.frombuffer(value.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, count=n, bitorder="little").astype(bool).reshape(shape)


def _run_count(G: GridSet) -> int:
    m = G.mask.reshape(-1, G.shape[-1])
    starts = m[:, 0].sum() + np.count_nonzero(m[:, 1:] & ~m[:, :-1])
    return int(starts)


def _lattice_sum(X: GridSet, D: GridSet) -> GridSet:
    """Half-open sumset of two nonempty sets with equal cell size."""
    if _run_count(D) > _run_count(X):
        X, D = D, X
    d = X.dim
    shape = tuple(a + b for a, b in zip(X.shape, D.shape))
    if prod(shape) > MAX_CELLS:
        raise CapacityError("sumset bounding box too large")
    strides = [prod(shape[k + 1:]) for k in range(d)]

    embedded = np.zeros(shape, dtype=bool)
    embedded[tuple(slice(0, s) for s in X.shape)] = X.mask
    base = _mask_to_int(embedded)
    for stride in strides:
        base |= base << stride

    cache = {1: base}

    def dilated(length: int) -> int:
        if length in cache:
            return cache[length]
        y, covered = base, 1
        while covered < length:
            step = min(covered, length - covered)
            y |= y << step
            covered += step
        cache[length] = y
        return y

    acc = 0
    for idx, start, length in column_runs(D):
        offset = start + sum(i * s for i, s in zip(idx, strides[:-1]))
        acc |= dilated(length) << offset
    lo = [a + b for a, b in zip(X.lo, D.lo)]
    return GridSet(_int_to_mask(acc, shape), lo, X.h)


def minkowski_sum(A: GridSet, B: GridSet) -> GridSet:
    """Exact Minkowski sum ``A + B`` of two grid sets.

    Operands are promoted to a common cell size first.  The sum is empty if
    either summand is empty; that case also emits an
    :class:`EmptySummandWarning`.
    """
    if A.dim != B.dim:
        raise DimensionError(f"dimension mismatch: {A.dim} vs {B.dim}")
    A, B = to_common_h(A, B)
    if A.is_empty() or B.is_empty():
        warnings.warn("sumset with an empty summand is empty", EmptySummandWarning, stacklevel=2)
        return GridSet.empty(A.dim, A.h)
    return _lattice_sum(A, B)


def _check_weight(t) -> Fraction:
    t = as_fraction(t)
    if not 0 < t < 1:
        raise ValueError(f"weight must lie in (0, 1), got {t}")
    if t.denominator > MAX_WEIGHT_DENOMINATOR:
        raise ValueError(
            f"weight denominator {t.denominator} exceeds {MAX_WEIGHT_DENOMINATOR}"
        )
    return t


def scale_by_integer(G: GridSet, k: int, q: int) -> GridSet:
    """The set ``(k / q) G`` on the grid of cell size ``h / q``."""
    if G.is_empty():
        return GridSet.empty(G.dim, G.h / q)
    m = G.mask
    for axis in range(G.dim):
        m = np.repeat(m, k, axis=axis)
    return GridSet(m, [a * k for a in G.lo], G.h / q)


def combo_sum(A: GridSet, B: GridSet, t) -> GridSet:
    """Exact ``tA + (1-t)B`` for a rational weight ``t = p/q`` in (0, 1).

    Both operands are refined by ``q``; A-cells are scaled by ``p`` and
    B-cells by ``q - p`` about the origin before summing.
    """
    t = _check_weight(t)
    if A.dim != B.dim:
        raise DimensionError(f"dimension mismatch: {A.dim} vs {B.dim}")
    A, B = to_common_h(A, B)
    p, q = t.numerator, t.denominator
    est = prod(q * (a + b) for a, b in zip(A.shape, B.shape))
    if est > LARGE_OUTPUT:
        warnings.warn(
            f"combination sum with q={q} needs about {est} cells", ResourceWarning, stacklevel=2
        )
    return minkowski_sum(scale_by_integer(A, p, q), scale_by_integer(B, q - p, q))


# -- deficits ---------------------------------------------------------------


def _iroot(n: int, d: int) -> int | None:
    # exact integer d-th root by Newton descent from an upper bound
    if n < 2:
        return n if n >= 0 else None
    x = 1 << ((n.bit_length() + d - 1) // d)
    while True:
        y = ((d - 1) * x + n // x ** (d - 1)) // d
        if y >= x:
            break
        x = y
    return x if x**d == n else None


def dth_root(x: Fraction, d: int) -> float:
    """``x ** (1/d)``, exact whenever ``x`` is a perfect d-th power."""
    x = as_fraction(x)
    if d == 1:
        return float(x)
    num, den = _iroot(x.numerator, d), _iroot(x.denominator, d)
    if num is not None and den is not None:
        return num / den
    return float(x) ** (1.0 / d)


@dataclass(frozen=True)
class DeficitReport:
    """Measures of a pair, its sumset, and the normalized deficit.

    For the additive form ``delta = (|A+B|^(1/d) - |A|^(1/d) - |B|^(1/d)) /
    max(|A|,|B|)^(1/d)``.  For the combination form (``weight`` set)
    ``delta = |tA+(1-t)B| / (t|A|^(1/d) + (1-t)|B|^(1/d))^d - 1``, which is
    ``|tA+(1-t)B| - 1`` for a pair of unit measure.
    """

    dim: int
    measure_a: Fraction
    measure_b: Fraction
    measure_sum: Fraction
    weight: Fraction | None
    delta: float

    @property
    def is_equality(self) -> bool:
        return self.delta <= TOL_ROOT

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "measure_a": str(self.measure_a),
            "measure_b": str(self.measure_b),
            "measure_sum": str(self.measure_sum),
            "weight": None if self.weight is None else str(self.weight),
            "delta": self.delta,
            "equality": self.is_equality,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DeficitReport":
        w = data.get("weight")
        return cls(
            int(data["dim"]),
            Fraction(data["measure_a"]),
            Fraction(data["measure_b"]),
            Fraction(data["measure_sum"]),
            None if w is None else Fraction(w),
            float(data["delta"]),
        )


def _require_nonempty(A: GridSet, B: GridSet) -> None:
    if A.is_empty() or B.is_empty():
        raise EmptySetError(
            "Brunn-Minkowski needs nonempty summands: the inequality fails when "
            "one summand is empty and the other has positive measure"
        )


def deficit_additive(A: GridSet, B: GridSet) -> DeficitReport:
    """Normalized additive Brunn-Minkowski deficit of ``(A, B)``."""
    _require_nonempty(A, B)
    d = A.dim
    a, b = A.measure(), B.measure()
    s = minkowski_sum(A, B).measure()
    ra, rb, rs = dth_root(a, d), dth_root(b, d), dth_root(s, d)
    delta = (rs - ra - rb) / max(ra, rb)
    return DeficitReport(d, a, b, s, None, delta)


def deficit_combo(A: GridSet, B: GridSet, t) -> DeficitReport:
    """Deficit of the combination ``tA + (1-t)B`` relative to its BM lower bound."""
    _require_nonempty(A, B)
    t = _check_weight(t)
    d = A.dim
    a, b = A.measure(), B.measure()
    s = combo_sum(A, B, t).measure()
    lower = (float(t) * dth_root(a, d) + float(1 - t) * dth_root(b, d)) ** d
    return DeficitReport(d, a, b, s, t, float(s) / lower - 1.0)


def bm_lower_bound(A: GridSet, B: GridSet, t) -> float:
    """``(t|A|^(1/d) + (1-t)|B|^(1/d))^d`` in floating point."""
    t = as_fraction(t)
    d = A.dim
    return (float(t) * dth_root(A.measure(), d) + float(1 - t) * dth_root(B.measure(), d)) ** d
