"""Voxel sets on an integer lattice with exact rational measure.

A :class:`GridSet` is a finite union of half-open cells
``prod_k [i_k h, (i_k + 1) h)`` stored as a dense boolean mask over its tight
bounding box.  The last axis is the "vertical" axis: fibers are columns along
it and the projection drops it.

All measures are :class:`fractions.Fraction` and exact.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, prod
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, DimensionError

#: largest absolute lattice coordinate accepted anywhere
MAX_COORD = 2**40
#: largest dense bounding box, in cells
MAX_CELLS = 2**31


def as_fraction(x) -> Fraction:
    """Convert ints, floats, strings and numpy scalars to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def common_h(h1, h2) -> Fraction:
    """Largest cell size dividing both ``h1`` and ``h2`` an integer number of times."""
    h1, h2 = as_fraction(h1), as_fraction(h2)
    num = gcd(h1.numerator, h2.numerator)
    den = h1.denominator * h2.denominator // gcd(h1.denominator, h2.denominator)
    return Fraction(num, den)


def _check_coords(lo: Sequence[int], hi: Sequence[int]) -> None:
    for a, b in zip(lo, hi):
        if abs(a) > MAX_COORD or abs(b) > MAX_COORD:
            raise CapacityError(f"lattice coordinate out of range: [{a}, {b})")


class GridSet:
    """Immutable finite union of lattice cells with cell size ``h``.

    Parameters
    ----------
    mask : array_like of bool
        Occupancy over a box; ``mask[idx]`` is the cell with absolute
        lattice index ``lo + idx``.
    lo : sequence of int, optional
        Absolute lattice index of ``mask[0, ..., 0]``.  Defaults to zeros.
    h : rational, optional
        Cell size.  Defaults to 1.

    The mask is trimmed to the tight bounding box on construction, so two
    GridSets with the same ``h`` and the same cells have identical
    representations.
    """

    __slots__ = ("_mask", "_lo", "_h")

    def __init__(self, mask, lo: Sequence[int] | None = None, h=1):
        mask = np.asarray(mask, dtype=bool)
        d = mask.ndim
        if d not in (1, 2, 3):
            raise DimensionError(f"dimension must be 1, 2 or 3, got {d}")
        h = as_fraction(h)
        if h <= 0:
            raise ValueError("cell size must be positive")
        lo = (0,) * d if lo is None else tuple(int(v) for v in lo)
        if len(lo) != d:
            raise DimensionError("lo has the wrong length")
        if mask.size and mask.any():
            slices = []
            new_lo = []
            for axis in range(d):
                other = tuple(k for k in range(d) if k != axis)
                nz = np.flatnonzero(mask.any(axis=other) if other else mask)
                slices.append(slice(int(nz[0]), int(nz[-1]) + 1))
                new_lo.append(lo[axis] + int(nz[0]))
            mask = mask[tuple(slices)]
            lo = tuple(new_lo)
        else:
            mask = np.zeros((0,) * d, dtype=bool)
            lo = (0,) * d
        if mask.size > MAX_CELLS:
            raise CapacityError(f"bounding box of {mask.size} cells is too large")
        _check_coords(lo, [a + s for a, s in zip(lo, mask.shape)])
        mask = np.ascontiguousarray(mask)
        mask.flags.writeable = False
        self._mask = mask
        self._lo = lo
        self._h = h

    # -- constructors ---------------------------------------------------

    @classmethod
    def empty(cls, dim: int, h=1) -> "GridSet":
        return cls(np.zeros((0,) * dim, dtype=bool), None, h)

    @classmethod
    def from_cells(cls, cells, h=1, dim: int | None = None) -> "GridSet":
        """Build from an ``(n, d)`` collection of absolute cell indices."""
        arr = np.asarray(cells, dtype=np.int64)
        if arr.size == 0:
            if dim is None:
                dim = arr.shape[1] if arr.ndim == 2 else 1
            return cls.empty(dim, h)
        if arr.ndim == 1:
            arr = arr[:, None]
        if dim is not None and arr.shape[1] != dim:
            raise DimensionError("cell tuples have the wrong length")
        lo = arr.min(axis=0)
        hi = arr.max(axis=0) + 1
        _check_coords([int(v) for v in lo], [int(v) for v in hi])
        shape = tuple(int(v) for v in hi - lo)
        if prod(shape) > MAX_CELLS:
            raise CapacityError("bounding box too large")
        mask = np.zeros(shape, dtype=bool)
        mask[tuple((arr - lo).T)] = True
        return cls(mask, [int(v) for v in lo], h)

    @classmethod
    def box(cls, lo: Sequence[int], hi: Sequence[int], h=1) -> "GridSet":
        """All cells with ``lo <= index < hi`` componentwise."""
        shape = [max(0, b - a) for a, b in zip(lo, hi)]
        return cls(np.ones(shape, dtype=bool), lo, h)

    # -- accessors ------------------------------------------------------

    @property
    def dim(self) -> int:
        return self._mask.ndim

    @property
    def h(self) -> Fraction:
        return self._h

    @property
    def lo(self) -> tuple:
        return self._lo

    @property
    def hi(self) -> tuple:
        return tuple(a + s for a, s in zip(self._lo, self._mask.shape))

    @property
    def shape(self) -> tuple:
        return self._mask.shape

    @property
    def mask(self) -> np.ndarray:
        """Read-only occupancy mask over the tight bounding box."""
        return self._mask

    @property
    def ncells(self) -> int:
        return int(np.count_nonzero(self._mask))

    def is_empty(self) -> bool:
        return self._mask.size == 0

    def cells(self) -> np.ndarray:
        """Absolute indices of occupied cells, lexicographically sorted."""
        return np.argwhere(self._mask) + np.asarray(self._lo, dtype=np.int64)

    def measure(self) -> Fraction:
        return self.ncells * self._h**self.dim

    def with_mask(self, mask, lo=None) -> "GridSet":
        """New GridSet with the same ``h``."""
        return GridSet(mask, self._lo if lo is None else lo, self._h)

    def identical(self, other: "GridSet") -> bool:
        """Bit-identical representation (same h, same cells)."""
        return (
            self._h == other._h
            and self._lo == other._lo
            and self._mask.shape == other._mask.shape
            and bool(np.array_equal(self._mask, other._mask))
        )

    def __eq__(self, other):
        # geometric equality: compare after promotion to a common cell size
        if not isinstance(other, GridSet):
            return NotImplemented
        if self.dim != other.dim:
            return False
        a, b = to_common_h(self, other)
        return a.identical(b)

    __hash__ = None

    def __repr__(self):
        return (
            f"GridSet(dim={self.dim}, h={self._h}, lo={self._lo}, "
            f"shape={self._mask.shape}, cells={self.ncells})"
        )


# -- unary operations ---------------------------------------------------


def measure(G: GridSet) -> Fraction:
    """Exact Lebesgue measure ``|cells| * h**d``."""
    return G.measure()


def _require_fibered(G: GridSet) -> None:
    if G.dim < 2:
        raise DimensionError("operation needs dimension >= 2")


def column_counts(G: GridSet) -> np.ndarray:
    """Cell count of every vertical column over the projected bounding box."""
    _require_fibered(G)
    return G.mask.sum(axis=-1, dtype=np.int64)


def fiber(G: GridSet, x: Sequence[int]) -> GridSet:
    """The 1D set ``{i_d : (x, i_d) occupied}`` with the same cell size."""
    _require_fibered(G)
    x = tuple(int(v) for v in x)
    if len(x) != G.dim - 1:
        raise DimensionError("base point has the wrong length")
    if G.is_empty():
        return GridSet.empty(1, G.h)
    rel = tuple(a - b for a, b in zip(x, G.lo))
    if any(r < 0 or r >= s for r, s in zip(rel, G.shape)):
        return GridSet.empty(1, G.h)
    return GridSet(G.mask[rel], [G.lo[-1]], G.h)


def project(G: GridSet) -> GridSet:
    """Drop the last coordinate: base cells with a nonempty column."""
    _require_fibered(G)
    if G.is_empty():
        return GridSet.empty(G.dim - 1, G.h)
    return GridSet(G.mask.any(axis=-1), G.lo[:-1], G.h)


def _level_index(s, h: Fraction) -> int:
    # count * h > s  <=>  count > floor(s / h)
    s = as_fraction(s)
    if s < 0:
        raise ValueError("level must be nonnegative")
    q = s / h
    return q.numerator // q.denominator


def superlevel(G: GridSet, s) -> GridSet:
    """Base cells whose fiber has measure strictly greater than ``s``."""
    _require_fibered(G)
    k = _level_index(s, G.h)
    if G.is_empty():
        return GridSet.empty(G.dim - 1, G.h)
    return GridSet(column_counts(G) > k, G.lo[:-1], G.h)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous nonincreasing step function on ``[0, inf)``.

    ``values[i]`` holds on ``[breakpoints[i], breakpoints[i+1])`` and the
    function is 0 from ``breakpoints[-1]`` on.
    """

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) - 1:
            raise ValueError("need one value per breakpoint interval")
        if any(b >= a for a, b in zip(self.breakpoints[1:], self.breakpoints)):
            raise ValueError("breakpoints must be strictly ascending")
        if any(b > a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("values must be nonincreasing")

    def __call__(self, s) -> Fraction:
        s = as_fraction(s)
        if s < 0:
            raise ValueError("step functions are defined on [0, inf)")
        i = bisect_right(self.breakpoints, s) - 1
        return self.values[i] if i < len(self.values) else Fraction(0)

    def integral(self, a, b) -> Fraction:
        """Exact integral over ``[a, b]``."""
        a, b = as_fraction(a), as_fraction(b)
        total = Fraction(0)
        for lo, hi, v in zip(self.breakpoints, self.breakpoints[1:], self.values):
            lo_c, hi_c = max(lo, a), min(hi, b)
            if hi_c > lo_c:
                total += v * (hi_c - lo_c)
        return total


def distribution(G: GridSet) -> StepFunction:
    """``s -> measure(superlevel(G, s))`` as an exact step function."""
    counts = column_counts(G)
    levels = np.unique(counts[counts > 0])
    area = G.h ** (G.dim - 1)
    breaks = [Fraction(0)] + [int(c) * G.h for c in levels]
    values = [int(np.count_nonzero(counts >= c)) * area for c in levels]
    return StepFunction(tuple(breaks), tuple(values))


def translate(G: GridSet, v: Sequence[int]) -> GridSet:
    """Shift by the integer lattice vector ``v``."""
    v = [int(x) for x in v]
    if len(v) != G.dim:
        raise DimensionError("translation has the wrong length")
    if G.is_empty():
        return G
    return GridSet(G.mask, [a + b for a, b in zip(G.lo, v)], G.h)


def shear(G: GridSet, w: Sequence[int]) -> GridSet:
    """Skew shift of cell indices ``(x, i_d) -> (x, i_d + w . x)``."""
    _require_fibered(G)
    w = [int(x) for x in w]
    if len(w) != G.dim - 1:
        raise DimensionError("shear vector has the wrong length")
    if G.is_empty() or not any(w):
        return G
    reach = sum(abs(c) * max(abs(a), abs(b)) for c, a, b in zip(w, G.lo, G.hi))
    if reach + max(abs(G.lo[-1]), abs(G.hi[-1])) > MAX_COORD:
        raise CapacityError("shear overflows the lattice")
    cells = G.cells()
    cells[:, -1] += cells[:, :-1] @ np.asarray(w, dtype=np.int64)
    return GridSet.from_cells(cells, G.h, G.dim)


def refine(G: GridSet, q: int) -> GridSet:
    """Split every cell into ``q**d`` subcells of size ``h / q``."""
    q = int(q)
    if q < 1:
        raise ValueError("refinement factor must be positive")
    if q == 1:
        return G
    if G.is_empty():
        return GridSet.empty(G.dim, G.h / q)
    if G.mask.size * q**G.dim > MAX_CELLS:
        raise CapacityError("refinement exceeds the grid capacity")
    m = G.mask
    for axis in range(G.dim):
        m = np.repeat(m, q, axis=axis)
    return GridSet(m, [a * q for a in G.lo], G.h / q)


def at_h(G: GridSet, h) -> GridSet:
    """Refine ``G`` to the cell size ``h`` (which must divide ``G.h``)."""
    ratio = G.h / as_fraction(h)
    if ratio.denominator != 1:
        raise ValueError(f"cell size {h} does not divide {G.h}")
    return refine(G, ratio.numerator)


def to_common_h(A: GridSet, B: GridSet) -> tuple[GridSet, GridSet]:
    """Refine both operands to their common cell size."""
    if A.dim != B.dim:
        raise DimensionError(f"dimension mismatch: {A.dim} vs {B.dim}")
    if A.h == B.h:
        return A, B
    h = common_h(A.h, B.h)
    return at_h(A, h), at_h(B, h)


# -- set algebra ------------------------------------------------------------


def _aligned(A: GridSet, B: GridSet):
    A, B = to_common_h(A, B)
    boxes = [g for g in (A, B) if not g.is_empty()]
    if not boxes:
        return A, B, None, None, (0,) * A.dim
    lo = [min(g.lo[k] for g in boxes) for k in range(A.dim)]
    hi = [max(g.hi[k] for g in boxes) for k in range(A.dim)]
    shape = [b - a for a, b in zip(lo, hi)]
    out = []
    for g in (A, B):
        m = np.zeros(shape, dtype=bool)
        if not g.is_empty():
            sl = tuple(slice(a - l, a - l + s) for a, l, s in zip(g.lo, lo, g.shape))
            m[sl] = g.mask
        out.append(m)
    return A, B, out[0], out[1], lo


def union(A: GridSet, B: GridSet) -> GridSet:
    A, B, ma, mb, lo = _aligned(A, B)
    if ma is None:
        return A
    return GridSet(ma | mb, lo, A.h)


def intersection(A: GridSet, B: GridSet) -> GridSet:
    A, B, ma, mb, lo = _aligned(A, B)
    if ma is None:
        return A
    return GridSet(ma & mb, lo, A.h)


def difference(A: GridSet, B: GridSet) -> GridSet:
    A, B, ma, mb, lo = _aligned(A, B)
    if ma is None:
        return A
    return GridSet(ma & ~mb, lo, A.h)


def is_subset(A: GridSet, B: GridSet) -> bool:
    return difference(A, B).is_empty()


def restrict_to_base(G: GridSet, base: GridSet) -> GridSet:
    """``G`` intersected with the cylinder over the (d-1)-dim set ``base``."""
    _require_fibered(G)
    if base.dim != G.dim - 1:
        raise DimensionError("base must have dimension d - 1")
    if G.is_empty():
        return G
    if base.h != G.h:
        hc = common_h(G.h, base.h)
        G, base = at_h(G, hc), at_h(base, hc)
    keep = np.zeros(G.shape[:-1], dtype=bool)
    if not base.is_empty():
        lo = [max(a, b) for a, b in zip(G.lo[:-1], base.lo)]
        hi = [min(a, b) for a, b in zip(G.hi[:-1], base.hi)]
        if all(b > a for a, b in zip(lo, hi)):
            dst = tuple(slice(a - g, b - g) for a, b, g in zip(lo, hi, G.lo[:-1]))
            src = tuple(slice(a - g, b - g) for a, b, g in zip(lo, hi, base.lo))
            keep[dst] = base.mask[src]
    return G.with_mask(G.mask & keep[..., None])


def boundary_cells(G: GridSet) -> int:
    """Number of occupied cells with at least one empty face neighbour."""
    if G.is_empty():
        return 0
    padded = np.pad(G.mask, 1)
    interior = padded.copy()
    for axis in range(G.dim):
        interior &= np.roll(padded, 1, axis=axis) & np.roll(padded, -1, axis=axis)
    return G.ncells - int(np.count_nonzero(interior[(slice(1, -1),) * G.dim]))


def column_runs(G: GridSet) -> Iterable[tuple[tuple, int, int]]:
    """Yield ``(base, start, length)`` for each maximal vertical run.

    Indices are relative to the bounding box of ``G``.
    """
    if G.is_empty():
        return
    m = G.mask.reshape(-1, G.shape[-1])
    padded = np.zeros((m.shape[0], m.shape[1] + 2), dtype=np.int8)
    padded[:, 1:-1] = m
    diff = np.diff(padded, axis=1)
    rows, starts = np.nonzero(diff == 1)
    _, ends = np.nonzero(diff == -1)
    base_shape = G.shape[:-1]
    for r, s, e in zip(rows.tolist(), starts.tolist(), ends.tolist()):
        base = np.unravel_index(r, base_shape) if base_shape else ()
        yield tuple(int(b) for b in base), int(s), int(e - s)
