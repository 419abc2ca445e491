"""Steiner, Schwarz and natural (Schwarz after Steiner) symmetrization of grid sets.

Steiner replaces every vertical column by a run of the same length centred
at height 0.  Schwarz replaces every horizontal slice by the first ``k``
cells of a fixed canonical ball order in the base lattice.  Both preserve
measure exactly; the natural symmetrization also preserves the distribution
of fiber lengths.

A centred run of odd length cannot be symmetric about 0 on an integer
lattice.  The default ``even-refined`` parity policy therefore refines by 2
(once per call) so that every column count is even; ``raw`` keeps the grid
and places odd runs on ``[-(k // 2), k - k // 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import isqrt

import numpy as np

from .errors import DimensionError
from .grid import GridSet, column_counts, refine

KINDS = ("schwarz", "steiner", "natural")
PARITY_POLICIES = ("even-refined", "raw")


@dataclass(frozen=True)
class SymmetrizationMode:
    kind: str = "natural"
    parity_policy: str = "even-refined"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown symmetrization {self.kind!r}")
        if self.parity_policy not in PARITY_POLICIES:
            raise ValueError(f"unknown parity policy {self.parity_policy!r}")

    @property
    def raw(self) -> bool:
        return self.parity_policy == "raw"


def _prepare(G: GridSet, raw: bool) -> GridSet:
    if G.dim < 2:
        raise DimensionError("symmetrization needs dimension >= 2")
    return G if raw else refine(G, 2)


def _steiner_raw(G: GridSet) -> GridSet:
    if G.is_empty():
        return G
    counts = column_counts(G)
    below = counts // 2
    above = counts - below
    top = int(above.max())
    bottom = int(below.max())
    j = np.arange(-bottom, top)
    mask = (j >= -below[..., None]) & (j < above[..., None])
    return GridSet(mask, list(G.lo[:-1]) + [-bottom], G.h)


@lru_cache(maxsize=32)
def ball_order_rank(base_dim: int, radius: int) -> np.ndarray:
    """Rank of every cell of ``[-radius, radius)^base_dim`` in the canonical order.

    Cells are ordered by the squared distance of their centres from the
    origin, ties broken lexicographically on the index tuple.  The array is
    cached and read-only.
    """
    axes = np.arange(-radius, radius)
    grids = np.meshgrid(*([axes] * base_dim), indexing="ij")
    dist = sum((2 * g + 1) ** 2 for g in grids)
    keys = [g.ravel() for g in reversed(grids)] + [dist.ravel()]
    order = np.lexsort(keys)
    rank = np.empty(order.size, dtype=np.int64)
    rank[order] = np.arange(order.size)
    rank = rank.reshape(dist.shape)
    rank.flags.writeable = False
    return rank


def _ball_radius(base_dim: int, k: int) -> int:
    if base_dim == 1:
        return k // 2 + 2
    return isqrt(k) + 3


def _schwarz_raw(G: GridSet) -> GridSet:
    if G.is_empty():
        return G
    base_dim = G.dim - 1
    slice_counts = G.mask.sum(axis=tuple(range(base_dim)), dtype=np.int64)
    kmax = int(slice_counts.max())
    radius = _ball_radius(base_dim, kmax)
    rank = ball_order_rank(base_dim, radius)
    mask = rank[..., None] < slice_counts
    return GridSet(mask, [-radius] * base_dim + [G.lo[-1]], G.h)


def steiner(G: GridSet, raw: bool = False) -> GridSet:
    """Steiner symmetrization: every column becomes a run centred at 0."""
    return _steiner_raw(_prepare(G, raw))


def schwarz(G: GridSet, raw: bool = False) -> GridSet:
    """Schwarz symmetrization: every horizontal slice becomes a quasi-ball."""
    return _schwarz_raw(_prepare(G, raw))


def natural(G: GridSet, raw: bool = False) -> GridSet:
    """Schwarz symmetrization of the Steiner symmetrization.

    In even-refined mode the grid is refined once, before the Steiner step.
    """
    return _schwarz_raw(_steiner_raw(_prepare(G, raw)))


def symmetrize(G: GridSet, mode: SymmetrizationMode | str = "natural") -> GridSet:
    if isinstance(mode, str):
        mode = SymmetrizationMode(mode)
    fn = {"steiner": steiner, "schwarz": schwarz, "natural": natural}[mode.kind]
    return fn(G, raw=mode.raw)
