"""Exhaustive check of 1D interval recovery over all small subset pairs.

Subsets of ``{0, ..., n-1}`` (unit cells, h = 1) are encoded as bitmasks.
For half-open cells ``[i, i+1) + [j, j+1) = [i+j, i+j+2)``, so with
``S = {i + j}`` the sumset measure is ``popcount(S | S << 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ExhaustiveResult:
    n: int
    pairs: int
    eligible: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"n": self.n, "pairs": self.pairs, "eligible": self.eligible,
                "violations": [list(map(list, v)) for v in self.violations]}


def mask_to_cells(m: int) -> list[int]:
    return [i for i in range(m.bit_length()) if m >> i & 1]


def _span(m: np.ndarray) -> np.ndarray:
    """``hi - lo + 1`` for nonzero masks (bit positions)."""
    hi = np.floor(np.log2(m)).astype(np.int64)
    lo = np.floor(np.log2(m & -m)).astype(np.int64)
    return hi - lo + 1


def interval_oracle(n: int = 10, max_report: int = 100) -> ExhaustiveResult:
    """Check ``length(hull U) <= |U| + eps`` (and the same for V) on all pairs.

    ``eps = |U+V| - |U| - |V|``; only pairs with ``eps < min(|U|, |V|)`` are
    eligible.  Violations are returned as ``(U cells, V cells)``.
    """
    masks = np.arange(1, 1 << n, dtype=np.int64)
    U = masks[:, None]
    V = masks[None, :]
    S = np.zeros((masks.size, masks.size), dtype=np.int64)
    for i in range(n):
        S |= np.where((U >> i) & 1, V << i, 0)
    sum_measure = np.bitwise_count(S | (S << 1)).astype(np.int64)
    cu = np.bitwise_count(masks).astype(np.int64)
    cu_col, cv_row = cu[:, None], cu[None, :]
    eps = sum_measure - cu_col - cv_row
    eligible = eps < np.minimum(cu_col, cv_row)
    span = _span(masks)
    bad = eligible & ((span[:, None] > cu_col + eps) | (span[None, :] > cv_row + eps))
    viol = []
    for a, b in np.argwhere(bad)[:max_report]:
        viol.append((mask_to_cells(int(masks[a])), mask_to_cells(int(masks[b]))))
    return ExhaustiveResult(n, int(masks.size) ** 2, int(eligible.sum()), viol)
