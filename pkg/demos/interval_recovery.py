"""In one dimension a nearly sharp sumset forces a set to fill an interval.

If ``|U+V| = |U| + |V| + eps`` with ``eps < min(|U|, |V|)``, the smallest
interval containing U has length at most ``|U| + eps``.  We show one
example and then check every pair of subsets of {0, ..., 9}.
"""

import time
from fractions import Fraction

from bmgeom import GridSet, PreconditionRefused, interval_recover_1d
from bmgeom.harness import interval_oracle


def line(cells, h):
    return GridSet.from_cells([(c,) for c in cells], h, dim=1)


U, V = line([0, 1, 3], Fraction(1, 2)), line([0, 1, 2], Fraction(1, 2))
I, J, eps = interval_recover_1d(U, V)
print(f"U = {{0,1,3}}, V = {{0,1,2}}, h = 1/2: eps = {eps}, I = [{I[0]}, {I[1]}), |U| + eps = {U.measure() + eps}")

try:
    interval_recover_1d(line([0, 2], 1), line([0, 2], 1))
except PreconditionRefused as exc:
    print(f"U = V = {{0, 2}}: refused ({exc})")

t0 = time.perf_counter()
res = interval_oracle(10)
print(f"\nall {res.pairs} pairs over {{0..9}}: {res.eligible} eligible, "
      f"{len(res.violations)} violations ({time.perf_counter() - t0:.1f} s)")
