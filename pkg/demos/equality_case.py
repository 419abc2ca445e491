"""Homothetic convex pairs sit at equality, up to rasterization.

We rasterize a disk and a smaller translated copy, measure the
Brunn-Minkowski deficit and recover the common convex body.  Refining the
grid shrinks both the deficit and the fit excess roughly linearly in h.
"""

from fractions import Fraction

from bmgeom import deficit_combo, rasterize_ball, recover_convex_pair

print(f"{'h':>6} {'cells':>7} {'delta':>9} {'eps_a':>8} {'eps_b':>8}  alpha/beta")
for k in (8, 16, 32, 64, 128):
    h = Fraction(1, k)
    A = rasterize_ball((0, 0), Fraction(1, 2), h)
    B = rasterize_ball((3, Fraction(1, 3)), Fraction(1, 4), h)
    delta = deficit_combo(A, B, Fraction(1, 2)).delta
    res = recover_convex_pair(A, B)
    print(f"{str(h):>6} {A.ncells:>7} {delta:9.5f} {float(res.eps_a):8.5f} {float(res.eps_b):8.5f}  "
          f"{float(res.alpha / res.beta):.4f}")

# a box and its doubled translate is an exact equality case on any grid
from bmgeom import GridSet, translate  # noqa: E402

h = Fraction(1, 8)
A = GridSet.box((0, 0), (5, 3), h)
B = translate(GridSet.box((0, 0), (10, 6), h), (30, 4))
res = recover_convex_pair(A, B)
print(f"\nbox vs doubled box: delta={res.delta:.3g} eps_a={res.eps_a} eps_b={res.eps_b} "
      f"alpha/beta={res.alpha / res.beta}")
