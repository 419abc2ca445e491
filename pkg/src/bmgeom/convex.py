"""Convex polytopes with exact rational geometry in dimensions 1 to 3.

Vertices are stored as integers over a common denominator, so hulls,
volumes, centroids and containment tests are exact.  In 3D the facet
structure comes from qhull and is then verified with integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import ceil, floor, gcd, lcm
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateError, DimensionError, EmptySetError
from .grid import GridSet, as_fraction, restrict_to_base, superlevel

#: denominators used when an irrational quantity must be rounded to a rational
ROUNDING_DENOMINATOR = 4096


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull_2d(points: list[tuple[int, int]]) -> list[int]:
    """Indices of the strictly convex hull vertices, counter-clockwise."""
    order = sorted(range(len(points)), key=lambda i: points[i])
    uniq = []
    for i in order:
        if not uniq or points[uniq[-1]] != points[i]:
            uniq.append(i)
    if len(uniq) < 3:
        return uniq

    def chain(idx):
        out = []
        for i in idx:
            while len(out) >= 2 and _cross(points[out[-2]], points[out[-1]], points[i]) <= 0:
                out.pop()
            out.append(i)
        return out

    lower = chain(uniq)
    upper = chain(reversed(uniq))
    return lower[:-1] + upper[:-1]


def _sub3(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _cross3(u, v):
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def _dot3(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def _affine_rank(points: list[tuple]) -> int:
    if not points:
        return -1
    p0 = points[0]
    pad = (0,) * (3 - len(p0))
    basis: list[tuple] = []
    for p in points[1:]:
        v = tuple(a - b for a, b in zip(p, p0)) + pad
        if not any(v):
            continue
        if not basis:
            basis.append(v)
        elif len(basis) == 1:
            if any(_cross3(basis[0], v)):
                basis.append(v)
        elif _dot3(_cross3(basis[0], basis[1]), v) != 0:
            return 3
    return len(basis)


def _verify_inside(points, keys) -> bool:
    """Exact check that every point satisfies every plane ``n . p <= off``."""
    N = np.array([k[:3] for k in keys], dtype=float)
    off = np.array([float(k[3]) for k in keys])
    P = np.array(points, dtype=float)
    val = P @ N.T - off
    # float margin far below zero is conclusive; re-check the rest exactly
    bound = 1e-9 * (np.abs(P).sum(axis=1)[:, None] * np.abs(N).max(axis=1)[None, :] + np.abs(off))
    rows, cols = np.nonzero(val > -bound)
    return all(_dot3(keys[c][:3], points[r]) <= keys[c][3] for r, c in zip(rows.tolist(), cols.tolist()))


def _hull_3d(points: list[tuple[int, int, int]]):
    """Vertices, outward triangles and unique facet planes of a 3D point set."""
    points = [tuple(int(c) for c in p) for p in points]
    arr = np.asarray(points, dtype=float)
    try:
        qh = ConvexHull(arr, qhull_options="Qt")
    except QhullError as exc:  # pragma: no cover - guarded by the rank check
        raise DegenerateError(f"qhull failed: {exc}") from exc
    m = len(qh.vertices)
    centre = [sum(points[i][k] for i in qh.vertices) for k in range(3)]
    tris = []
    planes = {}
    for a, b, c in qh.simplices.tolist():
        n = _cross3(_sub3(points[b], points[a]), _sub3(points[c], points[a]))
        off = _dot3(n, points[a])
        side = _dot3(n, centre) - off * m
        if side == 0:
            continue
        if side > 0:
            n = (-n[0], -n[1], -n[2])
            off = -off
            b, c = c, b
        tris.append((a, b, c))
        g = gcd(*n, off) or 1
        key = tuple(int(x) // g for x in n) + (int(off) // g,)
        planes.setdefault(key, []).append((a, b, c))

    keys = list(planes)
    if not _verify_inside(points, keys):
        raise DegenerateError("qhull facets failed exact verification")

    incident: dict[int, list[tuple]] = {}
    for key, ts in planes.items():
        for t in ts:
            for v in t:
                lst = incident.setdefault(v, [])
                if key[:3] not in lst:
                    lst.append(key[:3])

    def extreme(v):
        normals = incident.get(v, [])
        if len(normals) < 3:
            return False
        n1 = normals[0]
        for n2 in normals[1:]:
            c = _cross3(n1, n2)
            if any(c):
                return any(_dot3(c, n3) != 0 for n3 in normals)
        return False

    verts = sorted(v for v in incident if extreme(v))
    return verts, tris, planes


class ConvexPolytope:
    """Convex hull of finitely many rational points in R^d, d <= 3.

    Only the extreme points are retained as :attr:`vertices`.  A point set
    whose hull has empty interior is flagged :attr:`degenerate`; its volume
    is 0.
    """

    def __init__(self, points: Sequence[Sequence], dim: int | None = None):
        pts = [tuple(as_fraction(c) for c in p) for p in points]
        if not pts:
            raise EmptySetError("a polytope needs at least one point")
        d = len(pts[0]) if dim is None else dim
        if d not in (1, 2, 3) or any(len(p) != d for p in pts):
            raise DimensionError("points must all have dimension 1, 2 or 3")
        den = lcm(*(c.denominator for p in pts for c in p))
        ints = [tuple(int(c * den) for c in p) for p in pts]
        self._build(ints, den, d)

    @classmethod
    def from_lattice(cls, points, h) -> "ConvexPolytope":
        """Hull of integer points scaled by the cell size ``h``."""
        h = as_fraction(h)
        arr = np.asarray(points, dtype=np.int64)
        if arr.ndim != 2 or len(arr) == 0:
            raise EmptySetError("a polytope needs at least one point")
        d = arr.shape[1]
        if d not in (1, 2, 3):
            raise DimensionError("points must all have dimension 1, 2 or 3")
        self = cls.__new__(cls)
        ints = [tuple(int(c) * h.numerator for c in p) for p in arr.tolist()]
        self._build(ints, h.denominator, d)
        return self

    def _build(self, ints, den, d):
        self.dim = d
        self._den = den
        self._tris: list[tuple] = []
        self._planes: list[tuple] = []
        rank = _affine_rank(ints)
        self.degenerate = rank < d
        if self.degenerate:
            keep = sorted(set(ints))
        elif d == 1:
            keep = [min(ints), max(ints)]
        elif d == 2:
            keep = [ints[i] for i in _hull_2d(ints)]
        else:
            uniq = sorted(set(ints))
            verts, tris, planes = _hull_3d(uniq)
            remap = {v: k for k, v in enumerate(verts)}
            self._planes = list(planes)
            # retriangulate on extreme vertices only; non-extreme boundary
            # points are dropped and their fans rebuilt per plane
            self._tris = _fan_triangles(uniq, verts, planes, remap)
            keep = [uniq[v] for v in verts]
        self._ints = keep

    # -- basic data -------------------------------------------------------

    @property
    def vertices(self) -> list[tuple]:
        return [tuple(Fraction(c, self._den) for c in p) for p in self._ints]

    def vertex_array(self) -> np.ndarray:
        return np.asarray(self._ints, dtype=float) / self._den

    def __len__(self):
        return len(self._ints)

    def __repr__(self):
        flag = ", degenerate" if self.degenerate else ""
        return f"ConvexPolytope(dim={self.dim}, vertices={len(self._ints)}{flag})"

    def __eq__(self, other):
        if not isinstance(other, ConvexPolytope):
            return NotImplemented
        return self.dim == other.dim and sorted(self.vertices) == sorted(other.vertices)

    __hash__ = None

    # -- facets -------------------------------------------------------------

    @cached_property
    def facets(self) -> list[tuple[tuple, Fraction]]:
        """Half-spaces ``normal . x <= offset`` whose intersection is the body."""
        if self.degenerate:
            raise DegenerateError("degenerate polytope has no facet description")
        den = self._den
        if self.dim == 1:
            lo, hi = self._ints[0][0], self._ints[1][0]
            return [((-1,), Fraction(-lo, den)), ((1,), Fraction(hi, den))]
        if self.dim == 2:
            out = []
            v = self._ints
            for k in range(len(v)):
                p, q = v[k], v[(k + 1) % len(v)]
                n = (q[1] - p[1], p[0] - q[0])
                out.append((n, Fraction(n[0] * p[0] + n[1] * p[1], den)))
            return out
        return [(k[:3], Fraction(k[3], den)) for k in self._planes]

    def contains(self, point, strict: bool = False) -> bool:
        p = [as_fraction(c) for c in point]
        for n, off in self.facets:
            val = sum(a * b for a, b in zip(n, p))
            if val > off or (strict and val == off):
                return False
        return True

    def contains_polytope(self, other: "ConvexPolytope") -> bool:
        return all(self.contains(v) for v in other.vertices)

    def edges(self) -> list[tuple[int, int]]:
        n = len(self._ints)
        if self.dim == 1:
            return [(0, 1)]
        if self.dim == 2:
            return [(k, (k + 1) % n) for k in range(n)]
        seen = set()
        for a, b, c in self._tris:
            for e in ((a, b), (b, c), (c, a)):
                seen.add((min(e), max(e)))
        return sorted(seen)

    # -- measures -------------------------------------------------------------

    @cached_property
    def volume(self) -> Fraction:
        """Exact d-dimensional volume (0 when degenerate)."""
        if self.degenerate:
            return Fraction(0)
        d, den, v = self.dim, self._den, self._ints
        if d == 1:
            return Fraction(v[1][0] - v[0][0], den)
        if d == 2:
            twice = sum(
                v[k][0] * v[(k + 1) % len(v)][1] - v[(k + 1) % len(v)][0] * v[k][1]
                for k in range(len(v))
            )
            return Fraction(twice, 2 * den**2)
        # work in coordinates scaled by m so the vertex mean is integral
        m = len(v)
        c = self._interior_int()
        total = 0
        for a, b, e in self._tris:
            pa, pb, pe = (tuple(x * m for x in v[i]) for i in (a, b, e))
            total += abs(_dot3(_cross3(_sub3(pa, c), _sub3(pb, c)), _sub3(pe, c)))
        return Fraction(total, 6 * den**3 * m**3)

    def surface_area(self) -> float:
        """Boundary measure: endpoint count in 1D, perimeter in 2D, area in 3D."""
        if self.degenerate:
            return 0.0
        if self.dim == 1:
            return 2.0
        pts = self.vertex_array()
        if self.dim == 2:
            return float(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1).sum())
        total = 0.0
        for a, b, c in self._tris:
            total += 0.5 * float(np.linalg.norm(np.cross(pts[b] - pts[a], pts[c] - pts[a])))
        return total

    def _interior_int(self):
        # vertex sum, i.e. m * (vertex mean); the 3D volume divides this back out
        m = len(self._ints)
        return tuple(sum(p[k] for p in self._ints) for k in range(3)) if self.dim == 3 else None

    @cached_property
    def centroid(self) -> tuple:
        """Exact centre of mass of the body."""
        if self.degenerate:
            pts = self.vertices
            return tuple(sum(p[k] for p in pts) / len(pts) for k in range(self.dim))
        d, den, v = self.dim, self._den, self._ints
        if d == 1:
            return (Fraction(v[0][0] + v[1][0], 2 * den),)
        if d == 2:
            a2 = cx = cy = 0
            for k in range(len(v)):
                p, q = v[k], v[(k + 1) % len(v)]
                cr = p[0] * q[1] - q[0] * p[1]
                a2 += cr
                cx += (p[0] + q[0]) * cr
                cy += (p[1] + q[1]) * cr
            return (Fraction(cx, 3 * a2 * den), Fraction(cy, 3 * a2 * den))
        m = len(v)
        c = self._interior_int()
        wsum = 0
        acc = [0, 0, 0]
        for a, b, e in self._tris:
            pa = tuple(x * m for x in v[a])
            pb = tuple(x * m for x in v[b])
            pe = tuple(x * m for x in v[e])
            w = abs(_dot3(_cross3(_sub3(pa, c), _sub3(pb, c)), _sub3(pe, c)))
            wsum += w
            for k in range(3):
                acc[k] += w * (c[k] + pa[k] + pb[k] + pe[k])
        return tuple(Fraction(acc[k], 4 * wsum * m * den) for k in range(3))

    # -- maps ---------------------------------------------------------------

    def translate(self, v) -> "ConvexPolytope":
        v = [as_fraction(c) for c in v]
        return ConvexPolytope([[a + b for a, b in zip(p, v)] for p in self.vertices])

    def scale(self, s, center=None) -> "ConvexPolytope":
        s = as_fraction(s)
        c = [Fraction(0)] * self.dim if center is None else [as_fraction(x) for x in center]
        return ConvexPolytope([[ci + s * (a - ci) for a, ci in zip(p, c)] for p in self.vertices])

    def linear_map(self, matrix) -> "ConvexPolytope":
        M = [[as_fraction(x) for x in row] for row in matrix]
        return ConvexPolytope(
            [[sum(M[i][k] * p[k] for k in range(self.dim)) for i in range(self.dim)] for p in self.vertices]
        )

    def shear(self, w) -> "ConvexPolytope":
        """Image under ``(x', y) -> (x', y + w . x')``."""
        w = [as_fraction(c) for c in w]
        return ConvexPolytope(
            [list(p[:-1]) + [p[-1] + sum(a * b for a, b in zip(w, p[:-1]))] for p in self.vertices]
        )


def _fan_triangles(points, verts, planes, remap):
    """Outward triangles over extreme vertices, one fan per facet plane."""
    tris = []
    vset = set(verts)
    for key, ptris in planes.items():
        n = key[:3]
        on = sorted({v for tri in ptris for v in tri} & vset)
        if len(on) < 3:
            continue
        # order the face polygon by projecting away the dominant normal axis
        ax = max(range(3), key=lambda k: abs(n[k]))
        keep = [k for k in range(3) if k != ax]
        pts2 = [(points[v][keep[0]], points[v][keep[1]]) for v in on]
        ring = [on[i] for i in _hull_2d(pts2)]
        if len(ring) < 3:
            continue
        # make the ring counter-clockwise when seen from outside
        a, b, c = (points[ring[i]] for i in range(3))
        if _dot3(_cross3(_sub3(b, a), _sub3(c, a)), n) < 0:
            ring.reverse()
        for k in range(1, len(ring) - 1):
            tris.append((remap[ring[0]], remap[ring[k]], remap[ring[k + 1]]))
    return tris


# -- grid <-> polytope --------------------------------------------------------


def hull(G: GridSet) -> ConvexPolytope:
    """Convex hull of all cell corners of a nonempty grid set."""
    if G.is_empty():
        raise EmptySetError("hull of an empty grid set")
    d = G.dim
    h = G.h
    if d == 1:
        return ConvexPolytope.from_lattice([(G.lo[0],), (G.hi[0],)], h)
    m = G.mask
    nonempty = m.any(axis=-1)
    first = np.argmax(m, axis=-1)
    last = m.shape[-1] - 1 - np.argmax(m[..., ::-1], axis=-1)
    base = np.argwhere(nonempty)
    lows = first[nonempty] + G.lo[-1]
    highs = last[nonempty] + 1 + G.lo[-1]
    pts = []
    offsets = np.array(np.meshgrid(*([[0, 1]] * (d - 1)), indexing="ij")).reshape(d - 1, -1).T
    base = base + np.asarray(G.lo[:-1])
    for off in offsets:
        corner = base + off
        pts.append(np.column_stack([corner, lows]))
        pts.append(np.column_stack([corner, highs]))
    return ConvexPolytope.from_lattice(np.unique(np.vstack(pts), axis=0), h)


def _section(points, edges, axis, a, b):
    """Points whose hull is the polytope cut to ``a <= x[axis] <= b``."""
    out = [p for p in points if a <= p[axis] <= b]
    for i, j in edges:
        p, q = points[i], points[j]
        if p[axis] > q[axis]:
            p, q = q, p
        for c in (a, b):
            if p[axis] < c < q[axis]:
                s = (c - p[axis]) / (q[axis] - p[axis])
                out.append(tuple(pk + s * (qk - pk) for pk, qk in zip(p, q)))
    return out


def _cell_range(lo: Fraction, hi: Fraction) -> range:
    # cells k with k < hi and k + 1 > lo  (units of h)
    return range(floor(lo), ceil(hi))


def _raster_polygon(points) -> list[tuple[int, int, int]]:
    """Column runs ``(i, j0, j1)`` of cells meeting a 2D convex polygon (unit cells)."""
    den = lcm(*(c.denominator for p in points for c in p))
    ints = [tuple(int(c * den) for c in p) for p in points]
    ring = _hull_2d(ints)
    if len(ring) < 3:
        return []
    poly = [points[i] for i in ring]
    edges = [(k, (k + 1) % len(poly)) for k in range(len(poly))]
    xs = [p[0] for p in poly]
    runs = []
    for i in _cell_range(min(xs), max(xs)):
        sec = _section(poly, edges, 0, Fraction(i), Fraction(i + 1))
        ys = [p[1] for p in sec]
        r = _cell_range(min(ys), max(ys))
        runs.append((i, r.start, r.stop))
    return runs


def rasterize(P: ConvexPolytope, h) -> GridSet:
    """Outer rasterization: every cell whose interior meets the body."""
    h = as_fraction(h)
    if P.degenerate:
        raise DegenerateError("cannot rasterize a degenerate polytope")
    pts = [tuple(c / h for c in p) for p in P.vertices]
    d = P.dim
    if d == 1:
        r = _cell_range(pts[0][0], pts[1][0])
        return GridSet(np.ones(len(r), bool), [r.start], h)
    if d == 2:
        runs = _raster_polygon(pts)
        return _from_runs_2d(runs, h)
    edges = P.edges()
    xs = [p[0] for p in pts]
    cells = []
    for i in _cell_range(min(xs), max(xs)):
        sec = _section(pts, edges, 0, Fraction(i), Fraction(i + 1))
        for j, k0, k1 in _raster_polygon([(p[1], p[2]) for p in sec]):
            cells.append((i, j, k0, k1))
    lo = [min(c[0] for c in cells), min(c[1] for c in cells), min(c[2] for c in cells)]
    hi = [max(c[0] for c in cells) + 1, max(c[1] for c in cells) + 1, max(c[3] for c in cells)]
    mask = np.zeros([b - a for a, b in zip(lo, hi)], dtype=bool)
    for i, j, k0, k1 in cells:
        mask[i - lo[0], j - lo[1], k0 - lo[2]:k1 - lo[2]] = True
    return GridSet(mask, lo, h)


def _from_runs_2d(runs, h) -> GridSet:
    lo = [min(r[0] for r in runs), min(r[1] for r in runs)]
    hi = [max(r[0] for r in runs) + 1, max(r[2] for r in runs)]
    mask = np.zeros([b - a for a, b in zip(lo, hi)], dtype=bool)
    for i, j0, j1 in runs:
        mask[i - lo[0], j0 - lo[1]:j1 - lo[1]] = True
    return GridSet(mask, lo, h)


def rasterize_ball(center, radius, h, dim: int | None = None) -> GridSet:
    """Outer rasterization of the open ball: cells whose interior meets it."""
    h = as_fraction(h)
    c = [as_fraction(x) / h for x in center]
    r = as_fraction(radius) / h
    if r <= 0:
        raise DegenerateError("radius must be positive")
    d = len(c) if dim is None else dim
    den = lcm(r.denominator, *(x.denominator for x in c))
    C = [int(x * den) for x in c]
    R = int(r * den)
    ranges = [np.arange(floor(x - r), ceil(x + r), dtype=np.int64) for x in c]
    grids = np.meshgrid(*ranges, indexing="ij")
    dist2 = np.zeros(grids[0].shape, dtype=np.int64)
    for g, ck in zip(grids, C):
        below = g * den - ck
        above = ck - (g + 1) * den
        gap = np.maximum(np.maximum(below, above), 0)
        dist2 += gap * gap
    return GridSet(dist2 < R * R, [int(rg[0]) for rg in ranges], h)


def tail_measure(G: GridSet, eps) -> Fraction:
    """Mass of ``G`` over columns whose fiber measure is at most ``eps``."""
    if G.dim < 2:
        raise DimensionError("tail measure needs dimension >= 2")
    return G.measure() - restrict_to_base(G, superlevel(G, eps)).measure()


# -- homothety alignment -------------------------------------------------------


def rational_root(x: Fraction, d: int, max_den: int = ROUNDING_DENOMINATOR) -> Fraction:
    """``x ** (1/d)`` exactly when it is rational, else a close rational."""
    from .sumset import _iroot

    x = as_fraction(x)
    num, den = _iroot(x.numerator, d), _iroot(x.denominator, d)
    if num is not None and den is not None:
        return Fraction(num, den)
    return Fraction(float(x) ** (1.0 / d)).limit_denominator(max_den)


def round_point(p, grid: int = ROUNDING_DENOMINATOR) -> tuple:
    """Round each coordinate to the nearest multiple of ``1/grid`` (halves up).

    Rounding half up commutes with translations by multiples of ``1/grid``.
    """
    return tuple(Fraction(floor(as_fraction(c) * grid + Fraction(1, 2)), grid) for c in p)


def _scales(va: Fraction, vb: Fraction, d: int) -> tuple[Fraction, Fraction]:
    """Rational roots of two volumes, exact in ratio when the ratio allows.

    Anchored on the smaller volume so that swapping the bodies swaps the
    result.
    """
    from .sumset import _iroot

    q = vb / va
    num, den = _iroot(q.numerator, d), _iroot(q.denominator, d)
    if num is None or den is None:
        return rational_root(va, d), rational_root(vb, d)
    r = Fraction(num, den)
    if va <= vb:
        a = rational_root(va, d)
        return a, a * r
    b = rational_root(vb, d)
    return b / r, b


@dataclass(frozen=True)
class HomothetyFit:
    """A convex body K with ``alpha K + u`` and ``beta K + v`` covering a pair."""

    body: ConvexPolytope
    alpha: Fraction
    beta: Fraction
    u: tuple
    v: tuple
    excess_a: Fraction
    excess_b: Fraction

    def placed_a(self) -> ConvexPolytope:
        return self.body.scale(self.alpha).translate(self.u)

    def placed_b(self) -> ConvexPolytope:
        return self.body.scale(self.beta).translate(self.v)


def homothety_align(
    Pa: ConvexPolytope, Pb: ConvexPolytope, grid: int = ROUNDING_DENOMINATOR
) -> HomothetyFit:
    """Outer homothetic fit of two convex bodies.

    ``alpha`` and ``beta`` are rational d-th roots of the volumes; when the
    volume ratio is an exact d-th power, ``beta / alpha`` equals its root.
    Each body is scaled by them about its centroid; ``K`` is
    the hull of the union of the two normalized vertex sets.  Containment
    ``alpha K + u >= Pa`` and ``beta K + v >= Pb`` holds exactly because the
    same rational ``alpha, beta, u, v`` are used to build ``K``.  The
    anchors ``u, v`` are centroids rounded to multiples of ``1/grid``; pass a
    multiple of the lattice denominator to make the fit commute with lattice
    translations.
    """
    if Pa.degenerate or Pb.degenerate:
        raise DegenerateError("homothety alignment needs full-dimensional bodies")
    if Pa.dim != Pb.dim:
        raise DimensionError("bodies of different dimension")
    d = Pa.dim
    alpha, beta = _scales(Pa.volume, Pb.volume, d)
    u = round_point(Pa.centroid, grid)
    v = round_point(Pb.centroid, grid)
    pts = [[(a - c) / alpha for a, c in zip(p, u)] for p in Pa.vertices]
    pts += [[(b - c) / beta for b, c in zip(p, v)] for p in Pb.vertices]
    K = ConvexPolytope(pts)
    return HomothetyFit(
        K, alpha, beta, u, v,
        alpha**d * K.volume - Pa.volume,
        beta**d * K.volume - Pb.volume,
    )


def intersection(P: ConvexPolytope, Q: ConvexPolytope) -> ConvexPolytope | None:
    """Exact intersection of two full-dimensional polytopes (None if thin)."""
    pts = [v for v in P.vertices if Q.contains(v)] + [v for v in Q.vertices if P.contains(v)]
    for X, Y in ((P, Q), (Q, P)):
        vx = X.vertices
        for i, j in X.edges():
            p, q = vx[i], vx[j]
            for n, off in Y.facets:
                fp = sum(a * b for a, b in zip(n, p)) - off
                fq = sum(a * b for a, b in zip(n, q)) - off
                if (fp < 0 < fq) or (fq < 0 < fp):
                    s = fp / (fp - fq)
                    x = tuple(a + s * (b - a) for a, b in zip(p, q))
                    if X.contains(x) and Y.contains(x):
                        pts.append(x)
    if not pts:
        return None
    R = ConvexPolytope(pts, dim=P.dim)
    return None if R.degenerate else R


def symmetric_difference_volume(P: ConvexPolytope, Q: ConvexPolytope) -> Fraction:
    """Exact ``|P \\ Q| + |Q \\ P|`` for two convex polytopes."""
    inter = intersection(P, Q)
    common = Fraction(0) if inter is None else inter.volume
    return P.volume + Q.volume - 2 * common


def resample(G: GridSet, matrix, h_out=None) -> GridSet:
    """Image of ``G`` under a linear map, by exact cell-centre sampling.

    An output cell is occupied when the preimage of its centre lies in an
    occupied cell of ``G``.  The map is not required to preserve convexity or
    measure; callers compare measures to report drift.
    """
    d = G.dim
    M = [[as_fraction(x) for x in row] for row in matrix]
    if len(M) != d or any(len(r) != d for r in M):
        raise DimensionError("matrix shape does not match the grid dimension")
    h_in = G.h
    h_out = h_in if h_out is None else as_fraction(h_out)
    if G.is_empty():
        return GridSet.empty(d, h_out)
    Minv = _inverse(M)
    # image bounding box from the 2^d corners of the source box
    corners = np.array(np.meshgrid(*[[a, b] for a, b in zip(G.lo, G.hi)], indexing="ij")).reshape(d, -1).T
    img = [[sum(M[i][k] * int(c[k]) * h_in for k in range(d)) / h_out for i in range(d)] for c in corners]
    lo = [floor(min(p[i] for p in img)) for i in range(d)]
    hi = [ceil(max(p[i] for p in img)) for i in range(d)]
    # source index = floor(Minv (2j+1) h_out / (2 h_in)), all in integers
    ratio = h_out / h_in
    den = lcm(ratio.denominator, *(x.denominator for row in Minv for x in row))
    N = np.array([[int(x * den) for x in row] for row in Minv], dtype=object)
    scale = int(ratio * den)  # ratio = scale / den
    axes = [np.arange(a, b, dtype=np.int64) * 2 + 1 for a, b in zip(lo, hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    shape = grids[0].shape
    mask = np.ones(shape, dtype=bool)
    src = []
    bound = max(abs(int(x)) for x in N.ravel()) * max(int(abs(a).max()) for a in axes) * d * abs(scale)
    fits = bound < 2**62
    for i in range(d):
        acc = np.zeros(shape, dtype=np.int64 if fits else object)
        for k in range(d):
            if N[i, k]:
                acc = acc + grids[k].astype(acc.dtype) * int(N[i, k])
        idx = (acc * scale) // (2 * den * den)
        idx = idx.astype(np.int64)
        src.append(idx - G.lo[i])
        mask &= (idx >= G.lo[i]) & (idx < G.hi[i])
    hit = np.zeros(shape, dtype=bool)
    sel = tuple(s[mask] for s in src)
    hit[mask] = G.mask[sel]
    return GridSet(hit, lo, h_out)


def _inverse(M):
    d = len(M)
    A = [list(row) + [Fraction(int(i == j)) for j in range(d)] for i, row in enumerate(M)]
    for c in range(d):
        piv = next((r for r in range(c, d) if A[r][c] != 0), None)
        if piv is None:
            raise DegenerateError("singular matrix")
        A[c], A[piv] = A[piv], A[c]
        p = A[c][c]
        A[c] = [x / p for x in A[c]]
        for r in range(d):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [row[d:] for row in A]
