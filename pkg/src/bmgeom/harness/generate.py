"""Seeded generators for test pairs.

Every trial draws from its own stream ``PCG64(SeedSequence([seed, trial]))``,
so trials are independent of how many others run and in which order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import pi, tan

import numpy as np

from ..convex import ConvexPolytope, rasterize, rasterize_ball
from ..grid import GridSet, as_fraction, union
from ..recover import PipelineParams

FAMILIES = ("ball", "cube", "simplex", "random-polytope", "two-blocks")
#: centre jitter is a multiple of h / JITTER_STEPS
JITTER_STEPS = 16


def rng_for(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(trial)])))


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to regenerate a batch of pairs bit-identically.

    ``ratio`` is the linear scale of B's body relative to A's, ``size`` the
    diameter of A's body.  ``deletion``/``addition`` perturb B only.
    """

    seed: int = 0
    dim: int = 2
    h: Fraction = Fraction(1, 32)
    family: str = "ball"
    deletion: float = 0.0
    addition: float = 0.0
    t: Fraction = Fraction(1, 2)
    params: PipelineParams = field(default_factory=PipelineParams)
    trials: int = 1
    ratio: Fraction = Fraction(1)
    size: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "h", as_fraction(self.h))
        object.__setattr__(self, "t", as_fraction(self.t))
        object.__setattr__(self, "ratio", as_fraction(self.ratio))
        object.__setattr__(self, "size", as_fraction(self.size))
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        for name in ("deletion", "addition"):
            f = getattr(self, name)
            if not 0 <= f < 1:
                raise ValueError(f"{name} fraction must lie in [0, 1)")
        if self.h <= 0 or self.ratio <= 0 or self.size <= 0:
            raise ValueError("h, ratio and size must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.params.t != self.t:
            object.__setattr__(self, "params", replace(self.params, t=self.t))

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "dim": self.dim,
            "h": str(self.h),
            "family": self.family,
            "deletion": self.deletion,
            "addition": self.addition,
            "t": str(self.t),
            "params": self.params.to_dict(),
            "trials": self.trials,
            "ratio": str(self.ratio),
            "size": str(self.size),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        kw = dict(data)
        for k in ("h", "t", "ratio", "size"):
            if k in kw:
                kw[k] = Fraction(kw[k])
        if "params" in kw:
            kw["params"] = PipelineParams.from_dict(kw["params"])
        return cls(**kw)


# -- bodies ---------------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: Fraction

    def transformed(self, scale, shift, rot=None):
        c = [scale * x + s for x, s in zip(self.center, shift)]
        if rot is not None:
            c = _apply(rot, c)
        return Ball(tuple(c), scale * self.radius)

    def rasterize(self, h) -> GridSet:
        return rasterize_ball(self.center, self.radius, h)

    def surface_to_volume(self) -> float:
        return len(self.center) / float(self.radius)


@dataclass(frozen=True)
class Pieces:
    """A union of convex polytopes (a single piece for convex families)."""

    parts: tuple

    def transformed(self, scale, shift, rot=None):
        out = []
        for P in self.parts:
            pts = [[scale * x + s for x, s in zip(p, shift)] for p in P.vertices]
            if rot is not None:
                pts = [_apply(rot, p) for p in pts]
            out.append(ConvexPolytope(pts))
        return Pieces(tuple(out))

    def rasterize(self, h) -> GridSet:
        G = rasterize(self.parts[0], h)
        for P in self.parts[1:]:
            G = union(G, rasterize(P, h))
        return G

    def surface_to_volume(self) -> float:
        s = sum(P.surface_area() for P in self.parts)
        return s / float(sum(P.volume for P in self.parts))


def _apply(M, p):
    return [sum(M[i][k] * p[k] for k in range(len(p))) for i in range(len(p))]


def rational_rotation(angle: float, dim: int, axes=(0, None), max_den: int = 1 << 16):
    """Exactly orthogonal rational rotation by about ``angle`` in the plane of two axes.

    Uses ``cos = (1-m^2)/(1+m^2)``, ``sin = 2m/(1+m^2)`` with ``m`` a rational
    approximation of ``tan(angle/2)``.
    """
    i, j = axes[0], dim - 1 if axes[1] is None else axes[1]
    M = [[Fraction(int(r == c)) for c in range(dim)] for r in range(dim)]
    if dim < 2 or angle == 0:
        return M
    m = Fraction(tan(angle / 2)).limit_denominator(max_den)
    c = (1 - m * m) / (1 + m * m)
    s = 2 * m / (1 + m * m)
    M[i][i], M[i][j], M[j][i], M[j][j] = c, -s, s, c
    return M


def family_body(family: str, dim: int, size: Fraction, rng: np.random.Generator, h: Fraction):
    """A's body, with its position jittered by a random multiple of h/16."""
    jit = [Fraction(int(k), JITTER_STEPS) * h for k in rng.integers(0, JITTER_STEPS, dim)]
    size = as_fraction(size)
    if family == "ball":
        return Ball(tuple(jit), size / 2)
    if family == "cube":
        corners = np.array(np.meshgrid(*[[0, 1]] * dim, indexing="ij")).reshape(dim, -1).T
        return Pieces((ConvexPolytope([[size * int(c) + j for c, j in zip(p, jit)] for p in corners]),))
    if family == "simplex":
        pts = [list(jit)]
        for k in range(dim):
            pts.append([j + (size if i == k else 0) for i, j in enumerate(jit)])
        return Pieces((ConvexPolytope(pts),))
    if family == "random-polytope":
        if dim == 1:
            return Pieces((ConvexPolytope([[jit[0]], [jit[0] + size]]),))
        while True:
            raw = rng.normal(size=(4 * dim + 4, dim))
            raw /= np.linalg.norm(raw, axis=1, keepdims=True)
            pts = [[Fraction(float(x)).limit_denominator(256) * size / 2 + j for x, j in zip(p, jit)] for p in raw]
            P = ConvexPolytope(pts)
            if not P.degenerate:
                return Pieces((P,))
    if family == "two-blocks":
        side = size / 3
        out = []
        for off in (Fraction(0), 2 * side):
            corners = np.array(np.meshgrid(*[[0, 1]] * dim, indexing="ij")).reshape(dim, -1).T
            out.append(ConvexPolytope([
                [side * int(c) + j + (off if i == 0 else 0) for i, (c, j) in enumerate(zip(p, jit))]
                for p in corners
            ]))
        return Pieces(tuple(out))
    raise ValueError(f"unknown family {family!r}")


def perturb(G: GridSet, deletion: float, addition: float, rng: np.random.Generator) -> GridSet:
    """Delete ``round(deletion * n)`` cells and add ``round(addition * n)`` cells.

    Added cells are drawn from the empty cells of the bounding box grown by one.
    """
    if not 0 <= deletion < 1 or not 0 <= addition < 1:
        raise ValueError("perturbation fractions must lie in [0, 1)")
    n = G.ncells
    mask = np.pad(G.mask, 1)
    lo = [a - 1 for a in G.lo]
    k_del = int(round(deletion * n))
    k_add = int(round(addition * n))
    if k_del:
        full = np.flatnonzero(mask)
        drop = rng.choice(len(full), size=k_del, replace=False)
        mask.ravel()[full[np.sort(drop)]] = False
    if k_add:
        empty = np.flatnonzero(~np.pad(G.mask, 1))
        take = rng.choice(len(empty), size=min(k_add, len(empty)), replace=False)
        mask.ravel()[empty[np.sort(take)]] = True
    return GridSet(mask, lo, G.h)


def scenario_bodies(config: ScenarioConfig, trial: int = 0):
    """The two continuous bodies of a trial and the trial's generator."""
    rng = rng_for(config.seed, trial)
    body_a = family_body(config.family, config.dim, config.size, rng, config.h)
    jit = [Fraction(int(k), JITTER_STEPS) * config.h for k in rng.integers(0, JITTER_STEPS, config.dim)]
    shift = [j + (config.size * (config.ratio + 1) if i == 0 else 0) for i, j in enumerate(jit)]
    body_b = body_a.transformed(config.ratio, shift)
    return body_a, body_b, rng


def generate(config: ScenarioConfig, trial: int = 0, rotation: float | None = None):
    """Deterministic pair ``(A, B)`` for one trial.

    ``A`` rasterizes the family body; ``B`` rasterizes its homothet (scale
    ``ratio``, translated) and is then perturbed.  ``rotation`` rotates both
    bodies in the plane of the first and last axes before rasterizing.
    """
    body_a, body_b, rng = scenario_bodies(config, trial)
    if rotation:
        R = rational_rotation(rotation, config.dim)
        body_a = body_a.transformed(1, [0] * config.dim, R)
        body_b = body_b.transformed(1, [0] * config.dim, R)
    A = body_a.rasterize(config.h)
    B = body_b.rasterize(config.h)
    if config.deletion or config.addition:
        B = perturb(B, config.deletion, config.addition, rng)
    return A, B


def random_grid(rng: np.random.Generator, dim: int, max_side: int | None = None) -> GridSet:
    """A random nonempty grid set: a Bernoulli blob or a union of boxes."""
    if max_side is None:
        max_side = {1: 64, 2: 24, 3: 10}[dim]
    shape = [int(x) for x in rng.integers(1, max_side + 1, dim)]
    lo = [int(x) for x in rng.integers(-4, 5, dim)]
    if rng.random() < 0.5:
        mask = rng.random(shape) < rng.uniform(0.2, 0.95)
    else:
        mask = np.zeros(shape, dtype=bool)
        for _ in range(int(rng.integers(1, 5))):
            a = [int(rng.integers(0, s)) for s in shape]
            b = [int(rng.integers(x + 1, s + 1)) for x, s in zip(a, shape)]
            mask[tuple(slice(x, y) for x, y in zip(a, b))] = True
    if not mask.any():
        mask.flat[int(rng.integers(0, mask.size))] = True
    h = Fraction(1, int(rng.choice([1, 2, 4])))
    return GridSet(mask, lo, h)


def random_pair(seed: int, trial: int, dim: int, max_side: int | None = None):
    rng = rng_for(seed, trial)
    A = random_grid(rng, dim, max_side)
    B = random_grid(rng, dim, max_side)
    return A, B
