"""Text formats: ``BMGRID 1`` grid sets, ``BMPOLY 1`` polytopes, JSON reports.

BMGRID layout::

    BMGRID 1
    dim=2
    h=1/4
    origin=-3 0
    bbox=0..5 0..7
    r 0 1 3
    c 4 6

``bbox`` gives half-open index ranges relative to ``origin``.  A ``c`` line
names one cell (relative indices).  An ``r`` line is a vertical run: the
``d-1`` base indices, then the start and length along the last axis.
Duplicate cells are rejected.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .convex import ConvexPolytope
from .errors import FormatError
from .grid import GridSet, column_runs

GRID_MAGIC = "BMGRID"
POLY_MAGIC = "BMPOLY"
VERSION = 1


def _parse_fraction(text: str, lineno: int) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"not a rational number: {text.strip()!r}", lineno) from exc


def _parse_ints(text: str, lineno: int) -> list[int]:
    try:
        return [int(x) for x in text.split()]
    except ValueError as exc:
        raise FormatError(f"expected integers: {text.strip()!r}", lineno) from exc


def _check_header(first: str, magic: str) -> None:
    parts = first.split()
    if not parts or parts[0] != magic:
        raise FormatError(f"missing {magic} header", 1)
    if len(parts) != 2 or parts[1] != str(VERSION):
        raise FormatError(f"unsupported {magic} version {' '.join(parts[1:]) or '?'}", 1)


# -- grids ------------------------------------------------------------------------


def dumps_grid(G: GridSet) -> str:
    lines = [f"{GRID_MAGIC} {VERSION}", f"dim={G.dim}", f"h={G.h.numerator}/{G.h.denominator}"]
    lines.append("origin=" + " ".join(str(x) for x in G.lo))
    lines.append("bbox=" + " ".join(f"0..{s}" for s in G.shape))
    if G.dim == 1:
        for _, start, length in column_runs(GridSet(G.mask[None, :], (0, G.lo[0]), G.h)):
            lines.append(f"r {start} {length}")
    else:
        for base, start, length in column_runs(G):
            lines.append("r " + " ".join(str(b) for b in base) + f" {start} {length}")
    return "\n".join(lines) + "\n"


def loads_grid(text: str) -> GridSet:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty file", 1)
    _check_header(lines[0], GRID_MAGIC)
    header: dict[str, tuple[str, int]] = {}
    body_start = len(lines)
    for n, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line[0] in "cr" and (len(line) == 1 or line[1] == " "):
            body_start = n - 1
            break
        if "=" not in line:
            raise FormatError(f"expected key=value, got {line!r}", n)
        key, val = line.split("=", 1)
        if key in header:
            raise FormatError(f"repeated header key {key!r}", n)
        header[key.strip()] = (val, n)
    for key in ("dim", "h", "origin", "bbox"):
        if key not in header:
            raise FormatError(f"missing header key {key!r}", body_start + 1)
    dim_text, ln = header["dim"]
    dims = _parse_ints(dim_text, ln)
    if len(dims) != 1 or dims[0] not in (1, 2, 3):
        raise FormatError("dim must be 1, 2 or 3", ln)
    d = dims[0]
    h = _parse_fraction(*header["h"])
    if h <= 0:
        raise FormatError("cell size must be positive", header["h"][1])
    origin = _parse_ints(*header["origin"])
    if len(origin) != d:
        raise FormatError("origin has the wrong length", header["origin"][1])
    bbox_text, ln = header["bbox"]
    shape = []
    for part in bbox_text.split():
        try:
            lo, hi = (int(x) for x in part.split(".."))
        except ValueError as exc:
            raise FormatError(f"bad bbox range {part!r}", ln) from exc
        if lo != 0 or hi < 0:
            raise FormatError(f"bbox range must be 0..n, got {part!r}", ln)
        shape.append(hi)
    if len(shape) != d:
        raise FormatError("bbox has the wrong length", ln)
    mask = np.zeros(shape, dtype=bool)
    for n in range(body_start, len(lines)):
        lineno = n + 1
        line = lines[n].strip()
        if not line or line.startswith("#"):
            continue
        kind, _, rest = line.partition(" ")
        vals = _parse_ints(rest, lineno)
        if kind == "c":
            if len(vals) != d:
                raise FormatError(f"cell needs {d} indices", lineno)
            idx = tuple(vals)
            if any(not 0 <= i < s for i, s in zip(idx, shape)):
                raise FormatError(f"cell {idx} outside bbox", lineno)
            if mask[idx]:
                raise FormatError(f"duplicate cell {idx}", lineno)
            mask[idx] = True
        elif kind == "r":
            if len(vals) != d + 1:
                raise FormatError(f"run needs {d + 1} integers", lineno)
            *base, start, length = vals
            if length <= 0:
                raise FormatError("run length must be positive", lineno)
            if any(not 0 <= i < s for i, s in zip(base, shape)) or start < 0 or start + length > shape[-1]:
                raise FormatError("run outside bbox", lineno)
            seg = mask[tuple(base)][start:start + length]
            if seg.any():
                raise FormatError(f"duplicate cell in run {vals}", lineno)
            mask[tuple(base) + (slice(start, start + length),)] = True
        else:
            raise FormatError(f"unknown record {kind!r}", lineno)
    return GridSet(mask, origin, h)


def save_grid(G: GridSet, path) -> None:
    Path(path).write_text(dumps_grid(G))


def load_grid(path) -> GridSet:
    return loads_grid(Path(path).read_text())


# -- polytopes -------------------------------------------------------------------------


def dumps_poly(P: ConvexPolytope) -> str:
    lines = [f"{POLY_MAGIC} {VERSION}", f"dim={P.dim}"]
    for v in sorted(P.vertices):
        lines.append(" ".join(str(c) for c in v))
    return "\n".join(lines) + "\n"


def loads_poly(text: str) -> ConvexPolytope:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty file", 1)
    _check_header(lines[0], POLY_MAGIC)
    d = None
    pts = []
    for n, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("dim="):
            vals = _parse_ints(line[4:], n)
            if d is not None or len(vals) != 1 or vals[0] not in (1, 2, 3):
                raise FormatError("bad or repeated dim line", n)
            d = vals[0]
            continue
        if d is None:
            raise FormatError("vertex before dim line", n)
        p = [_parse_fraction(x, n) for x in line.split()]
        if len(p) != d:
            raise FormatError(f"vertex needs {d} coordinates", n)
        pts.append(p)
    if d is None:
        raise FormatError("missing dim line", len(lines))
    if not pts:
        raise FormatError("no vertices", len(lines))
    return ConvexPolytope(pts, dim=d)


def save_poly(P: ConvexPolytope, path) -> None:
    Path(path).write_text(dumps_poly(P))


def load_poly(path) -> ConvexPolytope:
    return loads_poly(Path(path).read_text())


# -- reports -------------------------------------------------------------------------------


def dumps_json(data) -> str:
    """Canonical JSON (sorted keys, fixed separators) for byte-stable output."""
    return json.dumps(data, sort_keys=True, indent=2, separators=(",", ": ")) + "\n"


def save_report(data: dict, path) -> None:
    Path(path).write_text(dumps_json(data))


def load_report(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, exc.lineno) from exc
