from fractions import Fraction

import pytest
from hypothesis import given

from bmgeom.convex import hull
from bmgeom.errors import FormatError
from bmgeom.grid import GridSet
from bmgeom.io import (
    dumps_grid,
    dumps_json,
    dumps_poly,
    load_grid,
    load_report,
    loads_grid,
    loads_poly,
    save_grid,
    save_report,
)

from conftest import cells_set, grid_sets

EXAMPLE = """BMGRID 1
dim=2
h=1/4
origin=-3 0
bbox=0..5 0..7
r 0 1 3
c 4 6
"""


def test_example_file():
    G = loads_grid(EXAMPLE)
    assert G.h == Fraction(1, 4)
    assert cells_set(G) == {(-3, 1), (-3, 2), (-3, 3), (1, 6)}


@given(grid_sets())
def test_grid_round_trip(G):
    H = loads_grid(dumps_grid(G))
    assert H == G and cells_set(H) == cells_set(G) and H.h == G.h


def test_grid_file_round_trip(tmp_path):
    G = GridSet.box((-2, 5, 1), (3, 7, 4), Fraction(2, 3))
    save_grid(G, tmp_path / "g.bm")
    assert load_grid(tmp_path / "g.bm") == G


def test_empty_grid_round_trip():
    G = GridSet.empty(2, Fraction(1, 8))
    assert loads_grid(dumps_grid(G)).is_empty()


def test_duplicate_cell_names_line():
    text = EXAMPLE + "c 4 6\n"
    with pytest.raises(FormatError) as info:
        loads_grid(text)
    assert info.value.lineno == 8
    assert "line 8" in str(info.value)


def test_run_overlapping_cell():
    text = EXAMPLE + "c 0 2\n"
    with pytest.raises(FormatError, match="line 8"):
        loads_grid(text)


@pytest.mark.parametrize(
    "bad, needle",
    [
        (EXAMPLE.replace("BMGRID 1", "BMGRID 2"), "version"),
        (EXAMPLE.replace("BMGRID 1", "GRID 1"), "header"),
        (EXAMPLE.replace("h=1/4", "h=-1/4"), "positive"),
        (EXAMPLE.replace("h=1/4", "h=abc"), "rational"),
        (EXAMPLE.replace("h=1/4", "h=1/0"), "rational"),
        (EXAMPLE.replace("dim=2", "dim=4"), "dim"),
        (EXAMPLE.replace("origin=-3 0", "origin=-3"), "origin"),
        (EXAMPLE.replace("bbox=0..5 0..7", "bbox=0..5"), "bbox"),
        (EXAMPLE.replace("c 4 6", "c 9 6"), "outside"),
        (EXAMPLE.replace("c 4 6", "x 4 6"), "unknown"),
        (EXAMPLE.replace("r 0 1 3", "r 0 6 3"), "outside"),
        (EXAMPLE.replace("dim=2\n", ""), "dim"),
        ("", "empty"),
    ],
)
def test_grid_rejections(bad, needle):
    with pytest.raises(FormatError, match=needle):
        loads_grid(bad)


def test_poly_round_trip():
    P = hull(GridSet.from_cells([(0, 0), (3, 1), (1, 4)], Fraction(1, 3)))
    Q = loads_poly(dumps_poly(P))
    assert sorted(Q.vertices) == sorted(P.vertices)
    assert Q.volume == P.volume


def test_poly_rejections():
    with pytest.raises(FormatError, match="version"):
        loads_poly("BMPOLY 7\ndim=2\n0 0\n")
    with pytest.raises(FormatError, match="coordinates"):
        loads_poly("BMPOLY 1\ndim=2\n0 0 1\n")
    with pytest.raises(FormatError, match="dim"):
        loads_poly("BMPOLY 1\n0 0\n")
    with pytest.raises(FormatError, match="no vertices"):
        loads_poly("BMPOLY 1\ndim=2\n")


def test_json_is_canonical(tmp_path):
    a = dumps_json({"b": 1, "a": [1, 2]})
    b = dumps_json({"a": [1, 2], "b": 1})
    assert a == b and a.endswith("\n")
    save_report({"x": "1/3"}, tmp_path / "r.json")
    assert load_report(tmp_path / "r.json") == {"x": "1/3"}
    (tmp_path / "bad.json").write_text("{\n  oops")
    with pytest.raises(FormatError):
        load_report(tmp_path / "bad.json")
