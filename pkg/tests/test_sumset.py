import itertools
import warnings
from fractions import Fraction

import numpy as np
import pytest
from conftest import cells_set, grid_sets
from hypothesis import given
from hypothesis import strategies as st

from bmgeom.convex import rasterize_ball
from bmgeom.errors import DimensionError, EmptySetError
from bmgeom.grid import GridSet, translate
from bmgeom.sumset import (
    TOL_ROOT,
    DeficitReport,
    EmptySummandWarning,
    bm_lower_bound,
    combo_sum,
    deficit_additive,
    deficit_combo,
    dth_root,
    minkowski_sum,
)


def sum_oracle(A, B):
    """Index-sum enumeration ``{i + j + e}``."""
    d = A.dim
    out = set()
    for i in cells_set(A):
        for j in cells_set(B):
            for e in itertools.product((0, 1), repeat=d):
                out.add(tuple(a + b + c for a, b, c in zip(i, j, e)))
    return out


def interval_union_length(intervals):
    total, cur_lo, cur_hi = Fraction(0), None, None
    for lo, hi in sorted(intervals):
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    return total + (cur_hi - cur_lo if cur_hi is not None else 0)


def combo_oracle_1d(A, B, t):
    """Measure of ``tA + (1-t)B`` as a union of real intervals."""
    h = A.h
    ivs = []
    for (i,) in cells_set(A):
        for (j,) in cells_set(B):
            lo = t * i * h + (1 - t) * j * h
            ivs.append((lo, lo + h))
    return interval_union_length(ivs)


class TestMinkowskiSum:
    @pytest.mark.parametrize("n", [1, 3, 7])
    def test_interval(self, n):
        h = Fraction(1, 3)
        A = GridSet.box((0,), (n,), h)
        S = minkowski_sum(A, A)
        assert cells_set(S) == {(k,) for k in range(2 * n)}
        assert S.measure() == 2 * n * h == A.measure() * 2

    def test_gapped_1d(self):
        A = GridSet.from_cells([0, 2], Fraction(1, 2))
        S = minkowski_sum(A, A)
        assert cells_set(S) == {(k,) for k in range(6)}
        assert S.measure() == 6 * A.h

    def test_block_doubles(self):
        A = GridSet.box((0, 0), (5, 5))
        S = minkowski_sum(A, A)
        assert S == GridSet.box((0, 0), (10, 10))
        assert S.measure() == 2**2 * A.measure()

    @given(grid_sets(max_side=5), st.data())
    def test_oracle(self, A, data):
        B = data.draw(grid_sets(dim=A.dim, max_side=5, h=A.h))
        assert cells_set(minkowski_sum(A, B)) == sum_oracle(A, B)

    @given(grid_sets(max_side=5), st.data())
    def test_commutative(self, A, data):
        B = data.draw(grid_sets(dim=A.dim, max_side=5))
        assert minkowski_sum(A, B) == minkowski_sum(B, A)

    @given(grid_sets(max_side=6))
    def test_single_cell_dilation(self, A):
        cell = GridSet.from_cells([(0,) * A.dim], A.h)
        S = minkowski_sum(A, cell)
        expect = set()
        for c in cells_set(A):
            for e in itertools.product((0, 1), repeat=A.dim):
                expect.add(tuple(a + b for a, b in zip(c, e)))
        assert cells_set(S) == expect
        assert S.measure() > A.measure()

    def test_mixed_h(self):
        A = GridSet.box((0, 0), (1, 1), 1)
        B = GridSet.box((0, 0), (2, 2), Fraction(1, 2))
        assert minkowski_sum(A, B) == GridSet.box((0, 0), (2, 2), 1)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            minkowski_sum(GridSet.box((0,), (2,)), GridSet.box((0, 0), (2, 2)))

    def test_empty_summand_warns(self):
        with pytest.warns(EmptySummandWarning):
            S = minkowski_sum(GridSet.box((0,), (2,)), GridSet.empty(1))
        assert S.is_empty()


class TestComboSum:
    def test_convex_block_midpoint(self):
        A = GridSet.box((0, 0), (4, 3))
        S = combo_sum(A, A, Fraction(1, 2))
        assert S.measure() == A.measure()

    def test_point_and_gapped_pair(self):
        # (1/2)[0,h) + (1/2)([0,h) u [2h,3h)) = [0,h/2) + ([0,h/2) u [h,3h/2)) = [0,2h)
        h = Fraction(1, 4)
        A = GridSet.from_cells([0], h)
        B = GridSet.from_cells([0, 2], h)
        assert combo_sum(A, B, Fraction(1, 2)).measure() == 2 * h
        assert combo_oracle_1d(A, B, Fraction(1, 2)) == 2 * h

    def test_interval_equality(self):
        A = GridSet.from_cells([0, 1], 1)
        assert combo_sum(A, A, Fraction(1, 3)).measure() == 2

    @given(grid_sets(dim=1, max_side=8), grid_sets(dim=1, max_side=8),
           st.sampled_from([Fraction(1, 2), Fraction(1, 3), Fraction(2, 5), Fraction(3, 4)]))
    def test_interval_union_oracle(self, A, B, t):
        A = GridSet(A.mask, A.lo, B.h)
        assert combo_sum(A, B, t).measure() == combo_oracle_1d(A, B, t)

    @given(grid_sets(max_side=4), st.data(), st.sampled_from([Fraction(1, 2), Fraction(1, 3), Fraction(2, 5)]))
    def test_swap_roles(self, A, data, t):
        B = data.draw(grid_sets(dim=A.dim, max_side=4, h=A.h))
        assert combo_sum(A, B, t) == combo_sum(B, A, 1 - t)

    @given(grid_sets(max_side=4), st.data(), st.sampled_from([Fraction(1, 2), Fraction(1, 3), Fraction(3, 7)]))
    def test_bm_lower_bound(self, A, data, t):
        B = data.draw(grid_sets(dim=A.dim, max_side=4, h=A.h))
        S = combo_sum(A, B, t)
        bound = bm_lower_bound(A, B, t)
        assert float(S.measure()) >= bound - TOL_ROOT

    @pytest.mark.parametrize("t", [0, 1, Fraction(3, 2), Fraction(-1, 2)])
    def test_weight_range(self, t):
        A = GridSet.box((0,), (2,))
        with pytest.raises(ValueError):
            combo_sum(A, A, t)

    def test_weight_denominator_cap(self):
        A = GridSet.box((0,), (2,))
        with pytest.raises(ValueError):
            combo_sum(A, A, Fraction(1, 17))


class TestDeficit:
    def test_homothetic_blocks(self):
        A = GridSet.box((0, 0), (3, 3))
        B = GridSet.box((10, 4), (16, 10))
        r = deficit_additive(A, B)
        assert r.delta == 0.0 and r.is_equality
        assert deficit_combo(A, B, Fraction(1, 3)).delta == 0.0

    def test_gapped_pair(self):
        h = Fraction(1, 2)
        A = GridSet.from_cells([0, 2], h)
        r = deficit_additive(A, A)
        # (6h - 2h - 2h) / 2h
        assert r.measure_sum == 6 * h
        assert r.delta == 1.0

    def test_ball_sequence_decreases(self):
        deltas = []
        # coarser rasters of the disk are nearly squares (delta = 0 at h = 1/4)
        for n in (16, 32, 64, 128):
            B = rasterize_ball((0, 0), Fraction(1, 2), Fraction(1, n))
            deltas.append(deficit_additive(B, B).delta)
        assert all(a > b for a, b in zip(deltas, deltas[1:]))
        assert 0 <= deltas[-1] < deltas[0] / 3

    def test_empty_operand(self):
        with pytest.raises(EmptySetError, match="empty"):
            deficit_additive(GridSet.box((0,), (2,)), GridSet.empty(1))

    @given(grid_sets(max_side=5), st.data())
    def test_nonnegative(self, A, data):
        B = data.draw(grid_sets(dim=A.dim, max_side=5))
        assert deficit_additive(A, B).delta >= -TOL_ROOT

    def test_unit_measure_combo(self):
        # with |A| = |B| = 1 the combination deficit is |tA+(1-t)B| - 1
        A = GridSet.from_cells([(0, 0), (2, 0), (0, 2), (2, 2)], Fraction(1, 2))
        r = deficit_combo(A, A, Fraction(1, 2))
        assert r.delta == pytest.approx(float(r.measure_sum) - 1, abs=1e-15)

    def test_report_round_trip(self):
        r = deficit_combo(GridSet.box((0, 0), (2, 3)), GridSet.box((0, 0), (3, 1)), Fraction(2, 5))
        assert DeficitReport.from_dict(r.to_dict()) == r


@pytest.mark.parametrize("x,d", [(Fraction(8), 3), (Fraction(1, 4), 2), (Fraction(2), 2), (Fraction(27, 64), 3)])
def test_dth_root(x, d):
    assert dth_root(x, d) == pytest.approx(float(x) ** (1 / d), rel=1e-15)
