"""Interval algebra and hypothesis-set parsing."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from possim.hypotheses import Interval, IntervalSet, LatticeMask, parse_hypothesis


class TestParsing:
    @pytest.mark.parametrize(
        "text,expect",
        [
            ("(-inf,150]", ((-math.inf, 150.0, True, False),)),
            ("[0,0.2]", ((0.0, 0.2, False, False),)),
            ("(0.2,1]", ((0.2, 1.0, True, False),)),
        ],
    )
    def test_single(self, text, expect):
        got = parse_hypothesis(text)
        assert tuple(
            (iv.lo, iv.hi, iv.lo_open, iv.hi_open) for iv in got.intervals
        ) == expect

    def test_union(self):
        got = parse_hypothesis("[0,0.1] U [0.9,1]")
        assert len(got.intervals) == 2
        assert got.contains(0.05) and got.contains(0.95)
        assert not got.contains(0.5)

    def test_roundtrip_via_str(self):
        h = parse_hypothesis("(0.2,1] U [-3,0.1)")
        again = parse_hypothesis(str(h))
        assert again == h

    def test_bad_syntax(self):
        for text in ("0.2,1", "[1,0]", "[a,b]", "[0,,1]"):
            with pytest.raises(ValueError):
                parse_hypothesis(text)


class TestComplement:
    def test_halfline_over_reals(self):
        h = parse_hypothesis("(-inf,150]")
        c = h.complement(-math.inf, math.inf)
        assert str(c) == "(150,inf)"

    def test_interval_over_unit(self):
        h = parse_hypothesis("[0,0.2]")
        assert str(h.complement(0.0, 1.0)) == "(0.2,1]"

    def test_union_over_unit(self):
        h = parse_hypothesis("[0,0.1] U [0.9,1]")
        assert str(h.complement(0.0, 1.0)) == "(0.1,0.9)"

    def test_empty_and_full(self):
        empty = IntervalSet.empty()
        full = empty.complement(0.0, 1.0)
        assert full.contains(0.0) and full.contains(1.0)
        assert full.complement(0.0, 1.0).is_empty

    def test_point_gap(self):
        h = parse_hypothesis("[0,0.5) U (0.5,1]")
        c = h.complement(0.0, 1.0)
        assert str(c) == "[0.5,0.5]"


@st.composite
def interval_sets(draw):
    k = draw(st.integers(min_value=1, max_value=4))
    pieces = []
    for _ in range(k):
        a = draw(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
        b = draw(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
        lo, hi = min(a, b), max(a, b)
        lo_open = draw(st.booleans()) and lo != hi
        hi_open = draw(st.booleans()) and lo != hi
        pieces.append(Interval(lo, hi, lo_open, hi_open))
    return IntervalSet(pieces)


class TestAlgebraProperties:
    @given(interval_sets())
    @settings(max_examples=300, deadline=None)
    def test_double_complement_is_identity(self, h):
        assert h.complement(0.0, 1.0).complement(0.0, 1.0) == h

    @given(interval_sets(), st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
    @settings(max_examples=300, deadline=None)
    def test_complement_partitions_points(self, h, x):
        c = h.complement(0.0, 1.0)
        assert h.contains(x) != c.contains(x)

    @given(interval_sets(), interval_sets())
    @settings(max_examples=200, deadline=None)
    def test_union_contains_both(self, a, b):
        u = a.union(b)
        assert a.issubset(u, 0.0, 1.0)
        assert b.issubset(u, 0.0, 1.0)

    @given(interval_sets(), interval_sets(),
           st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_intersection_membership(self, a, b, x):
        assert a.intersection(b).contains(x) == (a.contains(x) and b.contains(x))


class TestGridMask:
    def test_open_endpoints_excluded(self):
        grid = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        h = parse_hypothesis("(0.25,0.75]")
        assert h.grid_mask(grid).tolist() == [False, False, True, True, False]

    def test_union_mask(self):
        grid = np.linspace(0, 1, 11)
        h = parse_hypothesis("[0,0.1] U [0.9,1]")
        assert h.grid_mask(grid).sum() == 4


class TestLatticeMask:
    def test_complement_and_subset(self):
        m = LatticeMask(np.array([[True, False], [False, True]]))
        c = m.complement()
        assert not m.intersection(c).mask.any()
        assert m.issubset(m.union(c))
        assert m.union(c).mask.all()

    def test_empty(self):
        assert LatticeMask(np.zeros((2, 2), dtype=bool)).is_empty
