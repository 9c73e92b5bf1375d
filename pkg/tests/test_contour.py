"""Possibility-core behaviour: set queries, duality, level sets."""

import math

import numpy as np
import pytest
from scipy.special import ndtr

from possim.contour import Contour, Contour2D, IMPair, golden_max
from possim.errors import ResolutionError
from possim.hypotheses import Interval, IntervalSet, LatticeMask, parse_hypothesis
from possim.likelihood_im import build_im
from possim.models import BinomialData, BinomialModel, NormalData, NormalMeanModel


@pytest.fixture(scope="module")
def normal_im():
    return build_im(NormalMeanModel(1.0), NormalData(152.0))


@pytest.fixture(scope="module")
def binom_im():
    return build_im(BinomialModel(20), BinomialData(8))


@pytest.fixture(scope="module")
def gridonly_im():
    # same normal contour but without an exact evaluator
    im = build_im(NormalMeanModel(1.0), NormalData(152.0))
    contour = Contour(im.contour.grid, im.contour.values, im.contour.mle_point, None)
    return IMPair(contour, im.space)


class TestContourValidation:
    def test_rejects_unsorted_grid(self):
        with pytest.raises(ValueError):
            Contour([0.0, 2.0, 1.0], [0.1, 1.0, 0.1], 2.0)

    def test_rejects_out_of_range_values(self):
        with pytest.raises(ValueError):
            Contour([0.0, 1.0, 2.0], [0.0, 1.5, 0.0], 1.0)

    def test_rejects_peak_below_one(self):
        with pytest.raises(ValueError):
            Contour([0.0, 1.0, 2.0], [0.1, 0.5, 0.1], 1.0)

    def test_rejects_mle_off_grid(self):
        with pytest.raises(ValueError):
            Contour([0.0, 1.0, 2.0], [0.1, 1.0, 0.1], 0.5)

    def test_2d_shape_checks(self):
        with pytest.raises(ValueError):
            Contour2D((np.array([0.0, 1.0]), np.array([0.0, 1.0])),
                      np.ones((3, 2)), (0.0, 0.0))


class TestBasicQueries:
    def test_full_space_possibility_is_one(self, normal_im, binom_im):
        assert normal_im.possibility(parse_hypothesis("(-inf,inf)")) == 1.0
        assert binom_im.possibility(parse_hypothesis("[0,1]")) == 1.0

    def test_empty_set(self, normal_im):
        assert normal_im.possibility(IntervalSet.empty()) == 0.0
        assert normal_im.necessity(parse_hypothesis("(-inf,inf)")) == 1.0

    def test_full_space_necessity_duality(self, binom_im):
        assert binom_im.necessity(parse_hypothesis("[0,1]")) == 1.0
        assert binom_im.necessity(IntervalSet.empty()) == 0.0

    def test_normal_halfline_value(self, normal_im):
        # oracle: sup over (-inf, 150] of 2 Phi(-|152-t|) is at t=150
        want = 2.0 * ndtr(-2.0)
        got = normal_im.possibility(parse_hypothesis("(-inf,150]"))
        assert got == pytest.approx(want, abs=1e-14)

    def test_point_hypothesis(self, normal_im):
        got = normal_im.possibility(IntervalSet.point(151.0))
        assert got == pytest.approx(2.0 * ndtr(-1.0), abs=1e-14)

    def test_offgrid_point_uses_exact_eval(self, normal_im):
        x = 150.123456789
        got = normal_im.possibility(IntervalSet.point(x))
        assert got == pytest.approx(2.0 * ndtr(-abs(152.0 - x)), abs=1e-14)

    def test_resolution_error_without_exact_eval(self, gridonly_im):
        grid = gridonly_im.contour.grid
        thin = IntervalSet.interval(grid[3] + 1e-9, grid[4] - 1e-9)
        with pytest.raises(ResolutionError):
            gridonly_im.possibility(thin)

    def test_gridonly_wide_interval_works(self, gridonly_im):
        got = gridonly_im.possibility(IntervalSet.interval(150.0, 153.0))
        assert got == 1.0


class TestProperties:
    """Maxitivity, monotonicity, ordering, zero-one, nesting (unit scale)."""

    def _random_sets(self, im, rng, k):
        grid = im.contour.grid
        sets = []
        for _ in range(k):
            pieces = []
            for _ in range(rng.integers(1, 3)):
                i, j = sorted(rng.integers(0, grid.shape[0], 2))
                pieces.append((float(grid[i]), float(grid[j])))
            sets.append(IntervalSet([Interval(a, b) for a, b in pieces]))
        return sets

    @pytest.mark.parametrize("fixture", ["normal_im", "binom_im"])
    def test_maxitivity_on_grid_aligned_pairs(self, fixture, request):
        im = request.getfixturevalue(fixture)
        rng = np.random.default_rng(7)
        for a, b in zip(self._random_sets(im, rng, 60), self._random_sets(im, rng, 60)):
            lhs = im.possibility(a.union(b))
            rhs = max(im.possibility(a), im.possibility(b))
            assert lhs == pytest.approx(rhs, abs=1e-9)

    @pytest.mark.parametrize("fixture", ["normal_im", "binom_im"])
    def test_monotonicity(self, fixture, request):
        im = request.getfixturevalue(fixture)
        rng = np.random.default_rng(8)
        for h in self._random_sets(im, rng, 60):
            grid = im.contour.grid
            i, j = sorted(rng.integers(0, grid.shape[0], 2))
            wider = h.union(IntervalSet.interval(float(grid[i]), float(grid[j])))
            assert im.possibility(h) <= im.possibility(wider) + 1e-12

    @pytest.mark.parametrize("fixture", ["normal_im", "binom_im", "gridonly_im"])
    def test_ordering_and_zero_one(self, fixture, request):
        im = request.getfixturevalue(fixture)
        rng = np.random.default_rng(9)
        for h in self._random_sets(im, rng, 100):
            poss = im.possibility(h)
            nec = im.necessity(h)
            assert nec <= poss + 1e-12
            if poss < 1.0 - 1e-12:
                assert nec == pytest.approx(0.0, abs=1e-12)
            if nec > 1e-12:
                assert poss == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("fixture", ["normal_im", "binom_im"])
    def test_confidence_set_nesting(self, fixture, request):
        im = request.getfixturevalue(fixture)
        levels = [0.01, 0.05, 0.1, 0.25, 0.5, 0.9]
        sets = [im.confidence_set(a) for a in levels]
        for small_a, big_a in zip(sets, sets[1:]):
            assert big_a.issubset(small_a, *im.space)

    def test_confidence_set_contains_mle(self, normal_im, binom_im):
        for im in (normal_im, binom_im):
            for a in (0.0, 0.05, 0.5, 0.99):
                assert im.confidence_set(a).contains(im.contour.mle_point)


class TestConfidenceSets:
    def test_binomial_level_set_bounds(self, binom_im):
        cs = binom_im.confidence_set(0.05)
        assert cs.contains(0.4)
        assert not cs.contains(0.2)
        assert len(cs.intervals) == 1

    def test_level_zero_spans_support(self, binom_im):
        cs = binom_im.confidence_set(0.0)
        assert cs.contains(0.4)
        assert cs.contains(0.999)
        # theta = 0 has contour exactly 0 when y > 0
        assert not cs.contains(0.0)

    def test_crossing_refinement(self, normal_im):
        cs = normal_im.confidence_set(0.05)
        (iv,) = cs.intervals
        # closed form: {t: 2 Phi(-|152-t|) > 0.05} = 152 +- 1.95996...
        from scipy.special import ndtri

        half = -ndtri(0.025)
        assert iv.lo == pytest.approx(152.0 - half, abs=1e-9)
        assert iv.hi == pytest.approx(152.0 + half, abs=1e-9)


class TestLatticeQueries:
    @pytest.fixture(scope="class")
    def table_im(self):
        from possim.models import TableData, TwoByTwoModel

        return build_im(TwoByTwoModel((25, 25)), TableData(11, 14, 17, 8),
                        n_points=61)

    def test_mask_queries(self, table_im):
        values = table_im.contour.values
        mask = LatticeMask(np.ones_like(values, dtype=bool))
        assert table_im.possibility(mask) == 1.0
        assert table_im.necessity(mask) == 1.0
        empty = LatticeMask(np.zeros_like(values, dtype=bool))
        assert table_im.possibility(empty) == 0.0

    def test_mask_shape_mismatch(self, table_im):
        with pytest.raises(ValueError):
            table_im.possibility(LatticeMask(np.ones((2, 2), dtype=bool)))

    def test_confidence_mask(self, table_im):
        mask = table_im.confidence_set(0.05)
        ax0, ax1 = table_im.contour.axes
        i = int(np.argmin(np.abs(ax0 - 0.56)))
        j = int(np.argmin(np.abs(ax1 - 0.32)))
        assert mask.mask[i, j]

    def test_diagonal_band_possibility(self, table_im):
        ax0, ax1 = table_im.contour.axes
        t0, t1 = np.meshgrid(ax0, ax1, indexing="ij")
        band = LatticeMask(np.abs(t0 - t1) <= 0.02)
        got = table_im.possibility(band)
        assert 0.15 < got < 0.35


def test_golden_max_finds_peak():
    f = lambda x: -(x - 0.3) ** 2
    assert golden_max(f, 0.0, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert golden_max(f, 0.5, 1.0) == pytest.approx(f(0.5), abs=1e-9)
