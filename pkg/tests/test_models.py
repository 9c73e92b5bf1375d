"""Model-layer tests: likelihoods, MLEs, samplers, CSV input."""

import math

import numpy as np
import pytest
from scipy.stats import binom as binom_dist
from scipy.stats import norm

from possim.errors import DataFormatError
from possim.models import (
    BinomialData,
    BinomialModel,
    BivariateCorrelationModel,
    CorrelationData,
    NormalData,
    NormalMeanModel,
    TableData,
    TwoByTwoModel,
    read_binomial_csv,
    read_correlation_csv,
    read_normal_csv,
    read_table_csv,
    standardize_pairs,
)


class TestLogLikelihood:
    def test_binomial_matches_scipy(self, binom_model):
        # independent oracle: scipy's binomial log-pmf
        want = binom_dist.logpmf(8, 20, 0.4)
        got = binom_model.log_likelihood(BinomialData(8), 0.4)
        assert got == pytest.approx(want, abs=1e-12)

    def test_normal_maximal_at_ybar(self, normal_model):
        d = NormalData(152.0)
        at_mle = normal_model.log_likelihood(d, 152.0)
        for t in (150.0, 151.5, 152.5, 154.0):
            assert normal_model.log_likelihood(d, t) < at_mle

    def test_normal_matches_scipy(self, normal_model):
        d = NormalData(152.0)
        want = norm.logpdf(152.0, loc=150.0, scale=1.0)
        assert normal_model.log_likelihood(d, 150.0) == pytest.approx(want, abs=1e-12)

    def test_table_is_product_of_rows(self):
        model = TwoByTwoModel((25, 25))
        data = TableData(11, 14, 17, 8)
        want = binom_dist.logpmf(14, 25, 0.56) + binom_dist.logpmf(8, 25, 0.32)
        assert model.log_likelihood(data, (0.56, 0.32)) == pytest.approx(want, abs=1e-12)

    def test_table_mle_is_dense_grid_argmax(self):
        # oracle: exhaustive grid argmax of the product-binomial likelihood
        model = TwoByTwoModel((25, 25))
        data = TableData(11, 14, 17, 8)
        grid = np.linspace(0.005, 0.995, 199)
        ll = (
            binom_dist.logpmf(14, 25, grid)[:, None]
            + binom_dist.logpmf(8, 25, grid)[None, :]
        )
        i, j = np.unravel_index(np.argmax(ll), ll.shape)
        mle = model.mle(data)
        assert mle == (14 / 25, 8 / 25)
        assert abs(grid[i] - mle[0]) < 0.01 and abs(grid[j] - mle[1]) < 0.01
        assert model.log_likelihood(data, mle) >= ll.max() - 1e-12

    def test_correlation_matches_formula(self, law_school):
        model, data = law_school
        rho = 0.5
        n = model.n_pairs
        want = (
            -n * math.log(2 * math.pi)
            - 0.5 * n * math.log(1 - rho**2)
            - (data.s11 - 2 * rho * data.s12 + data.s22) / (2 * (1 - rho**2))
        )
        assert model.log_likelihood(data, rho) == pytest.approx(want, rel=1e-12)

    def test_correlation_rejects_unit_rho(self, law_school):
        model, data = law_school
        with pytest.raises(ValueError):
            model.log_likelihood(data, 1.0)

    def test_correlation_finite_near_edge(self, law_school):
        model, data = law_school
        assert math.isfinite(model.log_likelihood(data, 1.0 - 1e-9))
        assert math.isfinite(model.log_likelihood(data, -1.0 + 1e-9))


class TestMLE:
    def test_binomial_closed_form(self, binom_model):
        assert binom_model.mle(BinomialData(8)) == 0.4

    def test_binomial_boundary(self, binom_model):
        assert binom_model.mle(BinomialData(0)) == 0.0
        assert binom_model.mle(BinomialData(20)) == 1.0

    def test_law_school_mle(self, law_school):
        model, data = law_school
        assert data.sample_correlation == pytest.approx(0.776, abs=1e-3)
        assert model.mle(data) == pytest.approx(0.789, abs=1e-3)

    def test_mle_dominates_grid(self, law_school):
        model, data = law_school
        mle = model.mle(data)
        best = model.log_likelihood(data, mle)
        for t in np.linspace(-0.999, 0.999, 501):
            assert model.log_likelihood(data, t) <= best + 1e-9

    def test_mle_on_simulated_data_matches_dense_search(self):
        model = BivariateCorrelationModel(10)
        for seed in range(5):
            data = model.sample(0.4, seed)
            mle = model.mle(data)
            grid = np.linspace(-1 + 1e-6, 1 - 1e-6, 20001)
            vals = [model.log_likelihood(data, t) for t in grid]
            assert model.log_likelihood(data, mle) >= max(vals) - 1e-9


class TestSampling:
    def test_reproducible(self):
        model = BivariateCorrelationModel(15)
        a = model.sample(0.3, seed=42)
        b = model.sample(0.3, seed=42)
        assert np.array_equal(a.pairs, b.pairs)
        c = model.sample(0.3, seed=43)
        assert not np.array_equal(a.pairs, c.pairs)

    def test_binomial_degenerate_thetas(self, binom_model):
        assert binom_model.sample(0.0, seed=1).y == 0
        assert binom_model.sample(1.0, seed=1).y == 20

    def test_normal_clt_bound(self, normal_model):
        draws = normal_model.sample_array(150.0, seed=5, size=1_000_000)
        # 3 sd / sqrt(M) = 0.003; the stated bound leaves headroom
        assert abs(draws.mean() - 150.0) <= 0.004

    def test_correlation_sampler_hits_target_correlation(self):
        model = BivariateCorrelationModel(4)
        pairs = model.sample_array(0.6, seed=3, size=200_000).reshape(-1, 2)
        r = np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1]
        assert r == pytest.approx(0.6, abs=0.01)

    def test_table_sampler_respects_totals(self):
        model = TwoByTwoModel((25, 25))
        d = model.sample((0.56, 0.32), seed=7)
        assert d.row_totals == (25, 25)


class TestStandardization:
    def test_sample_sd_denominator(self):
        raw = np.array([[1.0, 2.0], [3.0, 5.0], [7.0, 11.0], [2.0, 3.0]])
        std = standardize_pairs(raw)
        assert std.mean(axis=0) == pytest.approx([0.0, 0.0], abs=1e-12)
        assert std.std(axis=0, ddof=1) == pytest.approx([1.0, 1.0], abs=1e-12)

    def test_correlation_invariant(self):
        rng = np.random.default_rng(0)
        raw = rng.normal(size=(30, 2)) * [10.0, 0.1] + [100.0, -5.0]
        r_raw = np.corrcoef(raw[:, 0], raw[:, 1])[0, 1]
        data = CorrelationData.from_raw(raw)
        assert data.sample_correlation == pytest.approx(r_raw, abs=1e-12)

    def test_degenerate_column_rejected(self):
        with pytest.raises(DataFormatError):
            standardize_pairs(np.array([[1.0, 2.0], [1.0, 3.0]]))


class TestCSV:
    def test_normal_roundtrip(self, tmp_path):
        p = tmp_path / "n.csv"
        p.write_text("ybar\n151.5\n")
        assert read_normal_csv(p).ybar == 151.5

    def test_binomial_roundtrip(self, tmp_path):
        p = tmp_path / "b.csv"
        p.write_text("y,n\n8,20\n")
        model, data = read_binomial_csv(p)
        assert (model.n_trials, data.y) == (20, 8)

    def test_binomial_inconsistent(self, tmp_path):
        p = tmp_path / "b.csv"
        p.write_text("y,n\n21,20\n")
        with pytest.raises(DataFormatError):
            read_binomial_csv(p)

    def test_table_fixture(self, clinical):
        model, data = clinical
        assert (data.y00, data.y01, data.y10, data.y11) == (11, 14, 17, 8)
        assert model.row_totals == (25, 25)
        assert model.mle(data) == (0.56, 0.32)

    def test_correlation_fixture_standardized(self, law_school):
        model, data = law_school
        assert model.n_pairs == 15
        assert data.pairs[:, 0].mean() == pytest.approx(0.0, abs=1e-12)
        assert data.pairs[:, 0].std(ddof=1) == pytest.approx(1.0, abs=1e-12)

    def test_malformed_rejected(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("nope\n1\n")
        with pytest.raises(DataFormatError):
            read_normal_csv(p)
        with pytest.raises(DataFormatError):
            read_table_csv(p)

    def test_correlation_header(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("v1,v2\n1,2\nx,4\n")
        with pytest.raises(DataFormatError):
            read_correlation_csv(p)


def test_parameter_space_membership():
    m = BinomialModel(10)
    assert m.param_space.contains(0.5)
    assert not m.param_space.contains(1.5)
    t = TwoByTwoModel((5, 5))
    assert t.param_space.contains((0.2, 0.9))
    assert not t.param_space.contains((0.2, 1.1))


def test_model_validation_errors():
    with pytest.raises(ValueError):
        NormalMeanModel(0.0)
    with pytest.raises(ValueError):
        BinomialModel(0)
    with pytest.raises(ValueError):
        BivariateCorrelationModel(1)
    with pytest.raises(ValueError):
        TwoByTwoModel((0, 5))
    with pytest.raises(DataFormatError):
        BinomialModel(5).validate(BinomialData(9))
