"""Kernel backends: correctness oracles and compiled/NumPy parity."""

import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.stats import binom as binom_dist

from possim import _backend, _kernels_py

try:
    from possim import _kernels_c
except ImportError:  # pragma: no cover
    _kernels_c = None

BACKENDS = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])
needs_ext = pytest.mark.skipif(_kernels_c is None, reason="extension not built")


def _binom_contour_oracle(theta, n, y, tol=1e-12):
    """Plain enumeration written against scipy, independent of the kernels."""
    ys = np.arange(n + 1)
    out = np.empty(len(theta))
    for i, t in enumerate(theta):
        logf = binom_dist.logpmf(ys, n, t) - (
            binom_dist.logpmf(ys, n, np.where(ys == 0, 0.0, ys / n))
        )
        # logpmf ratio removes the binomial coefficient implicitly
        r = np.exp(logf)
        robs = r[y]
        out[i] = binom_dist.pmf(ys, n, t)[r <= robs + tol].sum()
    return np.clip(out, 0.0, 1.0)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.split(".")[-1])
class TestBinomContour:
    def test_matches_scipy_oracle(self, impl):
        theta = np.linspace(0.01, 0.99, 197)
        got = impl.binom_contour(theta, 20, 8)
        want = _binom_contour_oracle(theta, 20, 8)
        assert np.max(np.abs(got - want)) < 1e-12

    def test_peak_is_one(self, impl):
        assert impl.binom_contour(np.array([0.4]), 20, 8)[0] == 1.0

    def test_boundary_thetas(self, impl):
        vals = impl.binom_contour(np.array([0.0, 1.0]), 20, 8)
        assert vals.tolist() == [0.0, 0.0]
        vals0 = impl.binom_contour(np.array([0.0]), 20, 0)
        assert vals0[0] == 1.0


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.split(".")[-1])
class TestTableContour:
    def test_matches_direct_enumeration(self, impl):
        rng = np.random.default_rng(1)
        t0 = rng.uniform(0.05, 0.95, 31)
        t1 = rng.uniform(0.05, 0.95, 31)
        got = impl.table_contour(t0, t1, 25, 25, 14, 8)
        ys0 = np.arange(26)
        ys1 = np.arange(26)

        def rel(y, n, t):
            return binom_dist.logpmf(y, n, t) - binom_dist.logpmf(
                y, n, np.where(y == 0, 0.0, y / n)
            )

        for k in range(31):
            lr = rel(ys0, 25, t0[k])[:, None] + rel(ys1, 25, t1[k])[None, :]
            lro = rel(np.array([14]), 25, t0[k]) + rel(np.array([8]), 25, t1[k])
            pmf = (
                binom_dist.pmf(ys0, 25, t0[k])[:, None]
                * binom_dist.pmf(ys1, 25, t1[k])[None, :]
            )
            want = pmf[np.exp(lr) <= np.exp(lro) + 1e-12].sum()
            assert got[k] == pytest.approx(min(want, 1.0), abs=1e-12)

    def test_peak_is_one(self, impl):
        assert impl.table_contour([0.56], [0.32], 25, 25, 14, 8)[0] == 1.0


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.split(".")[-1])
class TestCorrKernels:
    def _random_suffstats(self, m=500, n=15, seed=2):
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((m, n, 2))
        return (
            (z[:, :, 0] ** 2).sum(1),
            (z[:, :, 0] * z[:, :, 1]).sum(1),
            (z[:, :, 1] ** 2).sum(1),
        )

    def test_mle_matches_polyroot_oracle(self, impl):
        n = 15
        s11, s12, s22 = self._random_suffstats(n=n)
        got = impl.corr_mle(s11, s12, s22, n)

        def ll(i, r):
            return -0.5 * n * np.log1p(-r * r) - (
                s11[i] - 2 * r * s12[i] + s22[i]
            ) / (2 * (1 - r * r))

        for i in range(len(s12)):
            roots = np.roots([n, -s12[i], s11[i] + s22[i] - n, -s12[i]])
            real = roots[np.abs(roots.imag) < 1e-9].real
            real = np.clip(real[np.abs(real) < 1], -1 + 1e-12, 1 - 1e-12)
            best = real[np.argmax([ll(i, r) for r in real])]
            assert got[i] == pytest.approx(best, abs=1e-9)

    def test_mle_is_stationary_and_dominant(self, impl):
        n = 8
        s11, s12, s22 = self._random_suffstats(m=200, n=n, seed=5)
        got = impl.corr_mle(s11, s12, s22, n)
        grid = np.linspace(-1 + 1e-6, 1 - 1e-6, 4001)
        for i in range(0, 200, 7):
            ll_grid = -0.5 * n * np.log1p(-grid * grid) - (
                s11[i] - 2 * grid * s12[i] + s22[i]
            ) / (2 * (1 - grid * grid))
            ll_hat = -0.5 * n * np.log1p(-got[i] ** 2) - (
                s11[i] - 2 * got[i] * s12[i] + s22[i]
            ) / (2 * (1 - got[i] ** 2))
            assert ll_hat >= ll_grid.max() - 1e-7

    def test_logrel_nonpositive(self, impl):
        s11, s12, s22 = self._random_suffstats()
        lr = impl.corr_logrel(s11, s12, s22, 15, 0.3)
        assert np.all(lr <= 1e-10)

    def test_contour_estimate_at_extremes(self, impl):
        s11, s12, s22 = self._random_suffstats(m=200)
        # logrel_obs = 0 counts every replicate (R <= 1 always)
        est = impl.corr_contour_crn(s11, s12, s22, np.array([0.2]), np.array([0.0]), 15)
        assert est[0] == 1.0


@needs_ext
class TestBackendParity:
    def test_binom(self):
        theta = np.linspace(1e-9, 1 - 1e-9, 1001)
        a = _kernels_py.binom_contour(theta, 20, 8)
        b = _kernels_c.binom_contour(theta, 20, 8)
        assert np.max(np.abs(a - b)) < 1e-13

    def test_table(self):
        rng = np.random.default_rng(3)
        t0 = rng.uniform(0.01, 0.99, 500)
        t1 = rng.uniform(0.01, 0.99, 500)
        a = _kernels_py.table_contour(t0, t1, 25, 25, 14, 8)
        b = _kernels_c.table_contour(t0, t1, 25, 25, 14, 8)
        assert np.max(np.abs(a - b)) < 1e-13

    def test_corr(self):
        rng = np.random.default_rng(4)
        z = rng.standard_normal((3000, 15, 2))
        b11 = (z[:, :, 0] ** 2).sum(1)
        b12 = (z[:, :, 0] * z[:, :, 1]).sum(1)
        b22 = (z[:, :, 1] ** 2).sum(1)
        a = _kernels_py.corr_mle(b11, b12, b22, 15)
        b = _kernels_c.corr_mle(b11, b12, b22, 15)
        assert np.max(np.abs(a - b)) < 1e-10
        grid = np.linspace(-0.9, 0.9, 19)
        obs = -np.abs(grid) - 0.5
        ea = _kernels_py.corr_contour_crn(b11, b12, b22, grid, obs, 15)
        eb = _kernels_c.corr_contour_crn(b11, b12, b22, grid, obs, 15)
        assert np.max(np.abs(ea - eb)) <= 2.0 / 3000


def test_backend_selection_env():
    env = dict(os.environ, POSSIM_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import possim; print(possim.backend_name())"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "python"


def test_backend_default_name():
    assert _backend.backend_name() in ("compiled", "python")
