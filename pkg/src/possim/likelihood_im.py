"""Likelihood-based IM construction: relative likelihood, calibration, grids.

The construction turns the relative likelihood
``R(y, theta) = L_y(theta) / L_y(theta_hat)`` into a possibility contour

    ``pi_y(theta) = P_theta{ R(Y, theta) <= R(y, theta) }``

by computing the probability exactly where the model allows it (normal:
closed form; binomial and 2x2 table: finite enumeration) and by Monte
Carlo elsewhere.  MC uses common random numbers across the grid by
default: one base draw per replicate, transformed per theta, which keeps
the contour smooth in theta without raising the sample count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from possim import _backend as kernels
from possim.contour import Contour, Contour2D, IMPair
from possim.errors import CapabilityError
from possim.models import (
    BinomialModel,
    BivariateCorrelationModel,
    NormalMeanModel,
    TwoByTwoModel,
)

__all__ = [
    "CalibrationConfig",
    "relative_likelihood",
    "contour_exact",
    "contour_exact_grid",
    "contour_mc",
    "contour_mc_grid",
    "build_im",
    "default_grid",
]

TIE_TOL = 1e-12  # counts the realized y itself despite floating-point ties
DEFAULT_GRID_POINTS = 2001
DEFAULT_LATTICE_POINTS = 301


@dataclass(frozen=True)
class CalibrationConfig:
    """Monte Carlo calibration settings.

    ``common_random_numbers`` shares one base draw per replicate across
    all grid thetas (transformed per theta); switching it off gives each
    grid index its own substream keyed by (seed, grid index).
    """

    mc_samples: int = 10000
    seed: int = 0
    common_random_numbers: bool = True

    def __post_init__(self):
        if self.mc_samples < 100:
            raise ValueError("mc_samples must be at least 100")


def relative_likelihood(model, data, theta) -> float:
    """R(y, theta) = L_y(theta) / L_y(theta_hat), clamped to [0, 1]."""
    model.validate(data)
    loglik = model.log_likelihood(data, theta)
    loghat = model.log_likelihood(data, model.mle(data))
    r = math.exp(loglik - loghat) if loglik > -math.inf else 0.0
    return min(max(r, 0.0), 1.0)


def _logrel_obs_grid(model, data, thetas) -> np.ndarray:
    """log R(y, theta) of the observed data over a grid, vectorized."""
    if isinstance(model, NormalMeanModel):
        z = (data.ybar - np.asarray(thetas, dtype=float)) / model.sd
        return -0.5 * z * z
    if isinstance(model, BinomialModel):
        return _binom_logrel_obs(data.y, model.n_trials, np.asarray(thetas, float))
    if isinstance(model, BivariateCorrelationModel):
        th = np.asarray(thetas, dtype=float)
        m = th.shape[0]
        ll = kernels.corr_loglik(
            np.full(m, data.s11), np.full(m, data.s12), np.full(m, data.s22),
            model.n_pairs, th,
        )
        llhat = model.log_likelihood(data, model.mle(data))
        return ll - llhat
    if isinstance(model, TwoByTwoModel):
        t0, t1 = thetas
        n0, n1 = model.row_totals
        return _binom_logrel_obs(data.y01, n0, np.asarray(t0, float)) + _binom_logrel_obs(
            data.y11, n1, np.asarray(t1, float)
        )
    raise CapabilityError(f"unsupported model type {type(model).__name__}")


def _binom_logrel_obs(y: int, n: int, theta: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = 0.0 if y == 0 else y * np.log(theta)
        t2 = 0.0 if y == n else (n - y) * np.log1p(-theta)
        h1 = 0.0 if y == 0 else y * math.log(y / n)
        h2 = 0.0 if y == n else (n - y) * math.log1p(-y / n)
    return t1 + t2 - h1 - h2


# ---------------------------------------------------------------------------
# exact evaluation
# ---------------------------------------------------------------------------


def has_exact_contour(model) -> bool:
    return isinstance(model, (NormalMeanModel, BinomialModel, TwoByTwoModel))


def contour_exact_grid(model, data, thetas) -> np.ndarray:
    """Exact contour over a grid; raises CapabilityError if unsupported.

    Normal: ``1 - |2 Phi(|ybar - theta| / sd) - 1| = 2 Phi(-|ybar - theta| / sd)``;
    binomial and table: enumeration over the full outcome space.
    """
    model.validate(data)
    if isinstance(model, NormalMeanModel):
        th = np.asarray(thetas, dtype=float)
        with np.errstate(invalid="ignore"):
            vals = 2.0 * ndtr(-np.abs(data.ybar - th) / model.sd)
        return np.clip(vals, 0.0, 1.0)
    if isinstance(model, BinomialModel):
        return kernels.binom_contour(
            np.asarray(thetas, dtype=float), model.n_trials, data.y, TIE_TOL
        )
    if isinstance(model, TwoByTwoModel):
        t0, t1 = thetas
        n0, n1 = model.row_totals
        return kernels.table_contour(
            np.asarray(t0, float), np.asarray(t1, float), n0, n1, data.y01, data.y11,
            TIE_TOL,
        )
    raise CapabilityError(
        f"{type(model).__name__} has no exact contour evaluator; use contour_mc"
    )


def contour_exact(model, data, theta) -> float:
    """Exact contour at a single parameter point."""
    if isinstance(model, TwoByTwoModel):
        vals = contour_exact_grid(model, data, ([theta[0]], [theta[1]]))
    else:
        vals = contour_exact_grid(model, data, [theta])
    return float(vals[0])


# ---------------------------------------------------------------------------
# Monte Carlo evaluation
# ---------------------------------------------------------------------------


def contour_mc_grid(model, data, thetas, cfg: CalibrationConfig):
    """Monte Carlo contour over a grid: (estimates, standard errors).

    ``estimate = mean 1{R(Y_m, theta) <= R(y, theta) + tol}`` with the
    replicates Y_m drawn from P_theta; ``se = sqrt(p(1-p)/M)``.
    Deterministic given the config.
    """
    model.validate(data)
    m = cfg.mc_samples
    logrel_obs = _logrel_obs_grid(model, data, thetas)
    with np.errstate(over="ignore"):
        robs = np.exp(logrel_obs)

    if isinstance(model, BivariateCorrelationModel) and cfg.common_random_numbers:
        # fused kernel: suffstat rotation + per-replicate MLE + indicator
        b11, b12, b22 = model._mc_base(np.random.default_rng((cfg.seed,)), m)
        est = kernels.corr_contour_crn(
            b11, b12, b22, np.asarray(thetas, float), logrel_obs, model.n_pairs, TIE_TOL
        )
    else:
        if isinstance(model, TwoByTwoModel):
            theta_list = list(zip(*thetas))
        else:
            theta_list = list(np.asarray(thetas, float))
        est = np.empty(len(theta_list))
        if cfg.common_random_numbers:
            base = model._mc_base(np.random.default_rng((cfg.seed,)), m)
        for i, th in enumerate(theta_list):
            if not cfg.common_random_numbers:
                base = model._mc_base(np.random.default_rng((cfg.seed, i)), m)
            logrel = model._mc_logrel(base, th)
            with np.errstate(over="ignore"):
                est[i] = np.mean(np.exp(logrel) <= robs[i] + TIE_TOL)
    est = np.clip(est, 0.0, 1.0)
    se = np.sqrt(est * (1.0 - est) / m)
    return est, se


def contour_mc(model, data, theta, cfg: CalibrationConfig):
    """Monte Carlo contour at one point: (estimate, standard error)."""
    if isinstance(model, TwoByTwoModel):
        est, se = contour_mc_grid(model, data, ([theta[0]], [theta[1]]), cfg)
    else:
        est, se = contour_mc_grid(model, data, [theta], cfg)
    return float(est[0]), float(se[0])


# ---------------------------------------------------------------------------
# IM assembly
# ---------------------------------------------------------------------------


def default_grid(model, data, n_points: int = DEFAULT_GRID_POINTS):
    """Default evaluation grid: n_points spanning the MLE +- 6 standard
    errors, or the natural bounded space, with the MLE always inserted."""
    bounds = model.grid_bounds(data)
    if isinstance(model, TwoByTwoModel):
        mle = model.mle(data)
        ax0 = _axis(bounds[0], mle[0], n_points)
        ax1 = _axis(bounds[1], mle[1], n_points)
        return ax0, ax1
    return _axis(bounds, model.mle(data), n_points)


def _axis(bounds, mle, n_points):
    lo, hi = bounds
    ax = np.linspace(lo, hi, n_points)
    if lo <= mle <= hi:
        ax = np.unique(np.concatenate([ax, [mle]]))
    return ax


def build_im(model, data, cfg: CalibrationConfig | None = None, grid=None,
             n_points: int | None = None, method: str = "auto") -> IMPair:
    """Construct the likelihood-based IM for a model and observed data.

    The contour is evaluated over the default grid (exact evaluator
    preferred, Monte Carlo otherwise), the MLE is inserted into the grid,
    and the peak value is pinned to exactly 1.
    """
    model.validate(data)
    if method not in ("auto", "exact", "mc"):
        raise ValueError("method must be 'auto', 'exact' or 'mc'")
    use_exact = has_exact_contour(model) if method == "auto" else method == "exact"
    if use_exact and not has_exact_contour(model):
        raise CapabilityError(
            f"exact contour evaluation requested but {type(model).__name__} "
            "supports only Monte Carlo"
        )
    cfg = cfg or CalibrationConfig()

    if isinstance(model, TwoByTwoModel):
        if grid is None:
            grid = default_grid(model, data, n_points or DEFAULT_LATTICE_POINTS)
        mle = model.mle(data)
        ax0 = np.unique(np.append(np.asarray(grid[0], float), mle[0]))
        ax1 = np.unique(np.append(np.asarray(grid[1], float), mle[1]))
        tt0, tt1 = np.meshgrid(ax0, ax1, indexing="ij")
        pts = (tt0.ravel(), tt1.ravel())
        if use_exact:
            vals = contour_exact_grid(model, data, pts)
            exact_eval = _table_exact_eval(model, data)
        else:
            vals, _ = contour_mc_grid(model, data, pts, cfg)
            exact_eval = None
        values = vals.reshape(ax0.shape[0], ax1.shape[0])
        i = int(np.argmin(np.abs(ax0 - mle[0])))
        j = int(np.argmin(np.abs(ax1 - mle[1])))
        values = values.copy()
        values[i, j] = 1.0
        contour = Contour2D((ax0, ax1), values, mle, exact_eval)
        space = tuple(model.param_space.bounds)
        return IMPair(contour, space)

    mle = model.mle(data)
    if grid is None:
        grid = default_grid(model, data, n_points or DEFAULT_GRID_POINTS)
    grid = np.unique(np.append(np.asarray(grid, dtype=float), mle))
    if use_exact:
        vals = contour_exact_grid(model, data, grid)
        exact_eval = _scalar_exact_eval(model, data)
    else:
        vals, _ = contour_mc_grid(model, data, grid, cfg)
        exact_eval = None
    k = int(np.argmin(np.abs(grid - mle)))
    vals = vals.copy()
    vals[k] = 1.0
    contour = Contour(grid, vals, float(grid[k]), exact_eval)
    space = model.param_space.bounds[0]
    return IMPair(contour, space)


def _scalar_exact_eval(model, data):
    def evaluate(theta):
        arr = np.atleast_1d(np.asarray(theta, dtype=float))
        vals = contour_exact_grid(model, data, arr)
        return vals if np.ndim(theta) else float(vals[0])

    return evaluate


def _table_exact_eval(model, data):
    def evaluate(theta0, theta1):
        return contour_exact_grid(
            model, data, (np.atleast_1d(theta0), np.atleast_1d(theta1))
        )

    return evaluate
