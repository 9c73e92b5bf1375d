"""Test-based IM construction: one-sided p-value functions and the IM
they induce.

For the normal-mean family, the most powerful test of ``H: Theta <= theta0``
rejects for large ``ybar - theta0``; its p-value extends to a function of
theta that is itself a possibility contour (the location-shift structure
turns a single test into a nested family, one test per half-line
hypothesis).  The induced possibility measure satisfies

    ``Pi_bar({Theta <= t}) = pval_left(t)``   and   ``Pi_bar({Theta > t}) = 1``

with the conjugate necessity ``Pi_lower({Theta > t}) = 1 - pval_left(t)``
and ``Pi_lower({Theta <= t}) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from possim.contour import Contour, IMPair
from possim.errors import CapabilityError
from possim.hypotheses import IntervalSet
from possim.likelihood_im import (
    CalibrationConfig,
    build_im,
    contour_exact_grid,
    contour_mc_grid,
    default_grid,
    has_exact_contour,
)
from possim.models import NormalMeanModel

__all__ = [
    "pval_left",
    "pval_right",
    "OneSidedPValueFunction",
    "test_im",
    "test_decision",
    "lr_test_family",
    "construction_agreement_check",
    "AgreementReport",
]


def pval_left(model: NormalMeanModel, ybar: float, theta):
    """p-value function for H: Theta <= theta, i.e. 1 - Phi((ybar - theta)/sd)."""
    return ndtr(-(ybar - np.asarray(theta, dtype=float)) / model.sd)


def pval_right(model: NormalMeanModel, ybar: float, theta):
    """p-value function for H: Theta >= theta, i.e. Phi((ybar - theta)/sd)."""
    return ndtr((ybar - np.asarray(theta, dtype=float)) / model.sd)


@dataclass(frozen=True)
class OneSidedPValueFunction:
    """A one-sided p-value function over theta for the normal-mean model.

    ``direction='left'`` corresponds to null hypotheses ``{Theta <= theta}``
    (p-value nondecreasing in theta); ``'right'`` to ``{Theta >= theta}``
    (nonincreasing).
    """

    model: NormalMeanModel
    ybar: float
    direction: str = "left"

    def __post_init__(self):
        if self.direction not in ("left", "right"):
            raise ValueError("direction must be 'left' or 'right'")

    def __call__(self, theta):
        if self.direction == "left":
            return pval_left(self.model, self.ybar, theta)
        return pval_right(self.model, self.ybar, theta)


def test_im(pv: OneSidedPValueFunction, grid=None, n_points: int = 2001) -> IMPair:
    """IM induced by a nested one-sided test family: the contour is the
    p-value function itself.

    The grid must stretch far enough for the p-value function to reach 1
    (the nestedness requirement made operational); a non-monotone or
    sup-deficient function is rejected.
    """
    if grid is None:
        lo = pv.ybar - 6.0 * pv.model.sd
        hi = pv.ybar + 6.0 * pv.model.sd
        grid = np.linspace(lo, hi, n_points)
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(pv(grid), dtype=float)
    diffs = np.diff(values)
    if pv.direction == "left" and np.any(diffs < -1e-12):
        raise ValueError("left p-value function must be nondecreasing in theta")
    if pv.direction == "right" and np.any(diffs > 1e-12):
        raise ValueError("right p-value function must be nonincreasing in theta")
    if values.max() < 1.0 - 1e-6:
        raise ValueError(
            "p-value function does not reach 1 on the grid; widen the grid "
            "(consonance requires sup = 1)"
        )
    peak = float(grid[int(np.argmax(values))])
    contour = Contour(grid, values, peak, exact_eval=pv)
    return IMPair(contour, (-np.inf, np.inf))


def test_decision(im: IMPair, hypothesis: IntervalSet, alpha: float) -> bool:
    """Level-alpha test: reject (True) iff the possibility of H is <= alpha."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return im.possibility(hypothesis) <= alpha


# ---------------------------------------------------------------------------
# agreement of the likelihood-based and test-based constructions
# ---------------------------------------------------------------------------


def lr_test_family(model, data, thetas, cfg: CalibrationConfig | None = None):
    """Decision rules of the likelihood-ratio tests of the singleton
    hypotheses {theta}, indexed by the grid.

    ``delta(i, alpha) = 1`` means "reject {theta_i} at level alpha"; the
    rule rejects when the calibrated relative likelihood falls at or
    below alpha.  Returns (delta, contour_values_used_for_calibration).
    """
    if has_exact_contour(model):
        pis = contour_exact_grid(model, data, thetas)
    else:
        pis, _ = contour_mc_grid(model, data, thetas, cfg or CalibrationConfig())

    def delta(i: int, alpha: float) -> int:
        return 1 if pis[i] <= alpha else 0

    return delta, pis


@dataclass
class AgreementReport:
    """Largest discrepancy between the two IM constructions on a grid."""

    grid: np.ndarray
    likelihood_contour: np.ndarray
    test_contour: np.ndarray
    max_abs_diff: float

    def __str__(self):
        return (
            f"construction agreement over {len(self.likelihood_contour)} grid "
            f"points: max |difference| = {self.max_abs_diff:.3e}"
        )


def construction_agreement_check(model, data, cfg: CalibrationConfig | None = None,
                                 n_points: int = 201) -> AgreementReport:
    """Check that the test-based IM built from the singleton-hypothesis
    likelihood-ratio test family reproduces the likelihood-based contour.

    The test-based contour value at theta is ``inf{alpha: delta_alpha(y) = 1}``,
    recovered here by bisection over alpha with the decision rule queried
    as a black box; the likelihood contour is computed directly.  The two
    agree by construction, so the reported discrepancy is bisection
    resolution only.
    """
    model.validate(data)
    from possim.models import TwoByTwoModel

    if isinstance(model, TwoByTwoModel):
        raise CapabilityError(
            "agreement check is implemented for scalar-parameter models"
        )
    cfg = cfg or CalibrationConfig()
    grid = default_grid(model, data, n_points)
    delta, pis = lr_test_family(model, data, grid, cfg)

    # likelihood route: the same calibration computed directly
    if has_exact_contour(model):
        lik = contour_exact_grid(model, data, grid)
    else:
        lik, _ = contour_mc_grid(model, data, grid, cfg)

    test_vals = np.empty(grid.shape[0])
    for i in range(grid.shape[0]):
        lo, hi = 0.0, 1.0
        if delta(i, 0.0) == 1:
            test_vals[i] = 0.0
            continue
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if delta(i, mid) == 1:
                hi = mid
            else:
                lo = mid
        test_vals[i] = hi
    return AgreementReport(
        grid=grid,
        likelihood_contour=lik,
        test_contour=test_vals,
        max_abs_diff=float(np.max(np.abs(lik - test_vals))),
    )
