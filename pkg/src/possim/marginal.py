"""Extension-principle marginalization of a joint IM to a scalar feature.

For a feature ``phi = f(theta)`` the marginal contour is

    ``pi^f(phi) = sup{ pi(theta) : f(theta) = phi }``

computed by parameterizing the level set of ``f`` (a line segment in the
unit square for the difference feature, a ray segment for relative risk),
maximizing the joint contour along a dense 1-D sub-grid, and polishing
with golden-section refinement.  The marginal measure pair is then just
the usual possibility calculus over phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from possim.contour import Contour, IMPair, golden_max
from possim.errors import CapabilityError
from possim.models import TwoByTwoModel

__all__ = [
    "Feature",
    "difference_feature",
    "relative_risk_feature",
    "custom_feature",
    "marginal_contour",
    "marginal_contour_grid",
    "marginal_im",
    "feature_se",
    "display_phi_grid",
]

SUB_GRID_POINTS = 2001
_T_EDGE = 1e-12


@dataclass(frozen=True)
class Feature:
    """A scalar feature of the 2x2-table parameter ``theta = (theta0, theta1)``.

    ``level_set(phi)`` returns ``(t_lo, t_hi, param)`` with ``param(t)``
    mapping the 1-D coordinate to points of ``{theta: f(theta) = phi}``.
    """

    name: str
    func: object  # vectorized (theta0, theta1) -> phi
    range: tuple
    level_set: object  # phi -> (t_lo, t_hi, param)

    def contains(self, phi: float) -> bool:
        return self.range[0] <= phi <= self.range[1]


def difference_feature() -> Feature:
    """phi = theta0 - theta1 on [-1, 1]."""

    def level_set(phi):
        t_lo = max(0.0, -phi)
        t_hi = min(1.0, 1.0 - phi)

        def param(t):
            t = np.asarray(t, dtype=float)
            return t + phi, t

        return t_lo, t_hi, param

    return Feature(
        name="difference",
        func=lambda t0, t1: np.asarray(t0, float) - np.asarray(t1, float),
        range=(-1.0, 1.0),
        level_set=level_set,
    )


def relative_risk_feature() -> Feature:
    """phi = theta0 / theta1 on [0, inf); theta1 = 0 is excluded by a limit
    convention (the ratio is undefined there)."""

    def level_set(phi):
        if phi < 0:
            raise ValueError("relative risk is nonnegative")
        t_hi = 1.0 if phi == 0.0 else min(1.0, 1.0 / phi)

        def param(t):
            t = np.asarray(t, dtype=float)
            return phi * t, t

        return _T_EDGE, t_hi, param

    return Feature(
        name="relative-risk",
        func=lambda t0, t1: np.asarray(t0, float) / np.asarray(t1, float),
        range=(0.0, math.inf),
        level_set=level_set,
    )


def custom_feature(name, func, range_, level_set) -> Feature:
    """A user-supplied scalar feature with an explicit level-set
    parameterization."""
    return Feature(name=name, func=func, range=tuple(range_), level_set=level_set)


def _feature_by_name(name: str) -> Feature:
    if name == "difference":
        return difference_feature()
    if name == "relative-risk":
        return relative_risk_feature()
    raise ValueError(f"unknown feature {name!r}")


def marginal_contour(im: IMPair, feat: Feature, phi: float,
                     sub_points: int = SUB_GRID_POINTS) -> float:
    """sup of the joint contour over the level set {theta: f(theta) = phi}."""
    if not feat.contains(phi):
        raise ValueError(f"phi={phi} lies outside the feature range {feat.range}")
    joint = im.contour
    if joint.ndim != 2 or joint.exact_eval is None:
        raise CapabilityError(
            "marginalization needs a 2-D joint contour with an exact evaluator"
        )
    t_lo, t_hi, param = feat.level_set(phi)
    if t_lo > t_hi:
        return 0.0
    if t_hi - t_lo < 1e-15:
        ts = np.array([t_lo])
    else:
        ts = np.linspace(t_lo, t_hi, sub_points)
    # the MLE's own coordinate is always a candidate so that the marginal
    # peaks at exactly 1 at phi = f(theta_hat)
    t_mle = joint.mle_point[1]
    if t_lo <= t_mle <= t_hi:
        ts = np.unique(np.append(ts, t_mle))
    vals = joint.exact_eval(*param(ts))
    k = int(np.argmax(vals))
    best = float(vals[k])

    def g(t):
        v0, v1 = param(t)
        return float(joint.exact_eval(np.atleast_1d(v0), np.atleast_1d(v1))[0])

    lo = ts[max(k - 1, 0)]
    hi = ts[min(k + 1, ts.shape[0] - 1)]
    if lo < hi:
        best = max(best, golden_max(g, lo, hi))
    return min(best, 1.0)


def marginal_contour_grid(im: IMPair, feat: Feature, phis,
                          sub_points: int = SUB_GRID_POINTS) -> np.ndarray:
    return np.array(
        [marginal_contour(im, feat, float(p), sub_points) for p in np.asarray(phis)]
    )


def feature_se(model: TwoByTwoModel, data, feat: Feature) -> float:
    """Delta-method standard error of the feature at the MLE."""
    mle = model.mle(data)
    n0, n1 = model.row_totals
    se0 = math.sqrt(mle[0] * (1.0 - mle[0]) / n0)
    se1 = math.sqrt(mle[1] * (1.0 - mle[1]) / n1)
    if feat.name == "difference":
        return math.sqrt(se0**2 + se1**2)
    if feat.name == "relative-risk":
        if mle[0] == 0.0 or mle[1] == 0.0:
            raise CapabilityError(
                "relative-risk delta-method scale undefined at a boundary MLE"
            )
        f_hat = mle[0] / mle[1]
        return f_hat * math.sqrt((se0 / mle[0]) ** 2 + (se1 / mle[1]) ** 2)
    raise ValueError(f"no delta-method rule for feature {feat.name!r}")


def _full_phi_grid(im: IMPair, feat: Feature, model, data, n_points: int):
    """Grid over the full attainable range (relative risk capped at a
    generous upper bound so set queries around the peak stay on-grid)."""
    mle = model.mle(data)
    f_hat = float(feat.func(mle[0], mle[1]))
    lo, hi = feat.range
    if math.isinf(hi):
        hi = max(8.0, f_hat + 8.0 * feature_se(model, data, feat))
    if math.isinf(lo):
        lo = min(-8.0, f_hat - 8.0 * feature_se(model, data, feat))
    grid = np.linspace(lo, hi, n_points)
    if lo <= f_hat <= hi:
        grid = np.unique(np.append(grid, f_hat))
    return grid, f_hat


def display_phi_grid(im: IMPair, feat: Feature, model, data,
                     n_points: int = SUB_GRID_POINTS) -> np.ndarray:
    """Display grid: the attainable range intersected with the MLE feature
    value +- 6 delta-method standard errors."""
    mle = model.mle(data)
    f_hat = float(feat.func(mle[0], mle[1]))
    se = feature_se(model, data, feat)
    lo = max(feat.range[0], f_hat - 6.0 * se)
    hi = min(feat.range[1], f_hat + 6.0 * se)
    grid = np.linspace(lo, hi, n_points)
    return np.unique(np.append(grid, f_hat))


def marginal_im(im: IMPair, feat: Feature, model, data, phi_grid=None,
                n_points: int = 501,
                sub_points: int = SUB_GRID_POINTS) -> IMPair:
    """Marginal IM for the feature: contour over a phi grid plus an exact
    pointwise evaluator, supporting all possibility-core set queries."""
    if phi_grid is None:
        phi_grid, f_hat = _full_phi_grid(im, feat, model, data, n_points)
    else:
        mle = model.mle(data)
        f_hat = float(feat.func(mle[0], mle[1]))
        phi_grid = np.unique(np.append(np.asarray(phi_grid, dtype=float), f_hat))
    values = marginal_contour_grid(im, feat, phi_grid, sub_points)
    k = int(np.argmin(np.abs(phi_grid - f_hat)))
    values = values.copy()
    values[k] = 1.0

    def exact(phi):
        arr = np.atleast_1d(np.asarray(phi, dtype=float))
        out = np.array(
            [
                marginal_contour(im, feat, float(p), sub_points)
                if feat.contains(float(p)) and not math.isinf(p)
                else 0.0
                for p in arr
            ]
        )
        return out if np.ndim(phi) else float(out[0])

    contour = Contour(phi_grid, values, float(phi_grid[k]), exact_eval=exact)
    return IMPair(contour, feat.range)
