"""Severity curves for one-sided normal testing and probing comparisons.

Severity measures how well a claim has been probed: the probability of a
worse fit with the data were the claim false.  For the normal-mean
family it reduces to one minus a one-sided p-value:

* Case 1 (null rejected, probing ``{Theta > t}``):
  ``sev(t) = 1 - pval_left(t) = Phi((ybar - t)/sd)`` — nonincreasing in t,
  bolder claims get less support;
* Case 2 (null retained, probing ``{Theta <= t}``):
  ``sev(t) = 1 - pval_right(t)`` — nondecreasing, less-bold claims get
  more support.

``compare_probing`` lines severity up against the necessity measures of
the test-based IM (identical in Case 1, necessity identically zero in
Case 2) and of the holistic likelihood-based IM.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from possim.contour import IMPair
from possim.hypotheses import IntervalSet
from possim.likelihood_im import build_im
from possim.models import NormalData, NormalMeanModel
from possim.pvalues import OneSidedPValueFunction, pval_left, pval_right, test_im

__all__ = [
    "SeverityCurve",
    "severity_case1",
    "severity_case2",
    "holistic_probe",
    "ProbingReport",
    "compare_probing",
]


def severity_case1(model: NormalMeanModel, ybar: float, theta):
    """Severity of the claim {Theta > theta} after rejecting the null."""
    return ndtr((ybar - np.asarray(theta, dtype=float)) / model.sd)


def severity_case2(model: NormalMeanModel, ybar: float, theta):
    """Severity of the claim {Theta <= theta} after retaining the null."""
    return 1.0 - ndtr((ybar - np.asarray(theta, dtype=float)) / model.sd)


@dataclass(frozen=True)
class SeverityCurve:
    """Severity values over a theta grid with the case they belong to."""

    case_tag: str  # 'case1-reject' | 'case2-not-reject'
    theta0: float
    theta_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.case_tag not in ("case1-reject", "case2-not-reject"):
            raise ValueError("case_tag must be 'case1-reject' or 'case2-not-reject'")
        grid = np.asarray(self.theta_grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if grid.shape != vals.shape:
            raise ValueError("theta_grid and values must have matching shapes")
        d = np.diff(vals)
        if self.case_tag == "case1-reject" and np.any(d > 1e-12):
            raise ValueError("case-1 severity must be nonincreasing in theta")
        if self.case_tag == "case2-not-reject" and np.any(d < -1e-12):
            raise ValueError("case-2 severity must be nondecreasing in theta")
        object.__setattr__(self, "theta_grid", grid)
        object.__setattr__(self, "values", vals)


def holistic_probe(im: IMPair, direction: str, theta_grid) -> np.ndarray:
    """Necessity curve of the likelihood-based IM.

    ``direction='gt'`` gives ``theta -> necessity({Theta > theta})``;
    ``'leq'`` gives ``theta -> necessity({Theta <= theta})``.
    """
    if direction not in ("gt", "leq"):
        raise ValueError("direction must be 'gt' or 'leq'")
    lo, hi = im.space
    out = np.empty(len(theta_grid))
    for i, t in enumerate(np.asarray(theta_grid, dtype=float)):
        if direction == "gt":
            h = IntervalSet.interval(t, hi, lo_open=True)
        else:
            h = IntervalSet.interval(lo, t)
        out[i] = im.necessity(h)
    return out


@dataclass
class ProbingReport:
    """Per-theta comparison of severity and IM support measures."""

    case: str  # 'case1' | 'case2'
    theta0: float
    alpha: float
    ybar: float
    theta_grid: np.ndarray
    severity: np.ndarray
    test_im_necessity: np.ndarray
    holistic_necessity: np.ndarray
    probed: str = field(default="")  # textual form of the probed hypotheses

    def to_csv(self, fh, comment: str = ""):
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("theta,severity,test_im_necessity,holistic_necessity,case\n")
        for t, s, ti, ho in zip(
            self.theta_grid, self.severity, self.test_im_necessity,
            self.holistic_necessity,
        ):
            fh.write(f"{t:.17g},{s:.17g},{ti:.17g},{ho:.17g},{self.case}\n")


def compare_probing(model: NormalMeanModel, ybar: float, theta0: float,
                    alpha: float = 0.05, theta_grid=None,
                    n_points: int = 2001) -> ProbingReport:
    """Classify the data into Case 1/2 at the null cutoff and tabulate
    severity against the test-based and holistic IM necessity measures.

    Case 1 (p-value at theta0 <= alpha): probes ``{Theta > theta}`` where
    severity and the test-IM necessity agree exactly.  Case 2: probes
    ``{Theta <= theta}`` where the test-IM necessity is identically zero
    while severity stays positive (it dominates the support measure).
    """
    if theta_grid is None:
        theta_grid = np.linspace(ybar - 6.0 * model.sd, ybar + 6.0 * model.sd, n_points)
    theta_grid = np.asarray(theta_grid, dtype=float)
    p0 = float(pval_left(model, ybar, theta0))
    case = "case1" if p0 <= alpha else "case2"

    pv = OneSidedPValueFunction(model, ybar, "left")
    im_test = test_im(pv, grid=_cover(theta_grid, ybar, model.sd))
    im_lik = build_im(model, NormalData(ybar))

    lo, hi = -np.inf, np.inf
    sev = np.empty(theta_grid.shape[0])
    nec_test = np.empty(theta_grid.shape[0])
    nec_lik = np.empty(theta_grid.shape[0])
    for i, t in enumerate(theta_grid):
        if case == "case1":
            h = IntervalSet.interval(t, hi, lo_open=True)  # {Theta > t}
            sev[i] = severity_case1(model, ybar, t)
        else:
            h = IntervalSet.interval(lo, t)  # {Theta <= t}
            sev[i] = severity_case2(model, ybar, t)
        nec_test[i] = im_test.necessity(h)
        nec_lik[i] = im_lik.necessity(h)
    probed = "{Theta > theta}" if case == "case1" else "{Theta <= theta}"
    return ProbingReport(
        case=case,
        theta0=theta0,
        alpha=alpha,
        ybar=ybar,
        theta_grid=theta_grid,
        severity=sev,
        test_im_necessity=nec_test,
        holistic_necessity=nec_lik,
        probed=probed,
    )


def _cover(theta_grid, ybar, sd):
    """A grid that covers the requested thetas and reaches far enough for
    the p-value contour to attain 1."""
    lo = min(theta_grid[0], ybar - 6.0 * sd)
    hi = max(theta_grid[-1], ybar + 6.0 * sd)
    return np.unique(np.concatenate([theta_grid, np.linspace(lo, hi, 513)]))
