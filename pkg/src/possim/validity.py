"""Monte Carlo audits of the calibration guarantees.

``audit_strong_validity`` checks that the contour value at the true
parameter is stochastically no smaller than uniform:

    ``P_Theta{ pi_Y(Theta) <= alpha } <= alpha``  for all alpha,

by simulating N datasets per true Theta and comparing the empirical
exceedance rate against ``alpha + 3 sqrt(alpha (1-alpha) / N)``.

``audit_uniform_validity`` simulates probing: a policy maps each dataset
to hypotheses, a replicate is *misleading* when any true hypothesis
receives possibility <= alpha or any false one receives necessity
>= 1 - alpha, and the misleading rate must obey the same bound.  The
level-set adversary policy returns H = {theta: pi_y(theta) <= alpha},
the most dangerous true-hypothesis candidate; its misleading indicator
coincides with the strong-validity indicator replicate by replicate,
which the report records for direct verification.

Replicates are vectorized over model-specific fast paths; the test suite
cross-checks these against the possibility-core query engine on
subsamples.  Substreams are keyed by (seed, theta index, purpose) so
reports are exactly reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr
from scipy.stats import binom as _binom_dist

from possim import _backend as kernels
from possim.errors import CapabilityError
from possim.likelihood_im import TIE_TOL, CalibrationConfig
from possim.models import (
    BinomialModel,
    BivariateCorrelationModel,
    NormalMeanModel,
    TwoByTwoModel,
    _binom_logrel_outcomes,
)

__all__ = [
    "ValidityCell",
    "ValidityReport",
    "pi_at_true",
    "audit_strong_validity",
    "audit_uniform_validity",
    "POLICIES",
]

DEFAULT_ALPHAS = (0.01, 0.05, 0.1, 0.25, 0.5)
POLICIES = ("level-set-adversary", "fixed-family", "random-intervals")


@dataclass(frozen=True)
class ValidityCell:
    theta: object
    alpha: float
    rate: float
    se: float
    passed: bool


@dataclass
class ValidityReport:
    model: str
    kind: str  # 'strong' or the policy name
    n_reps: int
    cells: list
    # adversary policy: per-(theta_key, alpha) pair of indicator arrays
    # (misleading_event, strong_validity_event) for replicate-level checks
    replicate_indicators: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.cells)

    def to_csv(self, fh, comment: str = ""):
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("theta,alpha,rate,se,pass\n")
        for c in self.cells:
            t = c.theta
            key = ";".join(f"{v:.17g}" for v in t) if isinstance(t, tuple) else f"{t:.17g}"
            fh.write(f"{key},{c.alpha:.17g},{c.rate:.17g},{c.se:.17g},{int(c.passed)}\n")

    def summary(self) -> str:
        lines = [
            f"{self.kind} validity audit: model={self.model} N={self.n_reps} "
            f"cells={len(self.cells)} -> {'PASS' if self.all_pass else 'FAIL'}"
        ]
        for c in self.cells:
            bound = c.alpha + 3.0 * c.se
            lines.append(
                f"  theta={c.theta} alpha={c.alpha:g}: rate={c.rate:.5f} "
                f"bound={bound:.5f} [{'ok' if c.passed else 'FAIL'}]"
            )
        return "\n".join(lines)


def _binom_se(alpha: float, n: int) -> float:
    return math.sqrt(alpha * (1.0 - alpha) / n)


# ---------------------------------------------------------------------------
# contour value at the true parameter, batched over replicates
# ---------------------------------------------------------------------------


def _binom_outcome_pvalues(n: int, theta: float) -> np.ndarray:
    """pi_{y'}(theta) for every outcome y' of Binomial(n, theta)."""
    ys = np.arange(n + 1)
    logrel = _binom_logrel_outcomes(ys, n, theta)
    with np.errstate(over="ignore"):
        r = np.exp(logrel)
    pmf = _binom_dist.pmf(ys, n, theta)
    order = np.argsort(r, kind="stable")
    r_sorted = r[order]
    cum = np.cumsum(pmf[order])
    idx = np.searchsorted(r_sorted, r + TIE_TOL, side="right")
    return np.clip(cum[idx - 1], 0.0, 1.0)


def _table_outcome_pvalues(n0: int, n1: int, theta) -> np.ndarray:
    """pi_{(y0', y1')}(theta) for all outcomes, flattened row-major."""
    t0, t1 = float(theta[0]), float(theta[1])
    ys0 = np.arange(n0 + 1)
    ys1 = np.arange(n1 + 1)
    rel = (
        _binom_logrel_outcomes(ys0, n0, t0)[:, None]
        + _binom_logrel_outcomes(ys1, n1, t1)[None, :]
    ).ravel()
    with np.errstate(over="ignore"):
        r = np.exp(rel)
    pmf = (
        _binom_dist.pmf(ys0, n0, t0)[:, None] * _binom_dist.pmf(ys1, n1, t1)[None, :]
    ).ravel()
    order = np.argsort(r, kind="stable")
    r_sorted = r[order]
    cum = np.cumsum(pmf[order])
    idx = np.searchsorted(r_sorted, r + TIE_TOL, side="right")
    return np.clip(cum[idx - 1], 0.0, 1.0)


def _corr_suff_at(model, theta: float, rng, m: int):
    """Sufficient statistics of m fresh datasets drawn from P_theta."""
    b11, b12, b22 = model._mc_base(rng, m)
    c = math.sqrt(1.0 - theta * theta)
    s11 = b11
    s12 = theta * b11 + c * b12
    s22 = theta * theta * b11 + 2.0 * theta * c * b12 + c * c * b22
    return s11, s12, s22


def _corr_reference_logrel(model, theta: float, seed: int, t_idx: int, m: int):
    rng = np.random.default_rng((seed, t_idx, 1))
    s11, s12, s22 = _corr_suff_at(model, theta, rng, m)
    return np.sort(
        np.exp(kernels.corr_logrel(s11, s12, s22, model.n_pairs, theta))
    )


def pi_at_true(model, theta, n_reps: int, seed: int = 0, t_idx: int = 0,
               cfg: CalibrationConfig | None = None) -> np.ndarray:
    """Contour values pi_Y(theta) for n_reps datasets Y ~ P_theta.

    Uses the exact evaluator where one exists; the correlation model uses
    a Monte Carlo calibration sample of size ``cfg.mc_samples`` shared
    across replicates (common random numbers).
    """
    rng = np.random.default_rng((seed, t_idx, 0))
    if isinstance(model, NormalMeanModel):
        ybars = theta + model.sd * rng.standard_normal(n_reps)
        return 2.0 * ndtr(-np.abs(ybars - theta) / model.sd)
    if isinstance(model, BinomialModel):
        table = _binom_outcome_pvalues(model.n_trials, theta)
        ys = rng.binomial(model.n_trials, theta, n_reps)
        return table[ys]
    if isinstance(model, TwoByTwoModel):
        n0, n1 = model.row_totals
        table = _table_outcome_pvalues(n0, n1, theta)
        y0 = rng.binomial(n0, float(theta[0]), n_reps)
        y1 = rng.binomial(n1, float(theta[1]), n_reps)
        return table[y0 * (n1 + 1) + y1]
    if isinstance(model, BivariateCorrelationModel):
        cfg = cfg or CalibrationConfig()
        r_ref = _corr_reference_logrel(model, theta, seed, t_idx, cfg.mc_samples)
        s11, s12, s22 = _corr_suff_at(model, theta, rng, n_reps)
        r_obs = np.exp(kernels.corr_logrel(s11, s12, s22, model.n_pairs, theta))
        counts = np.searchsorted(r_ref, r_obs + TIE_TOL, side="right")
        return counts / cfg.mc_samples
    raise CapabilityError(f"unsupported model type {type(model).__name__}")


def audit_strong_validity(model, theta_list, n_reps: int = 10000,
                          alpha_grid=DEFAULT_ALPHAS, seed: int = 0,
                          cfg: CalibrationConfig | None = None) -> ValidityReport:
    """Empirical check of ``P{pi_Y(Theta) <= alpha} <= alpha`` per true Theta.

    A cell passes when its empirical rate is at most
    ``alpha + 3 sqrt(alpha (1-alpha) / N)`` (one-sided, matching the
    direction of the guarantee).
    """
    cells = []
    for t_idx, theta in enumerate(theta_list):
        pis = pi_at_true(model, theta, n_reps, seed, t_idx, cfg)
        for alpha in alpha_grid:
            rate = float(np.mean(pis <= alpha))
            se = _binom_se(alpha, n_reps)
            cells.append(
                ValidityCell(_theta_key(theta), float(alpha), rate, se,
                             rate <= alpha + 3.0 * se)
            )
    return ValidityReport(type(model).__name__, "strong", n_reps, cells)


def _theta_key(theta):
    if isinstance(theta, (tuple, list, np.ndarray)):
        return tuple(float(v) for v in theta)
    return float(theta)


# ---------------------------------------------------------------------------
# uniform validity: probing policies
# ---------------------------------------------------------------------------


def _audit_grid(model, theta, n_points: int = 401) -> np.ndarray:
    if isinstance(model, NormalMeanModel):
        # offsets around each replicate's own ybar (the level set of the
        # normal contour is data-centred)
        return np.linspace(-8.0 * model.sd, 8.0 * model.sd, n_points)
    if isinstance(model, (BinomialModel, BivariateCorrelationModel)):
        lo, hi = (0.0, 1.0) if isinstance(model, BinomialModel) else (-1 + 1e-9, 1 - 1e-9)
        return np.linspace(lo, hi, n_points)
    raise CapabilityError(
        f"policy audits are not implemented for {type(model).__name__}"
    )


def _contour_matrix(model, theta, datasets, grid, seed, t_idx, cfg):
    """pi_{y_i}(grid_g) for every replicate dataset: shape (N, G)."""
    if isinstance(model, NormalMeanModel):
        ybars = datasets
        pts = ybars[:, None] + grid[None, :]
        return 2.0 * ndtr(-np.abs(ybars[:, None] - pts) / model.sd), pts
    if isinstance(model, BinomialModel):
        tables = np.stack(
            [
                kernels.binom_contour(grid, model.n_trials, int(y), TIE_TOL)
                for y in range(model.n_trials + 1)
            ]
        )
        return tables[datasets], np.broadcast_to(grid, (datasets.shape[0], grid.shape[0]))
    if isinstance(model, BivariateCorrelationModel):
        b11, b12, b22 = datasets
        n = model.n_pairs
        out = np.empty((b12.shape[0], grid.shape[0]))
        for g, th in enumerate(grid):
            rng_ref = np.random.default_rng((seed, t_idx, 1, g))
            rs11, rs12, rs22 = _corr_suff_at(model, th, rng_ref, cfg.mc_samples)
            r_ref = np.sort(np.exp(kernels.corr_logrel(rs11, rs12, rs22, n, th)))
            c = math.sqrt(1.0 - th * th)
            # rotate the rho=0 replicate base into P_theta coordinates
            t11 = b11
            t12 = th * b11 + c * b12
            t22 = th * th * b11 + 2.0 * th * c * b12 + c * c * b22
            r_i = np.exp(kernels.corr_logrel(t11, t12, t22, n, th))
            out[:, g] = np.searchsorted(r_ref, r_i + TIE_TOL, side="right") / cfg.mc_samples
        return out, np.broadcast_to(grid, (b12.shape[0], grid.shape[0]))
    raise CapabilityError(f"unsupported model type {type(model).__name__}")


def _draw_datasets(model, theta, n_reps, seed, t_idx):
    rng = np.random.default_rng((seed, t_idx, 0))
    if isinstance(model, NormalMeanModel):
        return theta + model.sd * rng.standard_normal(n_reps)
    if isinstance(model, BinomialModel):
        return rng.binomial(model.n_trials, theta, n_reps)
    if isinstance(model, BivariateCorrelationModel):
        # keep the rho=0 base; rotation happens once the grid theta is known
        return model._mc_base(rng, n_reps)
    raise CapabilityError(
        f"policy audits are not implemented for {type(model).__name__}"
    )


def _pi_true_from(model, theta, datasets, seed, t_idx, cfg):
    if isinstance(model, NormalMeanModel):
        return 2.0 * ndtr(-np.abs(datasets - theta) / model.sd)
    if isinstance(model, BinomialModel):
        return _binom_outcome_pvalues(model.n_trials, theta)[datasets]
    if isinstance(model, BivariateCorrelationModel):
        r_ref = _corr_reference_logrel(model, theta, seed, t_idx, cfg.mc_samples)
        c = math.sqrt(1.0 - theta * theta)
        b11, b12, b22 = datasets
        s11 = b11
        s12 = theta * b11 + c * b12
        s22 = theta * theta * b11 + 2.0 * theta * c * b12 + c * c * b22
        r_i = np.exp(kernels.corr_logrel(s11, s12, s22, model.n_pairs, theta))
        return np.searchsorted(r_ref, r_i + TIE_TOL, side="right") / cfg.mc_samples
    raise CapabilityError(f"unsupported model type {type(model).__name__}")


def audit_uniform_validity(model, theta_list, n_reps: int = 10000,
                           alpha_grid=DEFAULT_ALPHAS,
                           policy: str = "level-set-adversary", seed: int = 0,
                           cfg: CalibrationConfig | None = None,
                           policy_options: dict | None = None) -> ValidityReport:
    """Empirical check that no probing policy is misled at rate above alpha.

    Policies:

    * ``level-set-adversary`` — per dataset, H = {theta: pi_y(theta) <= alpha},
      the most dangerous candidate hypothesis that can be true; the
      misleading indicator provably equals the strong-validity indicator
      {pi_Y(Theta) <= alpha}, and both are recorded per replicate.
    * ``fixed-family`` — a fixed null H = (-inf, h] plus follow-up claims
      A_r = (h + d_r, inf); misleading when a true H gets possibility
      <= alpha or a false A_r gets necessity >= 1 - alpha.
    * ``random-intervals`` — per replicate, k random grid-aligned
      intervals, each checked in whichever direction (possibility of a
      true one / necessity of a false one) can mislead.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; choose from {POLICIES}")
    cfg = cfg or CalibrationConfig()
    opts = dict(policy_options or {})
    cells = []
    indicators = {}
    for t_idx, theta in enumerate(theta_list):
        datasets = _draw_datasets(model, theta, n_reps, seed, t_idx)
        pis_true = _pi_true_from(model, theta, datasets, seed, t_idx, cfg)
        if policy == "level-set-adversary":
            grid = _audit_grid(model, theta, int(opts.get("grid_points", 401)))
            pimat, _pts = _contour_matrix(model, theta, datasets, grid, seed, t_idx, cfg)
            for alpha in alpha_grid:
                # sup of the contour over its own alpha level set, plus the
                # true theta when it belongs to the set
                masked = np.where(pimat <= alpha, pimat, -1.0)
                sup_h = masked.max(axis=1)
                member = pis_true <= alpha
                sup_h = np.maximum(sup_h, np.where(member, pis_true, -1.0))
                event = member & (sup_h <= alpha)
                strong = pis_true <= alpha
                rate = float(np.mean(event))
                se = _binom_se(alpha, n_reps)
                cells.append(
                    ValidityCell(_theta_key(theta), float(alpha), rate, se,
                                 rate <= alpha + 3.0 * se)
                )
                indicators[(_theta_key(theta), float(alpha))] = (event, strong)
        elif policy == "fixed-family":
            event_parts = _fixed_family_events(
                model, theta, datasets, alpha_grid, opts
            )
            for alpha, event in zip(alpha_grid, event_parts):
                rate = float(np.mean(event))
                se = _binom_se(alpha, n_reps)
                cells.append(
                    ValidityCell(_theta_key(theta), float(alpha), rate, se,
                                 rate <= alpha + 3.0 * se)
                )
        else:  # random-intervals
            event_parts = _random_interval_events(
                model, theta, datasets, alpha_grid, seed, t_idx, cfg, opts
            )
            for alpha, event in zip(alpha_grid, event_parts):
                rate = float(np.mean(event))
                se = _binom_se(alpha, n_reps)
                cells.append(
                    ValidityCell(_theta_key(theta), float(alpha), rate, se,
                                 rate <= alpha + 3.0 * se)
                )
    return ValidityReport(
        type(model).__name__, policy, n_reps, cells, indicators
    )


def _normal_poss_leq(model, ybars, a):
    """Pi_bar((-inf, a]) for the likelihood IM of the normal model, batched."""
    return np.where(a >= ybars, 1.0, 2.0 * ndtr(-np.abs(ybars - a) / model.sd))


def _normal_poss_gt(model, ybars, a):
    """Pi_bar((a, inf)), batched (endpoint treated inclusively)."""
    return np.where(a <= ybars, 1.0, 2.0 * ndtr(-np.abs(ybars - a) / model.sd))


def _fixed_family_events(model, theta, datasets, alpha_grid, opts):
    if not isinstance(model, NormalMeanModel):
        raise CapabilityError("fixed-family policy is defined for the normal model")
    h = float(opts.get("h_bound", 150.0))
    offsets = opts.get("offsets", tuple(r / 10.0 for r in range(1, 11)))
    ybars = datasets
    poss_h = _normal_poss_leq(model, ybars, h)
    events = []
    for alpha in alpha_grid:
        event = (theta <= h) & (poss_h <= alpha)
        for off in offsets:
            a = h + off
            # necessity({Theta > a}) = 1 - possibility((-inf, a])
            nec = 1.0 - _normal_poss_leq(model, ybars, a)
            false_claim = theta <= a
            event = event | (false_claim & (nec >= 1.0 - alpha))
        events.append(event)
    return events


def _random_interval_events(model, theta, datasets, alpha_grid, seed, t_idx,
                            cfg, opts):
    k = int(opts.get("k_intervals", 3))
    grid = _audit_grid(model, theta, int(opts.get("grid_points", 401)))
    pimat, pts = _contour_matrix(model, theta, datasets, grid, seed, t_idx, cfg)
    n = pimat.shape[0]
    rng = np.random.default_rng((seed, t_idx, 2))
    g = grid.shape[0]
    events = [np.zeros(n, dtype=bool) for _ in alpha_grid]
    for _ in range(k):
        i0 = rng.integers(0, g, n)
        i1 = rng.integers(0, g, n)
        lo = np.minimum(i0, i1)
        hi = np.maximum(i0, i1)
        cols = np.arange(g)
        inside = (cols[None, :] >= lo[:, None]) & (cols[None, :] <= hi[:, None])
        sup_in = np.where(inside, pimat, -1.0).max(axis=1)
        sup_out = np.where(~inside, pimat, -1.0).max(axis=1)
        lo_pts = pts[np.arange(n), lo]
        hi_pts = pts[np.arange(n), hi]
        is_true = (lo_pts <= theta) & (theta <= hi_pts)
        for j, alpha in enumerate(alpha_grid):
            misled_true = is_true & (sup_in <= alpha)
            misled_false = (~is_true) & ((1.0 - sup_out) >= 1.0 - alpha)
            events[j] = events[j] | misled_true | misled_false
    return events
