"""Possibility contours and the necessity/possibility measure pair.

A :class:`Contour` stores the contour function on a grid (1-D) or
lattice (2-D), the point where it peaks (the MLE for likelihood-based
constructions), and optionally an exact pointwise evaluator.  An
:class:`IMPair` wraps a contour together with the parameter-space box
and answers set queries:

* ``possibility(H) = sup over H of the contour`` — grid points inside H
  seed the sup; finite interval endpoints are evaluated exactly when an
  evaluator is available, and a bounded golden-section refinement pass
  polishes the sup inside each interval (grids alone understate the sup
  near sharp peaks);
* ``necessity(H) = 1 - possibility(complement of H)`` — the duality is
  the definition, so it holds by construction;
* ``confidence_set(alpha)`` — the upper level set ``{theta: pi > alpha}``.

Endpoints of open intervals are treated inclusively when computing the
sup: every implemented contour is continuous, so the sup over an open
interval equals the closed-interval max.
"""

from __future__ import annotations

import math

import numpy as np

from possim.errors import ResolutionError
from possim.hypotheses import Interval, IntervalSet, LatticeMask

__all__ = ["Contour", "Contour2D", "IMPair", "golden_max", "write_contour_csv"]

GOLDEN_ITERS = 40
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f, lo: float, hi: float, iters: int = GOLDEN_ITERS) -> float:
    """Golden-section maximization of ``f`` on [lo, hi]; returns the max
    of all evaluations (safe even if f is not unimodal on the bracket)."""
    a, b = float(lo), float(hi)
    if not a < b:
        return float(f(a))
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = float(f(c)), float(f(d))
    best = max(fc, fd)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = float(f(c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = float(f(d))
        if fc > best:
            best = fc
        if fd > best:
            best = fd
    return best


class Contour:
    """A scalar possibility contour on a strictly increasing grid."""

    __slots__ = ("grid", "values", "mle_point", "exact_eval")

    def __init__(self, grid, values, mle_point, exact_eval=None):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be matching 1-D arrays")
        if not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(values < -1e-9) or np.any(values > 1.0 + 1e-9):
            raise ValueError("contour values must lie in [0, 1]")
        values = np.clip(values, 0.0, 1.0)
        idx = int(np.searchsorted(grid, mle_point))
        hit = None
        for j in (idx - 1, idx, idx + 1):
            if 0 <= j < grid.shape[0] and math.isclose(
                grid[j], mle_point, rel_tol=0.0, abs_tol=1e-12 * max(1.0, abs(mle_point))
            ):
                hit = j
                break
        if hit is None:
            raise ValueError("mle_point must be a grid point")
        if values.max() > values[hit] + 1e-12:
            raise ValueError("contour must attain its maximum at mle_point")
        if values[hit] < 1.0 - 1e-6:
            raise ValueError("contour must reach 1 at its peak (consonance)")
        grid.setflags(write=False)
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self.mle_point = float(mle_point)
        self.exact_eval = exact_eval

    @property
    def ndim(self) -> int:
        return 1


class Contour2D:
    """A possibility contour on a 2-D lattice (outer product of two axes)."""

    __slots__ = ("axes", "values", "mle_point", "exact_eval")

    def __init__(self, axes, values, mle_point, exact_eval=None):
        ax0 = np.asarray(axes[0], dtype=float)
        ax1 = np.asarray(axes[1], dtype=float)
        values = np.asarray(values, dtype=float)
        if values.shape != (ax0.shape[0], ax1.shape[0]):
            raise ValueError("values must have shape (len(ax0), len(ax1))")
        for ax in (ax0, ax1):
            if not np.all(np.diff(ax) > 0):
                raise ValueError("lattice axes must be strictly increasing")
        if np.any(values < -1e-9) or np.any(values > 1.0 + 1e-9):
            raise ValueError("contour values must lie in [0, 1]")
        values = np.clip(values, 0.0, 1.0)
        if values.max() < 1.0 - 1e-6:
            raise ValueError("contour must reach 1 at its peak (consonance)")
        for a in (ax0, ax1, values):
            a.setflags(write=False)
        self.axes = (ax0, ax1)
        self.values = values
        self.mle_point = (float(mle_point[0]), float(mle_point[1]))
        self.exact_eval = exact_eval

    @property
    def ndim(self) -> int:
        return 2


class IMPair:
    """Necessity/possibility measure pair generated by a contour."""

    __slots__ = ("contour", "space")

    def __init__(self, contour, space):
        self.contour = contour
        self.space = tuple(space)

    # -- scalar-set machinery ----------------------------------------------

    def _eval_exact(self, x: float) -> float:
        val = float(self.contour.exact_eval(x))
        return min(max(val, 0.0), 1.0)

    def _sup_interval(self, iv: Interval):
        """Sup of the contour over one interval; None when unresolvable."""
        grid = self.contour.grid
        values = self.contour.values
        lo = max(iv.lo, self.space[0])
        hi = min(iv.hi, self.space[1])
        if lo > hi:
            return 0.0
        i0 = int(np.searchsorted(grid, lo, side="left"))
        i1 = int(np.searchsorted(grid, hi, side="right"))
        best = -1.0
        best_x = None
        if i1 > i0:
            j = i0 + int(np.argmax(values[i0:i1]))
            best = float(values[j])
            best_x = float(grid[j])
        if self.contour.exact_eval is None:
            return best if best >= 0.0 else None
        # endpoint evaluations; infinite endpoints use the evaluator's limit
        span = grid[-1] - grid[0]
        probes = [lo, hi]
        if math.isinf(lo):
            probes.extend([grid[0] - span * k for k in (1.0, 2.0, 4.0)])
        if math.isinf(hi):
            probes.extend([grid[-1] + span * k for k in (1.0, 2.0, 4.0)])
        finite_seeds = []
        for x in probes:
            if math.isinf(x):
                v = self._eval_exact(x)
            else:
                x = min(max(x, lo), hi)
                v = self._eval_exact(x)
                finite_seeds.append(x)
            if v > best:
                best, best_x = v, (None if math.isinf(x) else x)
        # golden-section refinement inside the interval, bracketed by the
        # best seed's finite neighbours
        if best_x is not None:
            neighbors = [g for g in finite_seeds]
            k = int(np.searchsorted(grid, best_x))
            for j in (k - 1, k, k + 1):
                if 0 <= j < grid.shape[0]:
                    neighbors.append(float(grid[j]))
            left = max(
                [x for x in neighbors if x < best_x], default=best_x
            )
            right = min([x for x in neighbors if x > best_x], default=best_x)
            left = max(left, lo if not math.isinf(lo) else left)
            right = min(right, hi if not math.isinf(hi) else right)
            if left < right:
                best = max(best, golden_max(self._eval_exact, left, right))
        return best

    # -- public queries ------------------------------------------------------

    def possibility(self, hypothesis) -> float:
        """Upper measure: sup of the contour over the hypothesis."""
        if self.contour.ndim == 2:
            return self._possibility_mask(hypothesis)
        if not isinstance(hypothesis, IntervalSet):
            raise TypeError("scalar hypotheses must be IntervalSet instances")
        if hypothesis.is_empty:
            return 0.0
        sups = []
        for iv in hypothesis.intervals:
            s = self._sup_interval(iv)
            if s is not None:
                sups.append(s)
        if not sups:
            raise ResolutionError(
                f"hypothesis {hypothesis} contains no contour grid point and "
                "the contour has no exact evaluator"
            )
        return min(max(max(sups), 0.0), 1.0)

    def necessity(self, hypothesis) -> float:
        """Lower measure: 1 minus the possibility of the complement."""
        if self.contour.ndim == 2:
            if not isinstance(hypothesis, LatticeMask):
                raise TypeError("lattice hypotheses must be LatticeMask instances")
            return 1.0 - self._possibility_mask(hypothesis.complement())
        comp = hypothesis.complement(self.space[0], self.space[1])
        return 1.0 - self.possibility(comp)

    def _possibility_mask(self, hypothesis) -> float:
        if not isinstance(hypothesis, LatticeMask):
            raise TypeError("lattice hypotheses must be LatticeMask instances")
        if hypothesis.mask.shape != self.contour.values.shape:
            raise ValueError("mask shape does not match the contour lattice")
        if hypothesis.is_empty:
            return 0.0
        return float(self.contour.values[hypothesis.mask].max())

    def confidence_set(self, alpha: float):
        """Upper level set {theta: pi(theta) > alpha}.

        Returns an :class:`IntervalSet` (scalar) or :class:`LatticeMask`
        (lattice).  Contains the contour peak for every alpha < 1.
        """
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.contour.ndim == 2:
            return LatticeMask(self.contour.values > alpha)
        grid = self.contour.grid
        values = self.contour.values
        inside = values > alpha
        pieces = []
        i = 0
        m = grid.shape[0]
        while i < m:
            if not inside[i]:
                i += 1
                continue
            j = i
            while j + 1 < m and inside[j + 1]:
                j += 1
            lo = float(grid[i])
            hi = float(grid[j])
            if self.contour.exact_eval is not None:
                if i > 0:
                    lo = self._cross(float(grid[i - 1]), lo, alpha)
                if j + 1 < m:
                    hi = self._cross(float(grid[j + 1]), hi, alpha)
            pieces.append(Interval(lo, hi))
            i = j + 1
        return IntervalSet(pieces)

    def _cross(self, outside: float, inside: float, alpha: float) -> float:
        """Bisect for the {pi = alpha} crossing between two grid points."""
        a, b = outside, inside  # f(a) <= alpha < f(b)
        for _ in range(60):
            mid = 0.5 * (a + b)
            if self._eval_exact(mid) > alpha:
                b = mid
            else:
                a = mid
        return b


def write_contour_csv(contour, fh, comment: str = ""):
    """Write ``theta,pi`` (or ``theta1,theta2,pi``) rows, full precision."""
    if comment:
        fh.write(f"# {comment}\n")
    if contour.ndim == 1:
        fh.write("theta,pi\n")
        for t, v in zip(contour.grid, contour.values):
            fh.write(f"{t:.17g},{v:.17g}\n")
    else:
        ax0, ax1 = contour.axes
        fh.write("theta1,theta2,pi\n")
        for i, t0 in enumerate(ax0):
            for j, t1 in enumerate(ax1):
                fh.write(f"{t0:.17g},{t1:.17g},{contour.values[i, j]:.17g}\n")
