"""Hypothesis sets: interval unions on the line, boolean masks on a lattice.

Scalar hypotheses are finite unions of disjoint intervals with explicit
open/closed endpoints, so complements are exact and the duality
``necessity(H) = 1 - possibility(H^c)`` holds by construction.  Two-
dimensional hypotheses are boolean masks aligned with a contour lattice.

The CLI text syntax is the one used throughout: ``(-inf,150]``,
``[0,0.2]``, ``(0.2,1] U [0.9,1]``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = ["Interval", "IntervalSet", "LatticeMask", "parse_hypothesis"]


@dataclass(frozen=True)
class Interval:
    """A single interval with open/closed endpoint flags."""

    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoints cannot be NaN")
        if self.lo > self.hi:
            raise ValueError(f"interval lower bound {self.lo} exceeds {self.hi}")
        if self.lo == self.hi and (self.lo_open or self.hi_open):
            raise ValueError("degenerate interval must be closed on both sides")
        if math.isinf(self.lo) and not self.lo_open:
            object.__setattr__(self, "lo_open", True)
        if math.isinf(self.hi) and not self.hi_open:
            object.__setattr__(self, "hi_open", True)

    def contains(self, x: float) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and self.lo_open:
            return False
        if x == self.hi and self.hi_open:
            return False
        return True

    def __str__(self):
        lo = "-inf" if math.isinf(self.lo) else f"{self.lo:g}"
        hi = "inf" if math.isinf(self.hi) else f"{self.hi:g}"
        return f"{'(' if self.lo_open else '['}{lo},{hi}{')' if self.hi_open else ']'}"


class IntervalSet:
    """A finite union of disjoint, ordered intervals."""

    __slots__ = ("intervals",)

    def __init__(self, intervals=()):
        merged = _merge(list(intervals))
        self.intervals = tuple(merged)

    # -- constructors -----------------------------------------------------

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def interval(cls, lo, hi, lo_open=False, hi_open=False) -> "IntervalSet":
        return cls((Interval(float(lo), float(hi), lo_open, hi_open),))

    @classmethod
    def point(cls, x) -> "IntervalSet":
        return cls.interval(x, x)

    # -- queries ----------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, x: float) -> bool:
        return any(iv.contains(x) for iv in self.intervals)

    def grid_mask(self, grid: np.ndarray) -> np.ndarray:
        """Boolean mask of grid points that belong to the set."""
        mask = np.zeros(grid.shape[0], dtype=bool)
        for iv in self.intervals:
            m = (grid >= iv.lo) & (grid <= iv.hi)
            if iv.lo_open:
                m &= grid != iv.lo
            if iv.hi_open:
                m &= grid != iv.hi
            mask |= m
        return mask

    # -- set algebra -------------------------------------------------------

    def complement(self, space_lo: float, space_hi: float) -> "IntervalSet":
        """Complement within the parameter interval [space_lo, space_hi].

        Unbounded spaces exclude their infinite endpoints, so e.g. the
        complement of ``(-inf, 150]`` over the real line is ``(150, inf)``.
        """
        pieces = []
        cur = space_lo
        cur_open = math.isinf(space_lo)
        for iv in self.intervals:
            if iv.hi < space_lo or iv.lo > space_hi:
                continue
            if iv.hi == space_lo and iv.hi_open:
                continue
            if iv.lo == space_hi and iv.lo_open:
                continue
            lo, lo_open = iv.lo, iv.lo_open
            if lo < space_lo:
                lo, lo_open = space_lo, math.isinf(space_lo)
            if lo > cur:
                pieces.append(Interval(cur, lo, cur_open, not lo_open))
            elif lo == cur and lo_open and not cur_open:
                pieces.append(Interval(cur, cur))
            if iv.hi > space_hi:
                cur, cur_open = space_hi, True
            else:
                cur, cur_open = iv.hi, not iv.hi_open
        if cur < space_hi:
            pieces.append(Interval(cur, space_hi, cur_open, False))
        elif cur == space_hi and not cur_open and not math.isinf(cur):
            pieces.append(Interval(cur, cur))
        return IntervalSet(pieces)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        pieces = []
        for a in self.intervals:
            for b in other.intervals:
                lo = max(a.lo, b.lo)
                hi = min(a.hi, b.hi)
                if lo > hi:
                    continue
                lo_open = (a.lo_open if lo == a.lo else False) or (
                    b.lo_open if lo == b.lo else False
                )
                hi_open = (a.hi_open if hi == a.hi else False) or (
                    b.hi_open if hi == b.hi else False
                )
                if lo == hi and (lo_open or hi_open):
                    continue
                pieces.append(Interval(lo, hi, lo_open, hi_open))
        return IntervalSet(pieces)

    def issubset(self, other: "IntervalSet", space_lo=-math.inf, space_hi=math.inf):
        return self.intersection(other.complement(space_lo, space_hi)).is_empty

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self.intervals == other.intervals

    def __hash__(self):
        return hash(self.intervals)

    def __str__(self):
        if self.is_empty:
            return "{}"
        return " U ".join(str(iv) for iv in self.intervals)

    def __repr__(self):  # pragma: no cover
        return f"IntervalSet({self})"


def _merge(intervals):
    """Sort and merge overlapping or touching intervals."""
    ivs = sorted(intervals, key=lambda iv: (iv.lo, iv.lo_open))
    out = []
    for iv in ivs:
        if not out:
            out.append(iv)
            continue
        last = out[-1]
        touching = iv.lo < last.hi or (
            iv.lo == last.hi and not (iv.lo_open and last.hi_open)
        )
        if touching:
            if iv.hi > last.hi or (iv.hi == last.hi and last.hi_open and not iv.hi_open):
                out[-1] = Interval(last.lo, iv.hi, last.lo_open, iv.hi_open)
        else:
            out.append(iv)
    return out


class LatticeMask:
    """Boolean mask over a 2-D contour lattice."""

    __slots__ = ("mask",)

    def __init__(self, mask):
        self.mask = np.asarray(mask, dtype=bool)
        if self.mask.ndim != 2:
            raise ValueError("lattice mask must be 2-D")

    @property
    def is_empty(self) -> bool:
        return not bool(self.mask.any())

    def complement(self) -> "LatticeMask":
        return LatticeMask(~self.mask)

    def union(self, other: "LatticeMask") -> "LatticeMask":
        return LatticeMask(self.mask | other.mask)

    def intersection(self, other: "LatticeMask") -> "LatticeMask":
        return LatticeMask(self.mask & other.mask)

    def issubset(self, other: "LatticeMask") -> bool:
        return not bool((self.mask & ~other.mask).any())


_INTERVAL_RE = re.compile(
    r"^\s*([\[\(])\s*([^,\s]+)\s*,\s*([^,\s\]\)]+)\s*([\]\)])\s*$"
)


def _parse_bound(tok: str) -> float:
    t = tok.strip().lower().lstrip("+")
    if t in ("-inf", "-infinity"):
        return -math.inf
    if t in ("inf", "infinity"):
        return math.inf
    return float(t)


def parse_hypothesis(text: str) -> IntervalSet:
    """Parse the interval-union syntax, e.g. ``(-inf,150]`` or
    ``[0,0.1] U [0.9,1]``."""
    pieces = []
    for chunk in re.split(r"\s+[Uu]\s+", text.strip()):
        m = _INTERVAL_RE.match(chunk)
        if not m:
            raise ValueError(f"cannot parse interval {chunk!r}")
        lo = _parse_bound(m.group(2))
        hi = _parse_bound(m.group(3))
        pieces.append(Interval(lo, hi, m.group(1) == "(", m.group(4) == ")"))
    return IntervalSet(pieces)
