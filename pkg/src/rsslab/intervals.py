"""Finite unions of disjoint open intervals on the real line.

An :class:`IntervalSet` is stored as two parallel, read-only float64 arrays
of left and right endpoints.  The stored form is canonical: intervals are
sorted and separated by strictly positive gaps, so touching or overlapping
inputs are merged.  Membership uses open-interval semantics; endpoints carry
no measure, so merging a touching pair never changes a measured quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

#: Absolute slack used by :meth:`IntervalSet.covers`.
COVER_SLACK = 1e-9


@dataclass(frozen=True, order=True)
class Interval:
    """Open interval ``(lo, hi)`` with finite endpoints and ``lo < hi``."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval endpoints must be finite, got ({self.lo}, {self.hi})")
        if not self.lo < self.hi:
            raise ValueError(f"interval needs lo < hi, got ({self.lo}, {self.hi})")

    @property
    def length(self) -> float:
        return self.hi - self.lo


def _sweep(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge arbitrary (lo, hi) pairs into canonical sorted disjoint form."""
    if lo.size <= 1:
        return lo, hi
    order = np.argsort(lo, kind="stable")
    lo = lo[order]
    hi = hi[order]
    reach = np.maximum.accumulate(hi)
    # a new run starts where the left endpoint lies strictly past everything so far
    starts = np.flatnonzero(np.concatenate(([True], lo[1:] > reach[:-1])))
    ends = np.concatenate((starts[1:] - 1, [lo.size - 1]))
    return lo[starts], reach[ends]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


class IntervalSet:
    """Immutable canonical union of disjoint open intervals.

    Construct with :func:`normalize` (or :meth:`from_pairs`) from arbitrary
    intervals; the plain constructor is for arrays that are already
    canonical and is validated only when ``check=True``.
    """

    __slots__ = ("_lo", "_hi")

    def __init__(self, lo=(), hi=(), *, check: bool = True):
        if check:
            lo = np.array(lo, dtype=np.float64)
            hi = np.array(hi, dtype=np.float64)
            if lo.shape != hi.shape or lo.ndim != 1:
                raise ValueError("endpoint arrays must be 1-d and of equal length")
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise ValueError("endpoints must be finite")
            if np.any(lo >= hi):
                raise ValueError("every interval needs lo < hi")
            if np.any(hi[:-1] >= lo[1:]):
                raise ValueError("intervals are not canonical (sorted with positive gaps)")
        else:
            lo = np.asarray(lo, dtype=np.float64)
            hi = np.asarray(hi, dtype=np.float64)
        self._lo = _frozen(lo)
        self._hi = _frozen(hi)

    # -- construction -----------------------------------------------------

    @classmethod
    def empty(cls) -> IntervalSet:
        return cls((), (), check=False)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> IntervalSet:
        return normalize([Interval(float(a), float(b)) for a, b in pairs])

    @classmethod
    def _from_raw(cls, lo: np.ndarray, hi: np.ndarray) -> IntervalSet:
        lo, hi = _sweep(lo, hi)
        return cls(lo, hi, check=False)

    # -- accessors --------------------------------------------------------

    @property
    def lo(self) -> np.ndarray:
        return self._lo

    @property
    def hi(self) -> np.ndarray:
        return self._hi

    @property
    def intervals(self) -> list[Interval]:
        return [Interval(float(a), float(b)) for a, b in zip(self._lo, self._hi)]

    def pairs(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self._lo, self._hi)]

    def __len__(self) -> int:
        return int(self._lo.size)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __bool__(self) -> bool:
        return self._lo.size > 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return np.array_equal(self._lo, other._lo) and np.array_equal(self._hi, other._hi)

    def __hash__(self):
        return hash((self._lo.tobytes(), self._hi.tobytes()))

    def __repr__(self) -> str:
        body = ", ".join(f"({a!r}, {b!r})" for a, b in self.pairs())
        return f"IntervalSet([{body}])"

    def is_canonical(self) -> bool:
        return bool(np.all(self._lo < self._hi) and np.all(self._hi[:-1] < self._lo[1:]))

    def allclose(self, other: IntervalSet, atol: float = 1e-12) -> bool:
        """Same interval count and endpoints equal within ``atol``."""
        return (
            len(self) == len(other)
            and bool(np.allclose(self._lo, other._lo, rtol=0.0, atol=atol))
            and bool(np.allclose(self._hi, other._hi, rtol=0.0, atol=atol))
        )

    # -- algebra ----------------------------------------------------------

    def union(self, other: IntervalSet) -> IntervalSet:
        if not other:
            return self
        if not self:
            return other
        return IntervalSet._from_raw(
            np.concatenate((self._lo, other._lo)), np.concatenate((self._hi, other._hi))
        )

    __or__ = union

    def translate(self, x: float) -> IntervalSet:
        if not math.isfinite(x):
            raise ValueError(f"translation must be finite, got {x}")
        return IntervalSet(self._lo + x, self._hi + x, check=False)

    def clip(self, lo: float, hi: float) -> IntervalSet:
        """Intersection with the open interval ``(lo, hi)``."""
        if not lo < hi:
            raise ValueError(f"clip needs lo < hi, got ({lo}, {hi})")
        a = np.maximum(self._lo, lo)
        b = np.minimum(self._hi, hi)
        keep = a < b
        return IntervalSet(a[keep], b[keep], check=False)

    def dilate(self, r: float) -> IntervalSet:
        """Grow every interval by ``r`` on both sides and re-merge."""
        if r < 0:
            raise ValueError(f"dilation radius must be non-negative, got {r}")
        if r == 0 or not self:
            return self
        return IntervalSet._from_raw(self._lo - r, self._hi + r)

    def measure(self) -> float:
        return float(np.sum(self._hi - self._lo))

    def measure_within(self, lo: float, hi: float) -> float:
        """Measure of the part of the set inside ``(lo, hi)``."""
        a = np.maximum(self._lo, lo)
        b = np.minimum(self._hi, hi)
        return float(np.sum(np.maximum(b - a, 0.0)))

    # -- queries ----------------------------------------------------------

    def contains(self, z: float) -> bool:
        i = int(np.searchsorted(self._lo, z, side="left")) - 1
        return i >= 0 and bool(z < self._hi[i])

    __contains__ = contains

    def contains_many(self, zs) -> np.ndarray:
        """Vectorised :meth:`contains` over an array of query points."""
        zs = np.asarray(zs, dtype=np.float64)
        idx = np.searchsorted(self._lo, zs, side="left") - 1
        ok = idx >= 0
        out = np.zeros(zs.shape, dtype=bool)
        out[ok] = zs[ok] < self._hi[idx[ok]]
        return out

    def distance(self, z: float) -> float:
        """Distance from ``z`` to the closure of the set (0 inside); inf if empty."""
        if not self:
            return math.inf
        if self.contains(z):
            return 0.0
        return float(np.min(np.maximum(self._lo - z, z - self._hi)))

    def covers(self, lo: float, hi: float, slack: float = COVER_SLACK) -> bool:
        """True when one stored interval spans ``(lo, hi)`` up to ``slack``."""
        if not lo < hi:
            raise ValueError(f"covers needs lo < hi, got ({lo}, {hi})")
        part = self.clip(lo, hi)
        if len(part) != 1:
            return False
        return bool(part._lo[0] <= lo + slack and part._hi[0] >= hi - slack)


def normalize(raw: Sequence[Interval] | Iterable[tuple[float, float]]) -> IntervalSet:
    """Canonical :class:`IntervalSet` for the union of ``raw``.

    Accepts :class:`Interval` objects or plain ``(lo, hi)`` pairs; pairs are
    validated through :class:`Interval`, so ``lo >= hi`` or a non-finite
    endpoint raises :class:`ValueError`.
    """
    items = [iv if isinstance(iv, Interval) else Interval(float(iv[0]), float(iv[1])) for iv in raw]
    if not items:
        return IntervalSet.empty()
    lo = np.fromiter((iv.lo for iv in items), dtype=np.float64, count=len(items))
    hi = np.fromiter((iv.hi for iv in items), dtype=np.float64, count=len(items))
    return IntervalSet._from_raw(lo, hi)
