"""The random subset-sum process on interval sets.

``A_t`` is the set of reals within ``epsilon`` (strictly) of some subset sum
of the first ``t`` samples.  It starts as ``(-eps, eps)`` and evolves by

    A_{t+1} = A_t  union  (A_t + x_{t+1})

over the whole real line.  The volume ``v_t`` is half the measure of
``A_t`` inside ``[-1, 1]``, i.e. the fraction of the target range that is
currently approximable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .intervals import IntervalSet

TARGET_LO = -1.0
TARGET_HI = 1.0


@dataclass(frozen=True)
class ProcessParams:
    epsilon: float
    horizon: int

    def __post_init__(self):
        check_epsilon(self.epsilon)
        if int(self.horizon) != self.horizon or self.horizon < 0:
            raise ValueError(f"horizon must be a non-negative integer, got {self.horizon}")


def check_epsilon(epsilon: float) -> float:
    if not (0.0 < epsilon < 1.0 / 3.0):
        raise ValueError(f"epsilon must lie in (0, 1/3), got {epsilon}")
    return float(epsilon)


def volume_of(approx_set: IntervalSet) -> float:
    return approx_set.measure_within(TARGET_LO, TARGET_HI) / 2.0


class ProcessState:
    """Mutable state of one run: time, samples, ``A_t`` and its history.

    With ``keep_snapshots=False`` only the current set is retained, which
    disables witness reconstruction but keeps memory flat for long runs.
    """

    def __init__(self, epsilon: float, keep_snapshots: bool = True):
        self.epsilon = check_epsilon(epsilon)
        self.t = 0
        self.approx_set = IntervalSet([-self.epsilon], [self.epsilon], check=False)
        self.samples: list[float] = []
        self.snapshots: list[IntervalSet] | None = [self.approx_set] if keep_snapshots else None
        self.max_intervals = 1
        self.coverage_at: dict[int, bool] = {}

    @property
    def volume(self) -> float:
        return volume_of(self.approx_set)

    def step(self, x: float) -> ProcessState:
        """Reveal the next sample and update ``A_t`` in place; returns ``self``."""
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"sample must be finite, got {x}")
        self.approx_set = self.approx_set.union(self.approx_set.translate(x))
        self.samples.append(x)
        self.t += 1
        if self.snapshots is not None:
            self.snapshots.append(self.approx_set)
        self.max_intervals = max(self.max_intervals, len(self.approx_set))
        return self

    def next_volume(self, x: float) -> float:
        """Volume after a hypothetical step with ``x``, leaving the state untouched."""
        return volume_of(self.approx_set.union(self.approx_set.translate(x)))

    def clipped_next_volume(self, x: float) -> float:
        """One-step volume counting only translated mass that started in [-1, 1].

        Bounded above by both :meth:`next_volume` and ``2 * volume``.
        """
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"sample must be finite, got {x}")
        inside = self.approx_set.clip(TARGET_LO, TARGET_HI)
        return volume_of(self.approx_set.union(inside.translate(x)))

    def local_view(self, reach: float = 1.0) -> ProcessState:
        """Copy without history, keeping only the part of ``A_t`` that a step of
        size at most ``reach`` can move into [-1, 1].  Volumes of one-step
        replays are unchanged.
        """
        view = ProcessState(self.epsilon, keep_snapshots=False)
        view.t = self.t
        view.samples = list(self.samples)
        view.approx_set = self.approx_set.clip(TARGET_LO - reach, TARGET_HI + reach)
        view.max_intervals = self.max_intervals
        return view

    def eps_covered(self) -> bool:
        return self.approx_set.covers(TARGET_LO, TARGET_HI)

    def two_eps_covered(self) -> bool:
        return self.approx_set.dilate(self.epsilon).covers(TARGET_LO, TARGET_HI)


def init(params: ProcessParams | float, keep_snapshots: bool = True) -> ProcessState:
    epsilon = params.epsilon if isinstance(params, ProcessParams) else params
    return ProcessState(epsilon, keep_snapshots=keep_snapshots)


def step(state: ProcessState, x: float) -> ProcessState:
    return state.step(x)


def volume(state: ProcessState) -> float:
    return state.volume


def clipped_next_volume(state: ProcessState, x: float) -> float:
    return state.clipped_next_volume(x)


def eps_covered(state: ProcessState) -> bool:
    return state.eps_covered()


def two_eps_covered(state: ProcessState) -> bool:
    return state.two_eps_covered()


@dataclass(frozen=True)
class StoppingTimes:
    """``tau1``: first t with v_t > 1/2.  ``tau2``: first s >= 0 with
    1 - v_{tau1+s} <= eps/2.  ``tau = tau1 + tau2``.  Missing times are None
    and ``censored`` is set whenever ``tau`` was not observed.
    """

    tau1: int | None
    tau2: int | None
    tau: int | None
    censored: bool


def stopping_times(volumes: Iterable[float], epsilon: float) -> StoppingTimes:
    v = np.asarray(list(volumes) if not isinstance(volumes, np.ndarray) else volumes, dtype=np.float64)
    above = np.flatnonzero(v > 0.5)
    if above.size == 0:
        return StoppingTimes(None, None, None, True)
    tau1 = int(above[0])
    done = np.flatnonzero(1.0 - v[tau1:] <= epsilon / 2.0)
    if done.size == 0:
        return StoppingTimes(tau1, None, None, True)
    tau2 = int(done[0])
    return StoppingTimes(tau1, tau2, tau1 + tau2, False)


@dataclass
class RunResult:
    trace: np.ndarray
    times: StoppingTimes
    state: ProcessState

    def __iter__(self):
        return iter((self.trace, self.times, self.state))


def run(
    params: ProcessParams,
    sample_source: Iterable[float],
    keep_snapshots: bool = True,
    checkpoints: Iterable[int] = (),
) -> RunResult:
    """Apply ``params.horizon`` steps drawn from ``sample_source``.

    ``checkpoints`` lists times at which 2-eps coverage is recorded on the
    returned state as ``state.coverage_at`` (a dict t -> bool).
    """
    state = ProcessState(params.epsilon, keep_snapshots=keep_snapshots)
    marks = set(int(c) for c in checkpoints)
    coverage_at: dict[int, bool] = {}
    trace = np.empty(params.horizon + 1, dtype=np.float64)
    trace[0] = state.volume
    if 0 in marks:
        coverage_at[0] = state.two_eps_covered()
    it = iter(sample_source)
    for t in range(1, params.horizon + 1):
        try:
            x = next(it)
        except StopIteration:
            raise ValueError(f"sample source exhausted after {t - 1} of {params.horizon} samples") from None
        state.step(x)
        trace[t] = state.volume
        if t in marks:
            coverage_at[t] = state.two_eps_covered()
    state.coverage_at = coverage_at
    return RunResult(trace, stopping_times(trace, params.epsilon), state)


def next_volumes(approx_set: IntervalSet, xs, clipped: bool = False) -> np.ndarray:
    """Volume after one step, for each candidate sample in ``xs``.

    Uses inclusion-exclusion on [-1, 1]: the measure of ``A``, plus that of
    the moved copy, minus their overlap.  Pairwise overlaps of two disjoint
    families are themselves disjoint, so they add up exactly.  With
    ``clipped=True`` only the part of ``A`` inside [-1, 1] is moved.
    """
    xs = np.asarray(xs, dtype=np.float64)
    reach = float(np.max(np.abs(xs))) if xs.size else 0.0
    near = approx_set.clip(TARGET_LO - reach - 1.0, TARGET_HI + reach + 1.0)
    src = near.clip(TARGET_LO, TARGET_HI) if clipped else near
    base = near.measure_within(TARGET_LO, TARGET_HI)
    out = np.empty(xs.shape, dtype=np.float64)
    if not src:
        out.fill(base / 2.0)
        return out
    a, b = near.lo[:, None], near.hi[:, None]
    c, d = src.lo[None, :], src.hi[None, :]
    chunk = max(1, 4_000_000 // (len(near) * len(src)))
    for s in range(0, xs.size, chunk):
        x = xs[s : s + chunk, None, None]
        moved_lo = np.maximum(c + x, TARGET_LO)
        moved_hi = np.minimum(d + x, TARGET_HI)
        moved = np.sum(np.maximum(moved_hi - moved_lo, 0.0), axis=(1, 2))
        overlap = np.maximum(np.minimum(b, moved_hi) - np.maximum(a, moved_lo), 0.0)
        out[s : s + chunk] = (base + moved - np.sum(overlap, axis=(1, 2))) / 2.0
    return out
