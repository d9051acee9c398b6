"""Witness reconstruction and the independent oracles used to check it.

* :func:`reconstruct` walks the snapshot history backwards and reads off an
  explicit subset whose sum lies within ``epsilon`` of the target.
* :func:`brute_force_best` enumerates all ``2**n`` subsets.
* :func:`grid_dp_approximable` is the classic pseudo-polynomial table over a
  uniform grid of sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .intervals import IntervalSet

MAX_BRUTE_FORCE_N = 25
RECONSTRUCTION_SLACK = 1e-9


class NotApproximable(ValueError):
    """The target is not in the final approximable set."""


class ReconstructionDrift(RuntimeError):
    """The backward walk ended too far from zero; indicates a float inconsistency."""


@dataclass(frozen=True)
class SubsetSolution:
    indices: frozenset[int]  # 1-based
    achieved_sum: float
    error: float

    @property
    def sorted_indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.indices))


def subset_sum(samples: Sequence[float], indices) -> float:
    """Left-to-right sum of ``samples`` at 1-based ``indices`` in increasing order."""
    total = 0.0
    for i in sorted(indices):
        total += samples[i - 1]
    return total


def reconstruct(
    snapshots: Sequence[IntervalSet],
    samples: Sequence[float],
    z: float,
    epsilon: float,
) -> SubsetSolution:
    """Recover ``S`` with ``|z - sum(S)| < epsilon`` from the set history.

    Going from ``t = n`` down to 1, index ``t`` is skipped whenever the
    current residual was already approximable at time ``t - 1``; otherwise it
    is taken and subtracted.  Exclusion is tried first, so the result is
    deterministic.
    """
    n = len(samples)
    if len(snapshots) != n + 1:
        raise ValueError(f"need {n + 1} snapshots for {n} samples, got {len(snapshots)}")
    if not snapshots[n].contains(z):
        raise NotApproximable(f"{z!r} is not {epsilon}-approximated by the given samples")
    residual = float(z)
    chosen: list[int] = []
    for t in range(n, 0, -1):
        prev = snapshots[t - 1]
        if prev.contains(residual):
            continue
        shifted = residual - samples[t - 1]
        # float rounding can leave both candidates a hair outside; keep the nearer one
        if not prev.contains(shifted) and prev.distance(residual) < prev.distance(shifted):
            continue
        chosen.append(t)
        residual = shifted
    slack = RECONSTRUCTION_SLACK * max(n, 1)
    if abs(residual) >= epsilon + slack:
        raise ReconstructionDrift(f"walk ended at residual {residual!r}, beyond {epsilon} + {slack}")
    achieved = subset_sum(samples, chosen)
    return SubsetSolution(frozenset(chosen), achieved, abs(z - achieved))


def all_subset_sums(samples: Sequence[float]) -> np.ndarray:
    """Array of length ``2**n``; entry ``m`` is the sum over the bits of ``m``
    (bit ``i`` selects sample ``i + 1``), accumulated in increasing index order.
    """
    sums = np.zeros(1, dtype=np.float64)
    for x in samples:
        sums = np.concatenate((sums, sums + x))
    return sums


def _mask_indices(mask: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def brute_force_best(samples: Sequence[float], z: float) -> SubsetSolution:
    """Subset minimising ``|z - sum|``; ties go to the lexicographically
    smallest sorted index tuple.
    """
    n = len(samples)
    if n > MAX_BRUTE_FORCE_N:
        raise ValueError(f"brute force is limited to n <= {MAX_BRUTE_FORCE_N}, got {n}")
    sums = all_subset_sums(samples)
    err = np.abs(z - sums)
    best = err.min()
    masks = np.flatnonzero(err == best)
    idx = min(_mask_indices(int(m)) for m in masks)
    achieved = subset_sum(samples, idx)
    return SubsetSolution(frozenset(idx), achieved, abs(z - achieved))


def _nearest_gap(points: np.ndarray, zs) -> np.ndarray:
    """Distance from each query to the nearest entry of the sorted ``points``."""
    zs = np.atleast_1d(np.asarray(zs, dtype=np.float64))
    pos = np.searchsorted(points, zs)
    last = points.size - 1
    left = np.abs(zs - points[np.clip(pos - 1, 0, last)])
    right = np.abs(points[np.clip(pos, 0, last)] - zs)
    return np.minimum(left, right)


def brute_force_approximable(samples: Sequence[float], zs, epsilon: float) -> np.ndarray:
    """For each query point, whether some subset sum lies strictly within ``epsilon``."""
    return _nearest_gap(np.sort(all_subset_sums(samples)), zs) < epsilon


def boundary_distance(samples: Sequence[float], zs, epsilon: float) -> np.ndarray:
    """Distance from each query point to the nearest ball boundary ``s +- epsilon``."""
    sums = all_subset_sums(samples)
    return _nearest_gap(np.sort(np.concatenate((sums - epsilon, sums + epsilon))), zs)


@dataclass(frozen=True)
class GridDpParams:
    resolution: float
    range: float

    def __post_init__(self):
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if not (self.range > 0 and math.isfinite(self.range)):
            raise ValueError(f"range must be positive, got {self.range}")

    def guard_band(self, n: int) -> float:
        """Worst-case displacement of a grid-tracked sum from the true sum."""
        return n * self.resolution / 2.0


class GridDpTable:
    """Reachable-sum table for one sample sequence.

    Sums live on cells of width ``resolution`` centred on multiples of it,
    spanning ``[-range, range]``.  Each sample is rounded to a whole number
    of cells, so a tracked sum may be off by ``n * resolution / 2``; answers
    agree with the exact set away from that band.
    """

    def __init__(self, samples: Sequence[float], params: GridDpParams):
        n = len(samples)
        if params.range < n:
            raise ValueError(f"range {params.range} cannot hold sums of {n} samples")
        self.params = params
        self.n = n
        half = int(math.ceil(params.range / params.resolution))
        reach = np.zeros(2 * half + 1, dtype=bool)
        reach[half] = True  # empty subset
        for x in samples:
            k = int(round(x / params.resolution))
            if k > 0:
                reach[k:] |= reach[:-k].copy()
            elif k < 0:
                reach[:k] |= reach[-k:].copy()
        self.centers = (np.flatnonzero(reach) - half) * params.resolution

    def approximable(self, zs, epsilon: float) -> np.ndarray:
        return _nearest_gap(self.centers, zs) < epsilon


def grid_dp_approximable(
    samples: Sequence[float],
    z: float,
    epsilon: float,
    params: GridDpParams | None = None,
) -> bool:
    """Pseudo-polynomial check whether some subset sum lies within ``epsilon`` of ``z``.

    Defaults to ``resolution = epsilon / 4`` and ``range = n``.
    """
    n = len(samples)
    if params is None:
        params = GridDpParams(resolution=epsilon / 4.0, range=float(max(n, 1)))
    if params.resolution > epsilon / 4.0:
        raise ValueError(f"resolution {params.resolution} exceeds epsilon/4 = {epsilon / 4.0}")
    return bool(GridDpTable(samples, params).approximable(z, epsilon)[0])


ORACLE_EPSILONS = (0.05, 0.1, 0.25)
BOUNDARY_GUARD = 1e-8


@dataclass
class OracleCheckReport:
    instances: int = 0
    queries: int = 0
    positives: int = 0
    membership_mismatches: int = 0
    reconstructions: int = 0
    reconstruction_failures: int = 0
    grid_queries: int = 0
    grid_mismatches: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.membership_mismatches or self.reconstruction_failures or self.grid_mismatches)


def _queries(rng: np.random.Generator, samples, epsilon: float, count: int) -> np.ndarray:
    """Query points off every ball boundary: half in [-1, 1], half over the sum range."""
    lo = sum(x for x in samples if x < 0) - 2 * epsilon
    hi = sum(x for x in samples if x > 0) + 2 * epsilon
    out: list[float] = []
    while len(out) < count:
        z = np.concatenate((rng.uniform(-1, 1, count), rng.uniform(lo, hi, count)))
        z = z[boundary_distance(samples, z, epsilon) >= BOUNDARY_GUARD]
        out.extend(z.tolist())
    return np.asarray(out[:count])


def oracle_check(
    max_n: int,
    cases: int,
    seed: int,
    queries: int = 100,
    epsilons: Sequence[float] = ORACLE_EPSILONS,
    grid_cells_per_eps: int = 64,
) -> OracleCheckReport:
    """Compare the interval-set process with exhaustive enumeration.

    For each random instance, membership of every query point must agree
    with brute force, every positive point must yield a witness within
    ``epsilon + 1e-9 n``, and the grid table must agree on points that lie
    clear of its rounding band.
    """
    from .process import ProcessState

    if not 1 <= max_n <= MAX_BRUTE_FORCE_N:
        raise ValueError(f"max_n must lie in [1, {MAX_BRUTE_FORCE_N}], got {max_n}")
    rng = np.random.default_rng(seed)
    report = OracleCheckReport()
    for case in range(cases):
        n = int(rng.integers(1, max_n + 1))
        epsilon = float(epsilons[int(rng.integers(len(epsilons)))])
        samples = rng.uniform(-1, 1, n).tolist()
        state = ProcessState(epsilon)
        for x in samples:
            state.step(x)
        zs = _queries(rng, samples, epsilon, queries)
        got = state.approx_set.contains_many(zs)
        want = brute_force_approximable(samples, zs, epsilon)
        report.instances += 1
        report.queries += zs.size
        report.positives += int(got.sum())
        bad = np.flatnonzero(got != want)
        report.membership_mismatches += bad.size
        for j in bad[:3]:
            report.failures.append(f"case {case}: membership of {zs[j]!r} differs (n={n}, eps={epsilon})")
        slack = RECONSTRUCTION_SLACK * n
        for z in zs[got]:
            report.reconstructions += 1
            try:
                sol = reconstruct(state.snapshots, samples, float(z), epsilon)
                direct = subset_sum(samples, sol.indices)
                sound = abs(z - direct) < epsilon + slack
            except (NotApproximable, ReconstructionDrift) as exc:
                sound = False
                report.failures.append(f"case {case}: {exc}")
            if not sound:
                report.reconstruction_failures += 1
        params = GridDpParams(resolution=epsilon / grid_cells_per_eps, range=float(n))
        table = GridDpTable(samples, params)
        clear = boundary_distance(samples, zs, epsilon) > params.guard_band(n) + BOUNDARY_GUARD
        grid = table.approximable(zs[clear], epsilon)
        report.grid_queries += int(clear.sum())
        report.grid_mismatches += int(np.count_nonzero(grid != want[clear]))
    return report
