"""Seeded trial runner and statistical checks against the tail bounds.

Seeding: trial ``i`` of stream ``s`` draws from ``numpy.random.default_rng``
seeded with ``derive_seed(master_seed, i, s)``, a SplitMix64 finaliser
applied twice (once to mix the stream tag into the master seed, once to mix
in the index).  Results depend only on the configuration, never on the
number of workers or completion order.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np

from . import bounds
from .process import ProcessParams, ProcessState, StoppingTimes, check_epsilon, next_volumes, run

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15

# stream tags keep trial, harvest and replay draws independent
STREAM_TRIALS = 0
STREAM_HARVEST = 1
STREAM_REPLAY = 2

LOWER_LEVELS = (0.05, 0.1, 0.2, 0.3, 0.45)
UPPER_LEVELS = (0.6, 0.8)
LOWER_CAP = 0.45
DEFAULT_REPLAYS = 10_000
DEFAULT_CONFIDENCE = 0.99
GROWTH_SIGMAS = 3.0
TAIL_SIGMAS = 4.0


def splitmix64(x: int) -> int:
    x = (x + GOLDEN64) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, index: int, stream: int = STREAM_TRIALS) -> int:
    return splitmix64(splitmix64((master_seed ^ (stream * GOLDEN64)) & MASK64) ^ (index & MASK64))


def worker_count() -> int:
    """Worker processes to use; ``RSS_LAB_THREADS`` caps the CPU count."""
    n = os.cpu_count() or 1
    cap = os.environ.get("RSS_LAB_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"RSS_LAB_THREADS must be an integer, got {cap!r}") from None
    return max(1, n)


def parallel_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """Ordered map, fanned out over processes when more than one worker is allowed."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


class Distribution(enum.Enum):
    UNIFORM_PM1 = "uniform_pm1"
    # densities bounded below on a symmetric window; reserved, not sampled yet
    UNIFORM_AB = "uniform_ab"


def draw_samples(rng: np.random.Generator, size: int, distribution: Distribution = Distribution.UNIFORM_PM1):
    if distribution is Distribution.UNIFORM_PM1:
        return rng.uniform(-1.0, 1.0, size=size)
    raise NotImplementedError(f"sampling from {distribution.value} is not supported")


@dataclass(frozen=True)
class TrialConfig:
    epsilon: float
    horizon: int
    trials: int
    master_seed: int = 0
    distribution: Distribution = Distribution.UNIFORM_PM1
    keep_snapshots: bool = False
    checkpoints: tuple[int, ...] = ()

    def __post_init__(self):
        check_epsilon(self.epsilon)
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")
        if not 0 <= self.master_seed <= MASK64:
            raise ValueError("master_seed must fit in 64 unsigned bits")


@dataclass
class TrialReport:
    index: int
    seed: int
    trace: np.ndarray
    times: StoppingTimes
    eps_covered: bool
    two_eps_covered: bool
    max_intervals: int
    coverage_at: dict[int, bool] = field(default_factory=dict)
    final_state: ProcessState | None = None


def run_trial(config: TrialConfig, index: int, samples=None) -> TrialReport:
    seed = derive_seed(config.master_seed, index, STREAM_TRIALS)
    if samples is None:
        samples = draw_samples(np.random.default_rng(seed), config.horizon, config.distribution)
    result = run(
        ProcessParams(config.epsilon, config.horizon),
        samples,
        keep_snapshots=config.keep_snapshots,
        checkpoints=config.checkpoints,
    )
    state = result.state
    volume_ok = result.trace[-1] >= 1.0 - config.epsilon / 2.0
    covered2 = state.two_eps_covered()
    if volume_ok and not covered2:
        raise AssertionError(f"trial {index}: volume {result.trace[-1]!r} >= 1 - eps/2 without 2-eps coverage")
    return TrialReport(
        index=index,
        seed=seed,
        trace=result.trace,
        times=result.times,
        eps_covered=state.eps_covered(),
        two_eps_covered=covered2,
        max_intervals=state.max_intervals,
        coverage_at=dict(state.coverage_at),
        final_state=state if config.keep_snapshots else None,
    )


def run_trials(config: TrialConfig, workers: int | None = None) -> list[TrialReport]:
    return parallel_map(partial(run_trial, config), range(config.trials), workers)


# -- estimators ---------------------------------------------------------------


@dataclass(frozen=True)
class EstimateReport:
    check: str
    label: str
    point: float
    stderr: float
    ci_lo: float
    ci_hi: float
    n_samples: int
    censored_count: int = 0
    bound: float | None = None
    applicable: bool = True
    violation: bool = False


def proportion_report(check: str, label: str, successes: int, n: int, censored: int = 0,
                      confidence: float = DEFAULT_CONFIDENCE, **kw) -> EstimateReport:
    p = successes / n
    lo, hi = bounds.wilson_interval(successes, n, confidence)
    return EstimateReport(check, label, p, math.sqrt(p * (1 - p) / n), lo, hi, n, censored, **kw)


@dataclass
class HarvestedState:
    level: float
    run_index: int
    t: int
    volume: float
    state: ProcessState


def harvest_states(
    epsilon: float,
    master_seed: int,
    per_level: int = 5,
    levels: Iterable[float] = LOWER_LEVELS + UPPER_LEVELS,
    cap: float = LOWER_CAP,
    max_steps: int = 10_000,
) -> list[HarvestedState]:
    """Pause fresh runs once the volume first reaches each level.

    For levels below 1/2 the paused state must not exceed ``cap``; if the
    step that crossed the level overshoots it, the state just before is kept.
    States are stored without history and clipped to the reach of one step.
    """
    bank = []
    k = 0
    for level in levels:
        for r in range(per_level):
            rng = np.random.default_rng(derive_seed(master_seed, k, STREAM_HARVEST))
            k += 1
            state = ProcessState(epsilon, keep_snapshots=False)
            prev = state.local_view()
            while state.volume < level and state.t < max_steps:
                prev = state.local_view()
                state.step(draw_samples(rng, 1)[0])
            if state.volume < level:
                continue
            if level < 0.5 and state.volume > cap:
                picked = prev
            else:
                picked = state.local_view()
            bank.append(HarvestedState(level, r, picked.t, picked.volume, picked))
    return bank


def _replay_draws(master_seed: int, index: int, replays: int) -> np.ndarray:
    return draw_samples(np.random.default_rng(derive_seed(master_seed, index, STREAM_REPLAY)), replays)


def _growth_one(args) -> tuple[float, float, int, float, float]:
    item, master_seed, index, replays, beta = args
    xs = _replay_draws(master_seed, index, replays)
    nxt = next_volumes(item.state.approx_set, xs)
    clipped = next_volumes(item.state.approx_set, xs, clipped=True)
    v = item.volume
    hits = int(np.count_nonzero(nxt >= v * (1.0 + beta)))
    return float(nxt.mean()), float(nxt.std(ddof=1) / math.sqrt(replays)), hits, float(clipped.max()), float(
        np.max(clipped - nxt)
    )


def growth_bound(v: float) -> float:
    return v * (1.0 + (1.0 - v) / 4.0)


def _replay_stats(bank, master_seed, replays, beta, workers):
    jobs = [(item, master_seed, i, replays, beta) for i, item in enumerate(bank)]
    return parallel_map(_growth_one, jobs, workers)


def estimate_growth(
    bank: Sequence[HarvestedState],
    master_seed: int,
    replays: int = DEFAULT_REPLAYS,
    workers: int | None = None,
    _stats=None,
) -> list[EstimateReport]:
    """Mean next-step volume per banked state against ``v (1 + (1 - v)/4)``.

    States at volume below 1/2 report as ``growth``, the rest as
    ``growth_upper``.  A violation needs ``mean + 3 stderr < bound``.
    """
    stats = _stats or _replay_stats(bank, master_seed, replays, bounds.DEFAULT_BETA, workers)
    out = []
    for i, (item, (mean, se, _, _, _)) in enumerate(zip(bank, stats)):
        b = growth_bound(item.volume)
        check = "growth" if item.volume < 0.5 else "growth_upper"
        out.append(EstimateReport(
            check, f"state={i}:v={item.volume:.6f}", mean, se,
            mean - GROWTH_SIGMAS * se, mean + GROWTH_SIGMAS * se, replays,
            bound=b, violation=mean + GROWTH_SIGMAS * se < b,
        ))
    return out


def estimate_exit_probability(
    bank: Sequence[HarvestedState],
    master_seed: int,
    beta: float = bounds.DEFAULT_BETA,
    replays: int = DEFAULT_REPLAYS,
    workers: int | None = None,
    _stats=None,
) -> list[EstimateReport]:
    """Frequency of ``v_{t+1} >= v_t (1 + beta)`` per state below volume 1/2.

    A violation needs the upper end of the 99% Wilson interval below
    ``p_beta``.  The clipped one-step volume is checked against ``2 v_t``.
    """
    p = bounds.p_beta(beta)
    stats = _stats or _replay_stats(bank, master_seed, replays, beta, workers)
    out = []
    for i, (item, (_, _, hits, clipped_max, clipped_excess)) in enumerate(zip(bank, stats)):
        if item.volume >= 0.5:
            continue
        if clipped_max > 2.0 * item.volume + 1e-12 or clipped_excess > 1e-12:
            raise AssertionError(f"state {i}: clipped volume exceeds 2 v_t or the real next volume")
        rep = proportion_report("exit_probability", f"state={i}:v={item.volume:.6f}", hits, replays, bound=p)
        out.append(EstimateReport(**{**rep.__dict__, "violation": rep.ci_hi < p}))
    return out


def verify_state_bank(
    epsilon: float,
    master_seed: int,
    beta: float = bounds.DEFAULT_BETA,
    replays: int = DEFAULT_REPLAYS,
    per_level: int = 5,
    workers: int | None = None,
) -> tuple[list[HarvestedState], list[EstimateReport], list[EstimateReport]]:
    """Harvest a bank and run both conditional checks on one shared set of replays."""
    bank = harvest_states(epsilon, master_seed, per_level=per_level)
    stats = _replay_stats(bank, master_seed, replays, beta, workers)
    growth = estimate_growth(bank, master_seed, replays, _stats=stats)
    exits = estimate_exit_probability(bank, master_seed, beta, replays, _stats=stats)
    return bank, growth, exits


@dataclass(frozen=True)
class TailRow:
    t: int
    extrapolated: bool  # t beyond the horizon; empirical values are CDF(horizon)
    tau1: float
    tau2: float
    tau: float
    tau1_bound: float | None
    tau2_bound: float | None
    tau_bound: float | None


def _cdf(values: list[int | None], t: int) -> float:
    return sum(1 for v in values if v is not None and v <= t) / len(values)


def tail_times(horizon: int, epsilon: float, beta: float = bounds.DEFAULT_BETA) -> list[tuple[int, bool]]:
    """Evaluation times: 1..horizon, plus powers-of-two multiples of each
    bound threshold that lies past the horizon.
    """
    times = [(t, False) for t in range(1, horizon + 1)]
    extra = set()
    for start in (bounds.tau1_threshold(epsilon, beta), bounds.tau_combined_threshold(epsilon)):
        if start > horizon:
            extra.update(int(math.ceil(start - 1e-9)) * 2**j for j in range(4))
    times.extend((t, True) for t in sorted(extra))
    return times


def estimate_tau_tails(
    config: TrialConfig,
    beta: float = bounds.DEFAULT_BETA,
    reports: Sequence[TrialReport] | None = None,
) -> list[TailRow]:
    """Empirical CDFs of tau1, tau2 and tau next to the bounds.

    Censored trials count as "not yet stopped", so every empirical value is a
    lower estimate.  Past the horizon the CDF at the horizon is reused, which
    is still a valid lower estimate because CDFs are non-decreasing.
    """
    if reports is None:
        reports = run_trials(config)
    t1 = [r.times.tau1 for r in reports]
    t2 = [r.times.tau2 for r in reports]
    tt = [r.times.tau for r in reports]
    rows = []
    for t, extrapolated in tail_times(config.horizon, config.epsilon, beta):
        s = min(t, config.horizon)
        rows.append(TailRow(
            t, extrapolated, _cdf(t1, s), _cdf(t2, s), _cdf(tt, s),
            _maybe(bounds.tau1_tail_bound, t, config.epsilon, beta),
            bounds.tau2_tail_bound(t, config.epsilon),
            _maybe(bounds.tau_combined_bound, t, config.epsilon),
        ))
    return rows


def _maybe(fn, *args):
    try:
        return fn(*args)
    except bounds.BoundInapplicable:
        return None


def tail_reports(rows: Sequence[TailRow], trials: int, censored: dict[str, int]) -> list[EstimateReport]:
    """Turn tail rows into per-check reports; a violation needs
    ``empirical + 4 stderr < bound`` at an applicable time.
    """
    out = []
    for row in rows:
        for check, emp, bnd in (
            ("tau1_tail", row.tau1, row.tau1_bound),
            ("tau2_tail", row.tau2, row.tau2_bound),
            ("tau_tail", row.tau, row.tau_bound),
        ):
            applicable = bnd is not None and (check != "tau2_tail" or bnd > 0)
            se = math.sqrt(emp * (1 - emp) / trials)
            lo, hi = bounds.wilson_interval(round(emp * trials), trials)
            out.append(EstimateReport(
                check, f"t={row.t}" + ("+" if row.extrapolated else ""), emp, se, lo, hi, trials,
                censored[check], bound=bnd, applicable=applicable,
                violation=applicable and emp + TAIL_SIGMAS * se < bnd,
            ))
    return out


def censored_counts(reports: Sequence[TrialReport]) -> dict[str, int]:
    return {
        "tau1_tail": sum(r.times.tau1 is None for r in reports),
        "tau2_tail": sum(r.times.tau2 is None for r in reports),
        "tau_tail": sum(r.times.tau is None for r in reports),
    }


def estimate_coverage(config: TrialConfig, reports: Sequence[TrialReport] | None = None) -> EstimateReport:
    """Fraction of trials whose final set 2-eps-covers [-1, 1], with a Wilson interval."""
    if reports is None:
        reports = run_trials(config)
    hits = sum(r.two_eps_covered for r in reports)
    return proportion_report("coverage", f"n={config.horizon}", hits, len(reports))


def coverage_curve(
    epsilon: float,
    horizons: Sequence[int],
    trials: int,
    master_seed: int,
    workers: int | None = None,
) -> list[EstimateReport]:
    """Coverage per horizon from one run per trial to the largest horizon.

    Sample streams are prefix-stable, so trial ``i`` at horizon ``n`` sees
    exactly the first ``n`` draws of its longest run.
    """
    horizons = sorted(set(int(h) for h in horizons))
    config = TrialConfig(epsilon, horizons[-1], trials, master_seed, checkpoints=tuple(horizons))
    reports = run_trials(config, workers)
    return [
        proportion_report("coverage", f"n={n}", sum(r.coverage_at[n] for r in reports), trials)
        for n in horizons
    ]
